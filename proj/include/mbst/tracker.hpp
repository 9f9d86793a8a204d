#pragma once

// Multi-branch siamese-style tracker. The exemplar is cropped once from the
// first frame and embedded by every branch; each later frame is searched with
// the currently selected branch over a small scale pyramid, and the selection
// is refreshed every `selection_interval` frames.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mbst/branches.hpp"
#include "mbst/correlation.hpp"
#include "mbst/embedding_store.hpp"
#include "mbst/error.hpp"
#include "mbst/image.hpp"
#include "mbst/selection.hpp"

namespace mbst {

struct TrackerConfig {
  int exemplar_side = 127;
  int search_side = 255;
  std::vector<double> scale_factors = {1.0 / 1.0375, 1.0, 1.0375};
  double scale_penalty = 0.9745;
  double scale_damping = 0.59;
  double window_influence = 0.176;
  int upsample_factor = 16;
  int selection_interval = 7;
  std::vector<BranchConfigEntry> branches = {{"intensity"}, {"gradient_hist"}, {"color_hist"}};

  void validate() const {
    if (exemplar_side < 8 || exemplar_side >= search_side) {
      throw Error(ErrorCode::kInvalidArgument, "exemplar side must be at least 8 and smaller than the search side");
    }
    if (selection_interval < 1) throw Error(ErrorCode::kInvalidArgument, "selection interval must be at least 1");
    if (scale_factors.empty()) throw Error(ErrorCode::kInvalidArgument, "at least one scale factor is required");
    for (double f : scale_factors) {
      if (!(f > 0.0)) throw Error(ErrorCode::kInvalidArgument, "scale factors must be positive");
    }
    if (!(scale_penalty > 0.0 && scale_penalty <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "scale penalty must lie in (0,1]");
    }
    if (!(scale_damping >= 0.0 && scale_damping <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "scale damping must lie in [0,1]");
    }
    if (!(window_influence >= 0.0 && window_influence <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "window influence must lie in [0,1]");
    }
    if (upsample_factor < 1) throw Error(ErrorCode::kInvalidArgument, "upsample factor must be at least 1");
    if (branches.empty()) throw Error(ErrorCode::kInvalidArgument, "no branches configured");
  }

  int middle_scale() const { return static_cast<int>(scale_factors.size()) / 2; }
};

// Image-plane displacement of a response peak from the map center.
inline Point displacement_to_image(int peak_row, int peak_col, int map_side, int upsample_factor, double total_stride,
                                   double source_scale) {
  const double center = (map_side - 1) / 2.0;
  const double k = total_stride / upsample_factor * source_scale;
  return {(peak_col - center) * k, (peak_row - center) * k};
}

struct TrackerState {
  Point center;
  double width = 0.0;
  double height = 0.0;
  std::vector<FeatureMap> exemplar_maps;  // indexed by branch id
  SelectionState selection;
  std::uint32_t frame_index = 0;
  bool initialized = false;

  BoundingBox box() const { return BoundingBox::from_center(center, width, height); }
};

struct FrameResult {
  std::uint32_t frame_index = 0;
  BoundingBox box;
  int active_branch = 0;
  bool selected = false;                // selection ran on this frame
  std::vector<SelectionScore> scores;   // filled when selection ran with >1 branch
  int scale_index = 0;
};

struct WorkCounters {
  std::uint64_t frames = 0;
  std::uint64_t selection_frames = 0;
  std::uint64_t selection_embeddings = 0;  // middle-scale embeddings by every branch
  std::uint64_t scale_embeddings = 0;      // active-branch embeddings over the pyramid
};

// Common interface for anything the evaluation harness can drive.
class TrackerBase {
 public:
  virtual ~TrackerBase() = default;
  virtual FrameResult init(const ImageBuffer& frame, const BoundingBox& box) = 0;
  virtual FrameResult track(const ImageBuffer& frame) = 0;
};

class MultiBranchTracker : public TrackerBase {
 public:
  explicit MultiBranchTracker(TrackerConfig cfg, const EmbeddingStore* store = nullptr, std::uint32_t sequence_id = 0)
      : cfg_(std::move(cfg)), store_(store), sequence_id_(sequence_id) {
    cfg_.validate();
    branches_ = register_builtin_branches(cfg_.branches);
  }

  const TrackerConfig& config() const { return cfg_; }
  const std::vector<BranchSpec>& branches() const { return branches_; }
  const TrackerState& state() const { return state_; }
  const WorkCounters& counters() const { return counters_; }

  FrameResult init(const ImageBuffer& frame, const BoundingBox& box) override {
    require_valid(box);
    state_ = TrackerState{};
    counters_ = WorkCounters{};
    state_.center = box.center();
    state_.width = box.w;
    state_.height = box.h;
    state_.frame_index = 0;

    const double z_crop = context_crop_side(box.w, box.h);
    const Patch exemplar = crop_square(frame, state_.center, z_crop, cfg_.exemplar_side);
    state_.exemplar_maps.clear();
    for (const auto& b : branches_) {
      state_.exemplar_maps.push_back(embed(b, exemplar, context(PatchRole::exemplar())));
    }

    state_.selection = make_selection_state(cfg_.selection_interval, 0);
    FrameResult result;
    result.frame_index = 0;
    result.box = box;
    result.scale_index = cfg_.middle_scale();
    // Selection runs on the first frame's own search region so that an
    // active branch is defined before the second frame.
    const int mid = cfg_.middle_scale();
    const Patch search = crop_square(frame, state_.center, search_crop_side() * cfg_.scale_factors[mid],
                                     cfg_.search_side);
    const int chosen = run_selection(search, result.scores, nullptr);
    result.selected = true;
    state_.selection = mbst::advance(state_.selection, chosen);
    result.active_branch = state_.selection.active_branch;
    state_.initialized = true;
    return result;
  }

  // Moves the target estimate without touching the frozen exemplar maps or
  // the selection schedule.
  void reposition(const BoundingBox& box) {
    if (!state_.initialized) throw Error(ErrorCode::kNotInitialized, "reposition called before init");
    require_valid(box);
    state_.center = box.center();
    state_.width = box.w;
    state_.height = box.h;
  }

  FrameResult track(const ImageBuffer& frame) override {
    if (!state_.initialized) throw Error(ErrorCode::kNotInitialized, "track called before init");
    ++state_.frame_index;
    ++counters_.frames;

    const int n_scales = static_cast<int>(cfg_.scale_factors.size());
    const int mid = cfg_.middle_scale();
    const std::vector<Patch> pyramid =
        build_search_pyramid(frame, state_.center, search_crop_side(), cfg_.scale_factors, cfg_.search_side);

    FrameResult result;
    result.frame_index = state_.frame_index;
    std::optional<int> chosen;
    std::optional<FeatureMap> mid_map;
    if (selection_due(state_.selection)) {
      FeatureMap reuse;
      chosen = run_selection(pyramid[mid], result.scores, &reuse);
      if (!reuse.empty()) mid_map = std::move(reuse);
      result.selected = true;
    }
    const int active = chosen.value_or(state_.selection.active_branch);
    const BranchSpec& spec = branches_[active];
    const FeatureMap& exemplar = state_.exemplar_maps[active];

    int best_scale = mid;
    double best_score = 0.0;
    std::vector<ResponseMap> responses(n_scales);
    for (int s = 0; s < n_scales; ++s) {
      FeatureMap search;
      if (s == mid && mid_map) {
        search = *mid_map;
      } else {
        search = embed(spec, pyramid[s], context(PatchRole::search(s)));
        ++counters_.scale_embeddings;
      }
      responses[s] = xcorr(exemplar, search);
      responses[s].scale_index = s;
      responses[s].branch_id = active;
    }
    for (int s = 0; s < n_scales; ++s) {
      const double peak = argmax(responses[s]).value;
      // Shrinks the peak toward zero whichever its sign.
      const double score = s == mid ? peak : peak - (1.0 - cfg_.scale_penalty) * std::abs(peak);
      // Ties go to the middle scale.
      if (s == 0 || score > best_score || (score == best_score && s == mid)) {
        best_score = score;
        best_scale = s;
      }
    }

    const ResponseMap windowed = apply_cosine_window(responses[best_scale], cfg_.window_influence);
    const ResponseMap up = upsample_response(windowed, cfg_.upsample_factor);
    const Peak peak = argmax(up);
    const Point d = displacement_to_image(peak.row, peak.col, up.height, cfg_.upsample_factor, spec.stride,
                                          pyramid[best_scale].source_scale);
    state_.center.x += d.x;
    state_.center.y += d.y;
    const double factor = cfg_.scale_factors[best_scale];
    const double size_scale = (1.0 - cfg_.scale_damping) + cfg_.scale_damping * factor;
    state_.width *= size_scale;
    state_.height *= size_scale;

    state_.selection = mbst::advance(state_.selection, chosen);
    result.active_branch = active;
    result.scale_index = best_scale;
    result.box = state_.box();
    return result;
  }

 private:
  EmbedContext context(PatchRole role) const { return {store_, sequence_id_, state_.frame_index, role}; }

  double search_crop_side() const {
    return context_crop_side(state_.width, state_.height) * cfg_.search_side / cfg_.exemplar_side;
  }

  // Scores every branch on the middle-scale search patch and returns the
  // chosen id. With a single branch the choice is trivial and nothing is
  // embedded. `reuse`, when given, receives the chosen branch's search map.
  int run_selection(const Patch& search, std::vector<SelectionScore>& scores, FeatureMap* reuse) {
    ++counters_.selection_frames;
    if (branches_.size() == 1) return branches_.front().id;
    const int mid = cfg_.middle_scale();
    std::vector<FeatureMap> maps;
    maps.reserve(branches_.size());
    scores.clear();
    for (const auto& b : branches_) {
      maps.push_back(embed(b, search, context(PatchRole::search(mid))));
      ++counters_.selection_embeddings;
      ResponseMap r = xcorr(state_.exemplar_maps[b.id], maps.back());
      r.branch_id = b.id;
      r.scale_index = mid;
      scores.push_back(discriminative_power(r, b.weight));
    }
    state_.selection.last_scores = scores;
    const int chosen = select_branch(scores);
    if (reuse) *reuse = std::move(maps[chosen]);
    return chosen;
  }

  TrackerConfig cfg_;
  const EmbeddingStore* store_ = nullptr;
  std::uint32_t sequence_id_ = 0;
  std::vector<BranchSpec> branches_;
  TrackerState state_;
  WorkCounters counters_;
};

}  // namespace mbst
