#pragma once

// One-pass evaluation (OPE): every sequence is tracked once from its first
// ground-truth box with no re-initialization, then scored by precision and
// success curves. Sequences may run on several worker threads; results are
// always ordered by sequence name, so the report does not depend on the
// degree of parallelism.

#include <algorithm>
#include <atomic>
#include <bit>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "mbst/config_json.hpp"
#include "mbst/embedding_store.hpp"
#include "mbst/metrics.hpp"
#include "mbst/sequence.hpp"
#include "mbst/tracker.hpp"

namespace mbst {

struct SelectionEvent {
  std::uint32_t frame_index = 0;
  int chosen = 0;
  std::vector<SelectionScore> scores;
};

struct SequenceResult {
  std::string name;
  std::vector<std::string> attributes;
  bool ok = false;
  std::string error;
  std::vector<BoundingBox> boxes;
  std::vector<int> active_branches;
  std::vector<double> center_errors;
  std::vector<double> ious;
  PrecisionCurve precision;
  SuccessCurve success;
  std::vector<SelectionEvent> selections;

  double mean_iou() const {
    return ious.empty() ? 0.0 : std::accumulate(ious.begin(), ious.end(), 0.0) / ious.size();
  }
  double mean_center_error() const {
    return center_errors.empty() ? 0.0
                                 : std::accumulate(center_errors.begin(), center_errors.end(), 0.0) /
                                       center_errors.size();
  }
};

struct AggregateMetrics {
  int sequences = 0;
  double precision_at_20 = 0.0;
  double auc = 0.0;
  double mean_iou = 0.0;
  std::vector<double> precision_rates;
  std::vector<double> success_rates;
};

struct EvalReport {
  nlohmann::json config;
  std::vector<SequenceResult> sequences;  // sorted by name
  AggregateMetrics overall;
  std::map<std::string, AggregateMetrics> by_attribute;
};

// Builds the tracker for one sequence; `sequence_id` is the sequence's
// position in the name-sorted dataset.
using TrackerFactory = std::function<std::unique_ptr<TrackerBase>(const Sequence&, std::uint32_t sequence_id)>;

inline TrackerFactory multi_branch_factory(const TrackerConfig& cfg, const EmbeddingStore* store = nullptr) {
  return [cfg, store](const Sequence&, std::uint32_t id) -> std::unique_ptr<TrackerBase> {
    return std::make_unique<MultiBranchTracker>(cfg, store, id);
  };
}

// Scores an already computed trajectory against ground truth.
inline void score_trajectory(SequenceResult& r, const std::vector<BoundingBox>& truth) {
  if (r.boxes.size() != truth.size()) {
    throw Error(ErrorCode::kCountMismatch, "trajectory and ground truth lengths differ for " + r.name);
  }
  r.center_errors.clear();
  r.ious.clear();
  for (std::size_t i = 0; i < truth.size(); ++i) {
    r.center_errors.push_back(center_error(r.boxes[i], truth[i]));
    r.ious.push_back(iou(r.boxes[i], truth[i]));
  }
  r.precision = precision_curve(r.center_errors);
  r.success = success_curve(r.ious);
}

inline SequenceResult run_sequence(const Sequence& seq, TrackerBase& tracker) {
  SequenceResult r;
  r.name = seq.name;
  r.attributes = seq.attributes;
  seq.validate();
  auto record = [&](const FrameResult& fr) {
    r.boxes.push_back(fr.box);
    r.active_branches.push_back(fr.active_branch);
    if (fr.selected) r.selections.push_back({fr.frame_index, fr.active_branch, fr.scores});
  };
  record(tracker.init(seq.frame(0), seq.ground_truth.front()));
  for (std::size_t i = 1; i < seq.size(); ++i) record(tracker.track(seq.frame(i)));
  score_trajectory(r, seq.ground_truth);
  r.ok = true;
  return r;
}

inline AggregateMetrics aggregate(const std::vector<const SequenceResult*>& results) {
  AggregateMetrics a;
  a.precision_rates.assign(kPrecisionMaxThreshold + 1, 0.0);
  a.success_rates.assign(kSuccessSteps + 1, 0.0);
  for (const auto* r : results) {
    if (!r->ok) continue;
    ++a.sequences;
    a.precision_at_20 += r->precision.at20;
    a.auc += r->success.auc;
    a.mean_iou += r->mean_iou();
    for (std::size_t i = 0; i < a.precision_rates.size(); ++i) a.precision_rates[i] += r->precision.rates[i];
    for (std::size_t i = 0; i < a.success_rates.size(); ++i) a.success_rates[i] += r->success.rates[i];
  }
  if (a.sequences > 0) {
    const double n = a.sequences;
    a.precision_at_20 /= n;
    a.auc /= n;
    a.mean_iou /= n;
    for (double& v : a.precision_rates) v /= n;
    for (double& v : a.success_rates) v /= n;
  }
  return a;
}

struct OpeOptions {
  int jobs = 0;  // 0: hardware concurrency
  nlohmann::json config;  // snapshot stored in the report
};

inline EvalReport run_ope(const std::vector<Sequence>& dataset, const TrackerFactory& factory,
                          const OpeOptions& options = {}) {
  if (dataset.empty()) throw Error(ErrorCode::kEmptyInput, "dataset has no sequences");
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dataset[a].name < dataset[b].name; });

  std::vector<SequenceResult> results(dataset.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < order.size(); k = next++) {
      const Sequence& seq = dataset[order[k]];
      try {
        auto tracker = factory(seq, static_cast<std::uint32_t>(k));
        results[k] = run_sequence(seq, *tracker);
      } catch (const std::exception& e) {
        results[k] = SequenceResult{};
        results[k].name = seq.name;
        results[k].attributes = seq.attributes;
        results[k].ok = false;
        results[k].error = e.what();
      }
    }
  };
  int jobs = options.jobs > 0 ? options.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  jobs = std::min<int>(jobs, static_cast<int>(dataset.size()));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  EvalReport report;
  report.config = options.config;
  report.sequences = std::move(results);
  std::vector<const SequenceResult*> all;
  std::map<std::string, std::vector<const SequenceResult*>> by_attr;
  for (const auto& r : report.sequences) {
    all.push_back(&r);
    for (const auto& a : r.attributes) by_attr[a].push_back(&r);
  }
  report.overall = aggregate(all);
  for (const auto& [attr, rs] : by_attr) report.by_attribute[attr] = aggregate(rs);
  return report;
}

inline EvalReport run_ope(const std::vector<Sequence>& dataset, const TrackerConfig& cfg,
                          const EmbeddingStore* store = nullptr, int jobs = 0) {
  OpeOptions opt;
  opt.jobs = jobs;
  opt.config = cfg;
  return run_ope(dataset, multi_branch_factory(cfg, store), opt);
}

// Every non-empty subset of the configured branches, smallest first; within a
// size, in configuration order.
inline std::vector<std::vector<BranchConfigEntry>> branch_subsets(const std::vector<BranchConfigEntry>& branches) {
  const int n = static_cast<int>(branches.size());
  if (n == 0 || n > 16) throw Error(ErrorCode::kInvalidArgument, "ablation needs between 1 and 16 branches");
  std::vector<unsigned> masks;
  for (unsigned m = 1; m < (1u << n); ++m) masks.push_back(m);
  auto rank = [](unsigned m) { return std::make_pair(std::popcount(m), m); };
  std::stable_sort(masks.begin(), masks.end(), [&](unsigned a, unsigned b) { return rank(a) < rank(b); });
  std::vector<std::vector<BranchConfigEntry>> out;
  for (unsigned m : masks) {
    std::vector<BranchConfigEntry> subset;
    for (int i = 0; i < n; ++i) {
      if (m & (1u << i)) {
        BranchConfigEntry e = branches[i];
        e.id.reset();  // re-numbered contiguously within the subset
        subset.push_back(e);
      }
    }
    out.push_back(std::move(subset));
  }
  return out;
}

inline std::string subset_label(const std::vector<BranchConfigEntry>& subset) {
  std::string label;
  for (const auto& e : subset) label += (label.empty() ? "" : "+") + e.kind;
  return label;
}

struct AblationRow {
  std::string label;
  EvalReport report;
};

inline std::vector<AblationRow> run_ablation(const std::vector<Sequence>& dataset, const TrackerConfig& cfg,
                                             const EmbeddingStore* store = nullptr, int jobs = 0) {
  std::vector<AblationRow> rows;
  for (const auto& subset : branch_subsets(cfg.branches)) {
    TrackerConfig c = cfg;
    c.branches = subset;
    rows.push_back({subset_label(subset), run_ope(dataset, c, store, jobs)});
  }
  return rows;
}

struct SweepRow {
  int interval = 0;
  EvalReport report;
};

inline std::vector<SweepRow> run_interval_sweep(const std::vector<Sequence>& dataset, const TrackerConfig& cfg,
                                                const std::vector<int>& intervals,
                                                const EmbeddingStore* store = nullptr, int jobs = 0) {
  if (intervals.empty()) throw Error(ErrorCode::kInvalidArgument, "no selection intervals to sweep");
  std::vector<SweepRow> rows;
  for (int t : intervals) {
    TrackerConfig c = cfg;
    c.selection_interval = t;
    rows.push_back({t, run_ope(dataset, c, store, jobs)});
  }
  return rows;
}

}  // namespace mbst
