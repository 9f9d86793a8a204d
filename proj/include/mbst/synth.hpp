#pragma once

// Deterministic synthetic sequences with exact ground truth.
//
// The target is a saturated red square carrying vertical luminance stripes.
// It always differs from the neutral background (dark gray) in hue, texture
// and mean luminance. Appearance regimes change the background so that only
// one cue keeps the target visible:
//
//   color_distinct     background shares the stripes and the mean luminance,
//                      but has another hue              -> color histograms
//   gradient_distinct  background is the flat target color -> gradients
//   low_contrast       background has the target's hue and stripes and is
//                      slightly darker; all colors stay in the saturated
//                      S/V histogram bins              -> pooled intensity
//   occluded_band      neutral background, an opaque bar sweeps across the
//                      target in mid-phase
//   contrast_invert    neutral background; halfway through the phase the
//                      target and background luminances swap
//
// Pixel noise is Gaussian, drawn from a counter-based generator keyed on
// (seed, frame, pixel, channel), so frames can be rendered in any order.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "mbst/error.hpp"
#include "mbst/image.hpp"
#include "mbst/sequence.hpp"

namespace mbst {

enum class Regime { kColorDistinct, kGradientDistinct, kLowContrast, kOccludedBand, kContrastInvert };

inline std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::kColorDistinct: return "color_distinct";
    case Regime::kGradientDistinct: return "gradient_distinct";
    case Regime::kLowContrast: return "low_contrast";
    case Regime::kOccludedBand: return "occluded_band";
    case Regime::kContrastInvert: return "contrast_invert";
  }
  return "unknown";
}

inline Regime parse_regime(std::string_view name) {
  for (Regime r : {Regime::kColorDistinct, Regime::kGradientDistinct, Regime::kLowContrast, Regime::kOccludedBand,
                   Regime::kContrastInvert}) {
    if (to_string(r) == name) return r;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown regime '" + std::string(name) + "'");
}

struct MotionSegment {
  int frames = 0;  // frames this velocity applies to; the last segment extends to the end
  double vx = 0.0;
  double vy = 0.0;
};

struct AppearancePhase {
  Regime regime = Regime::kOccludedBand;
  int frames = 0;
};

struct SynthSpec {
  std::string name = "synth";
  int width = 320;
  int height = 240;
  int frame_count = 0;
  BoundingBox init_box{140.0, 100.0, 40.0, 40.0};
  std::vector<MotionSegment> motion;  // empty: static target
  double scale_end = 1.0;             // target size at the last frame relative to the first (linear ramp)
  bool bounce = true;                 // reflect velocity at the frame border
  std::vector<AppearancePhase> phases;
  double noise = 0.02;
  std::uint64_t seed = 1;
  bool occluder = false;              // draw an occluding bar in every phase, not only occluded_band
  int transition = 0;                 // frames over which a phase fades in from the previous one

  void validate() const {
    if (width < 16 || height < 16) throw Error(ErrorCode::kInvalidArgument, "synthetic frames must be at least 16x16");
    if (frame_count < 1) throw Error(ErrorCode::kInvalidArgument, "frame count must be positive");
    require_valid(init_box);
    if (phases.empty()) throw Error(ErrorCode::kInvalidArgument, "appearance program has no phases");
    int total = 0;
    for (const auto& p : phases) {
      if (p.frames < 1) throw Error(ErrorCode::kInvalidArgument, "every phase needs at least one frame");
      total += p.frames;
    }
    if (total != frame_count) {
      throw Error(ErrorCode::kInvalidArgument, "phases cover " + std::to_string(total) + " frames, sequence has " +
                                                   std::to_string(frame_count));
    }
    if (!(scale_end > 0.0)) throw Error(ErrorCode::kInvalidArgument, "scale ramp must stay positive");
    if (!(noise >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "noise stddev must be nonnegative");
    if (transition < 0) throw Error(ErrorCode::kInvalidArgument, "transition length must be nonnegative");
  }

  // Phase index and first frame of the phase containing `frame`.
  std::pair<int, int> phase_of(int frame) const {
    int start = 0;
    for (std::size_t i = 0; i < phases.size(); ++i) {
      if (frame < start + phases[i].frames) return {static_cast<int>(i), start};
      start += phases[i].frames;
    }
    return {static_cast<int>(phases.size()) - 1, start - phases.back().frames};
  }
};

namespace synth_detail {

using Rgb = std::array<double, 3>;

inline double luma(const Rgb& c) { return 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]; }

inline Rgb scaled(const Rgb& c, double k) { return {c[0] * k, c[1] * k, c[2] * k}; }

inline Rgb with_luma(const Rgb& c, double target) { return scaled(c, target / luma(c)); }

struct Palette {
  Rgb target{0.92, 0.14, 0.14};
  Rgb neutral{0.15, 0.15, 0.15};
  Rgb occluder{0.55, 0.55, 0.55};
  double stripe_amplitude = 0.05;
  double stripe_period = 4.0;  // pixels at the initial target size
  double low_contrast_factor = 0.9;
  double bar_width = 24.0;
  double bar_sweep = 200.0;    // pixels travelled by the bar over one phase
};

inline const Palette& palette() {
  static const Palette p;
  return p;
}

inline Rgb hue_camouflage() { return with_luma({0.14, 0.92, 0.60}, luma(palette().target)); }

// splitmix64 finalizer
inline std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double unit_uniform(std::uint64_t bits) { return ((bits >> 11) + 0.5) * (1.0 / 9007199254740992.0); }

// Standard normal sample for a (seed, frame, index) counter.
inline double gaussian(std::uint64_t seed, std::uint64_t frame, std::uint64_t index) {
  const std::uint64_t key = mix(mix(seed) ^ (frame * 0x632be59bd9b4e019ULL)) ^ (index * 0xd1b54a32d192ed03ULL);
  const double u1 = unit_uniform(mix(key));
  const double u2 = unit_uniform(mix(key ^ 0x5851f42d4c957f2dULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

struct Look {
  Rgb target;
  Rgb background;
  double bg_stripes = 0.0;  // background stripe amplitude
};

// Target and background appearance of a regime at a given phase progress.
inline Look regime_look(Regime regime, double progress) {
  const Palette& pal = palette();
  Look look{pal.target, pal.neutral, 0.0};
  switch (regime) {
    case Regime::kColorDistinct:
      look.background = hue_camouflage();
      look.bg_stripes = pal.stripe_amplitude;
      break;
    case Regime::kGradientDistinct:
      look.background = pal.target;
      break;
    case Regime::kLowContrast:
      look.background = scaled(pal.target, pal.low_contrast_factor);
      look.bg_stripes = pal.stripe_amplitude;
      break;
    case Regime::kOccludedBand:
      break;
    case Regime::kContrastInvert:
      if (progress >= 0.5) {
        look.background = with_luma(pal.neutral, luma(pal.target));
        look.target = with_luma(pal.target, luma(pal.neutral));
      }
      break;
  }
  return look;
}

// Linear mix from a (t = 0) to b (t = 1).
inline Look blend(const Look& a, const Look& b, double t) {
  Look out;
  for (int k = 0; k < 3; ++k) {
    out.target[k] = std::lerp(a.target[k], b.target[k], t);
    out.background[k] = std::lerp(a.background[k], b.background[k], t);
  }
  out.bg_stripes = std::lerp(a.bg_stripes, b.bg_stripes, t);
  return out;
}

}  // namespace synth_detail

// Exact per-frame boxes implied by the motion and scale programs.
inline std::vector<BoundingBox> synth_trajectory(const SynthSpec& spec) {
  spec.validate();
  std::vector<BoundingBox> boxes;
  boxes.reserve(spec.frame_count);
  Point c = spec.init_box.center();
  double sign_x = 1.0, sign_y = 1.0;
  int seg = 0, seg_used = 0;
  for (int f = 0; f < spec.frame_count; ++f) {
    const double t = spec.frame_count > 1 ? static_cast<double>(f) / (spec.frame_count - 1) : 0.0;
    const double s = 1.0 + (spec.scale_end - 1.0) * t;
    const double w = spec.init_box.w * s;
    const double h = spec.init_box.h * s;
    if (f > 0 && !spec.motion.empty()) {
      while (seg + 1 < static_cast<int>(spec.motion.size()) && seg_used >= spec.motion[seg].frames) {
        ++seg;
        seg_used = 0;
      }
      ++seg_used;
      c.x += sign_x * spec.motion[seg].vx;
      c.y += sign_y * spec.motion[seg].vy;
      if (spec.bounce) {
        const double margin = 4.0;
        if (c.x - w / 2 < margin || c.x + w / 2 > spec.width - margin) {
          sign_x = -sign_x;
          c.x = std::clamp(c.x, margin + w / 2, spec.width - margin - w / 2);
        }
        if (c.y - h / 2 < margin || c.y + h / 2 > spec.height - margin) {
          sign_y = -sign_y;
          c.y = std::clamp(c.y, margin + h / 2, spec.height - margin - h / 2);
        }
      }
    }
    boxes.push_back(BoundingBox::from_center(c, w, h));
  }
  return boxes;
}

// Renders one frame. `trajectory` must come from synth_trajectory(spec).
inline ImageBuffer render_synth_frame(const SynthSpec& spec, const std::vector<BoundingBox>& trajectory, int f) {
  using namespace synth_detail;
  const Palette& pal = palette();
  const BoundingBox& box = trajectory.at(f);
  const auto [phase, phase_start] = spec.phase_of(f);
  const Regime regime = spec.phases[phase].regime;
  const int phase_len = spec.phases[phase].frames;
  const double progress = (f - phase_start + 0.5) / phase_len;

  Look look = regime_look(regime, progress);
  if (phase > 0 && f - phase_start < spec.transition) {
    const Look prev = regime_look(spec.phases[phase - 1].regime, 1.0);
    look = blend(prev, look, (f - phase_start + 1.0) / (spec.transition + 1.0));
  }
  const Rgb& target = look.target;
  const Rgb& background = look.background;

  const bool draw_bar = regime == Regime::kOccludedBand || spec.occluder;
  double bar_x0 = 0.0, bar_x1 = 0.0;
  if (draw_bar) {
    // The bar crosses the target center at mid-phase.
    const int mid_frame = std::min(phase_start + phase_len / 2, spec.frame_count - 1);
    const double cx = trajectory[mid_frame].center().x + (progress - 0.5) * pal.bar_sweep;
    bar_x0 = cx - pal.bar_width / 2.0;
    bar_x1 = cx + pal.bar_width / 2.0;
  }

  const double size_ratio = box.w / spec.init_box.w;
  const double target_period = pal.stripe_period * size_ratio;
  std::vector<double> bg_col(spec.width), tg_col(spec.width), box_cov_x(spec.width), bar_cov(spec.width);
  for (int c = 0; c < spec.width; ++c) {
    const double x = c + 0.5;
    bg_col[c] = look.bg_stripes * std::sin(2.0 * std::numbers::pi * x / pal.stripe_period);
    tg_col[c] = pal.stripe_amplitude * std::sin(2.0 * std::numbers::pi * (x - box.x) / target_period);
    box_cov_x[c] = overlap(c, c + 1.0, box.x, box.x + box.w);
    bar_cov[c] = draw_bar ? overlap(c, c + 1.0, bar_x0, bar_x1) : 0.0;
  }

  ImageBuffer img(spec.width, spec.height, 3);
  float* out = img.data().data();
  for (int r = 0; r < spec.height; ++r) {
    const double cov_y = overlap(r, r + 1.0, box.y, box.y + box.h);
    for (int c = 0; c < spec.width; ++c) {
      const double alpha = box_cov_x[c] * cov_y;
      const std::size_t pix = static_cast<std::size_t>(r) * spec.width + c;
      for (int k = 0; k < 3; ++k) {
        const double bg = background[k] + bg_col[c];
        const double tg = target[k] + tg_col[c];
        double v = alpha * tg + (1.0 - alpha) * bg;
        v = bar_cov[c] * pal.occluder[k] + (1.0 - bar_cov[c]) * v;
        if (spec.noise > 0.0) v += spec.noise * gaussian(spec.seed, static_cast<std::uint64_t>(f), pix * 3 + k);
        out[pix * 3 + k] = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return img;
}

inline Sequence generate(const SynthSpec& spec) {
  spec.validate();
  Sequence seq;
  seq.name = spec.name;
  seq.ground_truth = synth_trajectory(spec);
  seq.frames.reserve(spec.frame_count);
  for (int f = 0; f < spec.frame_count; ++f) seq.frames.push_back(render_synth_frame(spec, seq.ground_truth, f));
  std::vector<std::string> tags;
  for (const auto& p : spec.phases) {
    const std::string t(to_string(p.regime));
    if (std::find(tags.begin(), tags.end(), t) == tags.end()) tags.push_back(t);
  }
  seq.attributes = std::move(tags);
  return seq;
}

}  // namespace mbst
