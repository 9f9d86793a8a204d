#pragma once

// Embedding branches: each maps a square patch to a FeatureMap on a fixed
// cell grid. The same function is applied to exemplar and search patches.
//
// Grid layout. A branch with stride s and field F produces
//   cells = (side - F) / s + 1
// cells per axis. Cell k pools the 2s x 2s window whose top-left pixel is at
// offset + k*s, offset = (F - 2s) / 2. With s = 8 and F = 87 this maps a
// 127-pixel exemplar to 6x6 cells and a 255-pixel search patch to 22x22, and
// the central 127-pixel sub-patch of a search patch lands exactly on its
// central 6x6 cells.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mbst/embedding_store.hpp"
#include "mbst/error.hpp"
#include "mbst/feature_map.hpp"
#include "mbst/image.hpp"

namespace mbst {

enum class BranchKind { kIntensity, kGradientHist, kColorHist, kExternal };

inline std::string_view to_string(BranchKind kind) {
  switch (kind) {
    case BranchKind::kIntensity: return "intensity";
    case BranchKind::kGradientHist: return "gradient_hist";
    case BranchKind::kColorHist: return "color_hist";
    case BranchKind::kExternal: return "external";
  }
  return "unknown";
}

inline BranchKind parse_branch_kind(std::string_view name) {
  if (name == "intensity") return BranchKind::kIntensity;
  if (name == "gradient_hist") return BranchKind::kGradientHist;
  if (name == "color_hist") return BranchKind::kColorHist;
  if (name == "external") return BranchKind::kExternal;
  throw Error(ErrorCode::kUnknownKind, "unknown branch kind '" + std::string(name) + "'");
}

struct BranchParams {
  int stride = 8;
  int field = 87;
  // Subtract per-channel means before the global L2 normalization.
  bool center = false;
  // Gradient histogram: per-cell normalization h / sqrt(|h|^2 + eps^2), with
  // h the mean gradient-magnitude histogram of the cell.
  double cell_norm_eps = 0.02;
  // Each cell averages pool x pool blocks of stride x stride pixels, centered
  // in its field.
  int pool = 6;
  int orientation_bins = 8;
  int hue_bins = 4;
  int sat_bins = 2;
  int val_bins = 2;
};

struct BranchSpec {
  int id = 0;
  BranchKind kind = BranchKind::kIntensity;
  double weight = 1.0;
  BranchParams params;
  int channels = 1;
  int stride = 8;

  std::string name() const { return std::string(to_string(kind)); }
};

inline int builtin_channels(BranchKind kind, const BranchParams& p) {
  switch (kind) {
    case BranchKind::kIntensity: return 1;
    case BranchKind::kGradientHist: return p.orientation_bins;
    case BranchKind::kColorHist: return p.hue_bins * p.sat_bins * p.val_bins;
    case BranchKind::kExternal: return 0;  // whatever the store holds
  }
  return 0;
}

inline double default_branch_weight(BranchKind kind) { return kind == BranchKind::kExternal ? 10.5 : 1.0; }

struct BranchConfigEntry {
  std::string kind;
  std::optional<int> id;
  std::optional<double> weight;
  std::optional<BranchParams> params;
};

// Builds the branch registry. Entries without an explicit id take their
// position; ids must end up unique and contiguous from 0. Id 0 is the general
// branch.
inline std::vector<BranchSpec> register_builtin_branches(const std::vector<BranchConfigEntry>& config) {
  if (config.empty()) throw Error(ErrorCode::kInvalidArgument, "branch configuration names no branches");
  std::vector<BranchSpec> specs;
  std::vector<bool> seen(config.size(), false);
  for (std::size_t i = 0; i < config.size(); ++i) {
    const auto& entry = config[i];
    BranchSpec spec;
    spec.kind = parse_branch_kind(entry.kind);
    spec.id = entry.id.value_or(static_cast<int>(i));
    spec.weight = entry.weight.value_or(default_branch_weight(spec.kind));
    if (!(spec.weight >= 0.0) || !std::isfinite(spec.weight)) {
      throw Error(ErrorCode::kInvalidArgument, "branch weight must be finite and nonnegative");
    }
    if (entry.params) spec.params = *entry.params;
    if (spec.kind == BranchKind::kExternal && !entry.params) spec.params.center = false;
    if (spec.params.stride < 1 || spec.params.pool < 1 || spec.params.field < spec.params.pool * spec.params.stride) {
      throw Error(ErrorCode::kInvalidArgument, "branch field must cover the pooling window");
    }
    spec.stride = spec.params.stride;
    spec.channels = builtin_channels(spec.kind, spec.params);
    if (spec.id < 0 || spec.id >= static_cast<int>(config.size())) {
      throw Error(ErrorCode::kInvalidArgument, "branch ids must be contiguous from 0");
    }
    if (seen[spec.id]) throw Error(ErrorCode::kDuplicateId, "branch id " + std::to_string(spec.id) + " repeated");
    seen[spec.id] = true;
    specs.push_back(spec);
  }
  std::sort(specs.begin(), specs.end(), [](const BranchSpec& a, const BranchSpec& b) { return a.id < b.id; });
  return specs;
}

struct GridLayout {
  int cells = 0;
  int offset = 0;  // pixel offset of the first block
  int stride = 8;
  int pool = 2;    // blocks per cell side
};

inline GridLayout grid_layout(int side, const BranchParams& p) {
  if (side < p.field || (side - p.field) % p.stride != 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "patch side " + std::to_string(side) + " does not fit the cell grid (side - " +
                    std::to_string(p.field) + " must be a nonnegative multiple of " + std::to_string(p.stride) + ")");
  }
  return {(side - p.field) / p.stride + 1, (p.field - p.pool * p.stride) / 2, p.stride, p.pool};
}

// Where an embedding comes from when the branch reads a precomputed store.
struct EmbedContext {
  const EmbeddingStore* store = nullptr;
  std::uint32_t sequence_id = 0;
  std::uint32_t frame_index = 0;
  PatchRole role;
};

namespace detail {

// Pools per-pixel channel contributions into stride x stride blocks, then
// averages pool x pool blocks into each cell through a summed-area table.
template <typename PixelFn>
FeatureMap pool_cells(const GridLayout& g, int channels, PixelFn&& pixel_fn) {
  const int blocks = g.cells + g.pool - 1;
  const int s = g.stride;
  const int n = blocks + 1;
  // sat[(r*n + c)*channels + k]: sum of blocks above-left of (r, c)
  std::vector<double> sat(static_cast<std::size_t>(n) * n * channels, 0.0);
  std::vector<double> acc(channels);
  for (int br = 0; br < blocks; ++br) {
    for (int bc = 0; bc < blocks; ++bc) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int dr = 0; dr < s; ++dr) {
        const int r = g.offset + br * s + dr;
        for (int dc = 0; dc < s; ++dc) pixel_fn(r, g.offset + bc * s + dc, acc.data());
      }
      double* out = &sat[(static_cast<std::size_t>(br + 1) * n + bc + 1) * channels];
      const double* up = &sat[(static_cast<std::size_t>(br) * n + bc + 1) * channels];
      const double* left = &sat[(static_cast<std::size_t>(br + 1) * n + bc) * channels];
      const double* diag = &sat[(static_cast<std::size_t>(br) * n + bc) * channels];
      for (int k = 0; k < channels; ++k) out[k] = acc[k] + up[k] + left[k] - diag[k];
    }
  }
  const double inv_area = 1.0 / (static_cast<double>(g.pool) * g.pool * s * s);
  const int p = g.pool;
  FeatureMap out(g.cells, g.cells, channels, s);
  for (int r = 0; r < g.cells; ++r) {
    for (int c = 0; c < g.cells; ++c) {
      const double* a = &sat[(static_cast<std::size_t>(r + p) * n + c + p) * channels];
      const double* b = &sat[(static_cast<std::size_t>(r) * n + c + p) * channels];
      const double* d = &sat[(static_cast<std::size_t>(r + p) * n + c) * channels];
      const double* e = &sat[(static_cast<std::size_t>(r) * n + c) * channels];
      for (int k = 0; k < channels; ++k) out.at(r, c, k) = static_cast<float>((a[k] - b[k] - d[k] + e[k]) * inv_area);
    }
  }
  return out;
}

inline void normalize_cells(FeatureMap& map, double eps) {
  const int ch = map.channels();
  auto d = map.data();
  for (std::size_t base = 0; base < d.size(); base += ch) {
    double n2 = eps * eps;
    for (int k = 0; k < ch; ++k) n2 += static_cast<double>(d[base + k]) * d[base + k];
    if (!(n2 > 0.0)) continue;
    const double inv = 1.0 / std::sqrt(n2);
    for (int k = 0; k < ch; ++k) d[base + k] = static_cast<float>(d[base + k] * inv);
  }
}

// Linear soft assignment of a value in [0,1] to `bins` bins centered at
// (j + 0.5) / bins, clamped at the outer centers.
inline void soft_linear_bin(double v, int bins, int& lo, int& hi, double& w_hi) {
  const double pos = std::clamp(v * bins - 0.5, 0.0, static_cast<double>(bins - 1));
  lo = static_cast<int>(std::floor(pos));
  hi = std::min(lo + 1, bins - 1);
  w_hi = pos - lo;
}

// atan2 to within about 1e-5 rad: octant reduction plus a minimax
// polynomial for atan on [0, 1].
inline double fast_atan2(double y, double x) {
  const double ax = std::abs(x), ay = std::abs(y);
  const double mx = std::max(ax, ay);
  if (mx == 0.0) return 0.0;
  const double t = std::min(ax, ay) / mx;
  const double t2 = t * t;
  double a = ((((-0.0117212 * t2 + 0.05265332) * t2 - 0.11643287) * t2 + 0.19354346) * t2 - 0.33262347) * t2 + 0.99997726;
  a *= t;
  if (ay > ax) a = std::numbers::pi / 2.0 - a;
  if (x < 0.0) a = std::numbers::pi - a;
  return y < 0.0 ? -a : a;
}

inline FeatureMap embed_intensity(const ImageBuffer& img, const GridLayout& g) {
  const ImageBuffer gray = to_gray(img);
  return pool_cells(g, 1, [&](int r, int c, double* acc) { acc[0] += gray.at(r, c); });
}

inline FeatureMap embed_gradient_hist(const ImageBuffer& img, const GridLayout& g, const BranchParams& p) {
  const ImageBuffer gray = to_gray(img);
  const int w = gray.width();
  const int h = gray.height();
  const int bins = p.orientation_bins;
  const double bin_width = std::numbers::pi / bins;
  FeatureMap out = pool_cells(g, bins, [&](int r, int c, double* acc) {
    const int cl = std::max(c - 1, 0), cr = std::min(c + 1, w - 1);
    const int ru = std::max(r - 1, 0), rd = std::min(r + 1, h - 1);
    const float gx = 0.5f * (gray.at(r, cr) - gray.at(r, cl));
    const float gy = 0.5f * (gray.at(rd, c) - gray.at(ru, c));
    const float mag = std::sqrt(gx * gx + gy * gy);
    if (mag == 0.0f) return;
    double theta = fast_atan2(gy, gx);
    if (theta < 0.0) theta += std::numbers::pi;
    if (theta >= std::numbers::pi) theta -= std::numbers::pi;
    // Bin k is centered at k * pi / bins; unsigned orientation wraps at pi.
    const double pos = theta / bin_width;
    int lo = static_cast<int>(pos);
    const double frac = pos - lo;
    lo %= bins;
    const int hi = (lo + 1) % bins;
    acc[lo] += mag * (1.0 - frac);
    acc[hi] += mag * frac;
  });
  normalize_cells(out, p.cell_norm_eps);
  return out;
}

struct Hsv {
  double h = 0.0;  // [0,1)
  double s = 0.0;
  double v = 0.0;
};

inline Hsv rgb_to_hsv(double r, double g, double b) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  Hsv out;
  out.v = mx;
  const double d = mx - mn;
  out.s = mx > 0.0 ? d / mx : 0.0;
  if (d <= 0.0) return out;
  double hue;
  if (mx == r) {
    hue = (g - b) / d;
    if (hue < 0.0) hue += 6.0;
  } else if (mx == g) {
    hue = (b - r) / d + 2.0;
  } else {
    hue = (r - g) / d + 4.0;
  }
  out.h = hue / 6.0;
  if (out.h >= 1.0) out.h -= 1.0;
  return out;
}

inline FeatureMap embed_color_hist(const ImageBuffer& img, const GridLayout& g, const BranchParams& p) {
  const int hb = p.hue_bins, sb = p.sat_bins, vb = p.val_bins;
  const int channels = hb * sb * vb;
  const bool rgb = img.channels() == 3;
  FeatureMap out = pool_cells(g, channels, [&](int r, int c, double* acc) {
    const Hsv hsv = rgb ? rgb_to_hsv(img.at(r, c, 0), img.at(r, c, 1), img.at(r, c, 2))
                        : Hsv{0.0, 0.0, static_cast<double>(img.at(r, c))};
    // Hue bins are circular, centered at j / hb.
    const double hpos = hsv.h * hb;
    int h0 = static_cast<int>(std::floor(hpos));
    const double hw = hpos - h0;
    h0 %= hb;
    const int h1 = (h0 + 1) % hb;
    int s0, s1, v0, v1;
    double sw, vw;
    soft_linear_bin(hsv.s, sb, s0, s1, sw);
    soft_linear_bin(hsv.v, vb, v0, v1, vw);
    const double hwt[2] = {1.0 - hw, hw};
    const int hid[2] = {h0, h1};
    const double swt[2] = {1.0 - sw, sw};
    const int sid[2] = {s0, s1};
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        const double w = hwt[i] * swt[j];
        double* cell = acc + (hid[i] * sb + sid[j]) * vb;
        cell[v0] += w * (1.0 - vw);
        cell[v1] += w * vw;
      }
    }
  });
  normalize_cells(out, 0.0);
  return out;
}

}  // namespace detail

// Cell features before centering and global normalization. Purely local, so a
// sub-patch aligned to the grid reproduces the corresponding cells exactly.
inline FeatureMap embed_raw(const BranchSpec& spec, const Patch& patch, const EmbedContext& ctx = {}) {
  if (spec.kind == BranchKind::kExternal) {
    if (!ctx.store) throw Error(ErrorCode::kMissingEmbedding, "external branch has no embedding store attached");
    return ctx.store->at({ctx.sequence_id, ctx.frame_index, ctx.role});
  }
  const ImageBuffer& img = patch.image;
  if (img.width() != img.height()) throw Error(ErrorCode::kInvalidArgument, "patches must be square");
  const GridLayout g = grid_layout(img.width(), spec.params);
  switch (spec.kind) {
    case BranchKind::kIntensity: return detail::embed_intensity(img, g);
    case BranchKind::kGradientHist: return detail::embed_gradient_hist(img, g, spec.params);
    case BranchKind::kColorHist: return detail::embed_color_hist(img, g, spec.params);
    case BranchKind::kExternal: break;
  }
  throw Error(ErrorCode::kUnknownKind, "unhandled branch kind");
}

inline FeatureMap finalize_embedding(FeatureMap map, const BranchParams& params) {
  if (params.center) center_channels(map);
  l2_normalize(map);
  return map;
}

inline FeatureMap embed(const BranchSpec& spec, const Patch& patch, const EmbedContext& ctx = {}) {
  return finalize_embedding(embed_raw(spec, patch, ctx), spec.params);
}

}  // namespace mbst
