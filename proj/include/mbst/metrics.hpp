#pragma once

// One-pass-evaluation metrics: center location error, IoU, the precision
// curve over 0..50 px and the 21-point success curve.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "mbst/error.hpp"
#include "mbst/image.hpp"

namespace mbst {

inline double center_error(const BoundingBox& a, const BoundingBox& b) {
  const Point ca = a.center();
  const Point cb = b.center();
  return std::hypot(ca.x - cb.x, ca.y - cb.y);
}

inline double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.w * a.h + b.w * b.h - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

inline constexpr int kPrecisionMaxThreshold = 50;
inline constexpr int kPrecisionReportThreshold = 20;
inline constexpr int kSuccessSteps = 20;  // thresholds 0, 0.05, ..., 1.0

struct PrecisionCurve {
  std::vector<double> thresholds;  // 0..50 px
  std::vector<double> rates;       // fraction of frames with error <= t
  double at20 = 0.0;
};

struct SuccessCurve {
  std::vector<double> thresholds;  // 0, 0.05, ..., 1
  std::vector<double> rates;       // fraction of frames with IoU > t
  double auc = 0.0;                // unweighted mean of rates
};

inline PrecisionCurve precision_curve(std::span<const double> errors) {
  if (errors.empty()) throw Error(ErrorCode::kEmptyInput, "precision curve needs at least one frame");
  PrecisionCurve out;
  const double n = static_cast<double>(errors.size());
  for (int t = 0; t <= kPrecisionMaxThreshold; ++t) {
    const auto hits = std::count_if(errors.begin(), errors.end(), [t](double e) { return e <= t; });
    out.thresholds.push_back(t);
    out.rates.push_back(hits / n);
  }
  out.at20 = out.rates[kPrecisionReportThreshold];
  return out;
}

inline SuccessCurve success_curve(std::span<const double> ious) {
  if (ious.empty()) throw Error(ErrorCode::kEmptyInput, "success curve needs at least one frame");
  SuccessCurve out;
  const double n = static_cast<double>(ious.size());
  double sum = 0.0;
  for (int i = 0; i <= kSuccessSteps; ++i) {
    const double t = static_cast<double>(i) / kSuccessSteps;
    const auto hits = std::count_if(ious.begin(), ious.end(), [t](double v) { return v > t; });
    out.thresholds.push_back(t);
    out.rates.push_back(hits / n);
    sum += hits / n;
  }
  out.auc = sum / (kSuccessSteps + 1);
  return out;
}

}  // namespace mbst
