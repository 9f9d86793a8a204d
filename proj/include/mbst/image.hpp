#pragma once

// Image buffers, context-aware cropping and the multi-scale search pyramid.
//
// Coordinates follow the "pixel edge" convention: pixel (r, c) covers the
// square [c, c+1) x [r, r+1), so a box (x, y, w, h) has its center at
// (x + w/2, y + h/2) and pixel centers sit at half-integers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mbst/error.hpp"

namespace mbst {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  Point center() const { return {x + w / 2.0, y + h / 2.0}; }
  bool valid() const { return std::isfinite(x) && std::isfinite(y) && w > 0.0 && h > 0.0; }

  static BoundingBox from_center(Point c, double w, double h) {
    return {c.x - w / 2.0, c.y - h / 2.0, w, h};
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

inline void require_valid(const BoundingBox& box) {
  if (!box.valid()) {
    throw Error(ErrorCode::kInvalidBox, "box must have finite position and w > 0, h > 0 (got w=" +
                                            std::to_string(box.w) + ", h=" + std::to_string(box.h) + ")");
  }
}

// Row-major, interleaved channels, values nominally in [0,1].
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int width, int height, int channels, float fill = 0.0f)
      : width_(width), height_(height), channels_(channels) {
    if (width < 0 || height < 0 || (channels != 1 && channels != 3)) {
      throw Error(ErrorCode::kInvalidArgument, "image dims must be non-negative with 1 or 3 channels");
    }
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
  }
  ImageBuffer(int width, int height, int channels, std::vector<float> data)
      : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    if (width < 0 || height < 0 || (channels != 1 && channels != 3)) {
      throw Error(ErrorCode::kInvalidArgument, "image dims must be non-negative with 1 or 3 channels");
    }
    if (data_.size() != static_cast<std::size_t>(width) * height * channels) {
      throw Error(ErrorCode::kShapeMismatch, "image data length does not match width*height*channels");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }

  float& at(int row, int col, int ch = 0) {
    return data_[(static_cast<std::size_t>(row) * width_ + col) * channels_ + ch];
  }
  float at(int row, int col, int ch = 0) const {
    return data_[(static_cast<std::size_t>(row) * width_ + col) * channels_ + ch];
  }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  const std::vector<float>& values() const { return data_; }

  std::vector<double> channel_means() const {
    std::vector<double> sums(channels_, 0.0);
    for (std::size_t i = 0; i < data_.size(); i += channels_) {
      for (int k = 0; k < channels_; ++k) sums[k] += data_[i + k];
    }
    const double n = static_cast<double>(width_) * height_;
    for (double& s : sums) s = n > 0 ? s / n : 0.0;
    return sums;
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<float> data_;
};

// Luma (BT.601 weights) for 3-channel images; a copy for 1-channel images.
inline ImageBuffer to_gray(const ImageBuffer& img) {
  if (img.channels() == 1) return img;
  ImageBuffer out(img.width(), img.height(), 1);
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = 0.299f * src[3 * i] + 0.587f * src[3 * i + 1] + 0.114f * src[3 * i + 2];
  }
  return out;
}

// Bilinear resize, align-corners convention: the first and last samples of
// the output coincide with the first and last samples of the input.
inline ImageBuffer resize_bilinear(const ImageBuffer& img, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) throw Error(ErrorCode::kInvalidArgument, "resize target must be at least 1x1");
  if (img.empty()) throw Error(ErrorCode::kEmptyInput, "cannot resize an empty image");
  const int in_w = img.width();
  const int in_h = img.height();
  const int ch = img.channels();
  const double rx = out_w > 1 ? static_cast<double>(in_w - 1) / (out_w - 1) : 0.0;
  const double ry = out_h > 1 ? static_cast<double>(in_h - 1) / (out_h - 1) : 0.0;
  const double cx = out_w > 1 ? 0.0 : (in_w - 1) / 2.0;
  const double cy = out_h > 1 ? 0.0 : (in_h - 1) / 2.0;

  ImageBuffer out(out_w, out_h, ch);
  for (int r = 0; r < out_h; ++r) {
    const double sy = out_h > 1 ? r * ry : cy;
    const int y0 = std::min(static_cast<int>(std::floor(sy)), in_h - 1);
    const int y1 = std::min(y0 + 1, in_h - 1);
    const float fy = static_cast<float>(sy - y0);
    for (int c = 0; c < out_w; ++c) {
      const double sx = out_w > 1 ? c * rx : cx;
      const int x0 = std::min(static_cast<int>(std::floor(sx)), in_w - 1);
      const int x1 = std::min(x0 + 1, in_w - 1);
      const float fx = static_cast<float>(sx - x0);
      for (int k = 0; k < ch; ++k) {
        const float top = std::lerp(img.at(y0, x0, k), img.at(y0, x1, k), fx);
        const float bot = std::lerp(img.at(y1, x0, k), img.at(y1, x1, k), fx);
        out.at(r, c, k) = std::lerp(top, bot, fy);
      }
    }
  }
  return out;
}

struct Patch {
  ImageBuffer image;
  double source_scale = 1.0;  // source pixels per output pixel
  Point center;               // crop center in frame coordinates
  double crop_side = 0.0;     // crop side in source pixels
  bool padded = false;        // true when any sample fell outside the frame

  int side() const { return image.width(); }
};

// Crop side for a box with a (w+h)/4 context margin on each side, normalized
// to a square of equal area.
inline double context_crop_side(double w, double h) {
  const double p = (w + h) / 4.0;
  return std::sqrt((w + 2.0 * p) * (h + 2.0 * p));
}

// Samples a square window of `crop_side` source pixels centered at `center`
// into an out_side x out_side patch. Samples falling outside the frame take
// the frame's per-channel mean, which callers cropping the same frame several
// times may pass in precomputed.
inline Patch crop_square(const ImageBuffer& frame, Point center, double crop_side, int out_side,
                         std::span<const double> frame_means = {}) {
  if (frame.empty()) throw Error(ErrorCode::kEmptyInput, "cannot crop from an empty frame");
  if (out_side < 1) throw Error(ErrorCode::kInvalidArgument, "output side must be positive");
  if (!(crop_side > 0.0) || !std::isfinite(crop_side)) {
    throw Error(ErrorCode::kInvalidArgument, "crop side must be positive and finite");
  }
  const int ch = frame.channels();
  const int fw = frame.width();
  const int fh = frame.height();
  if (!frame_means.empty() && static_cast<int>(frame_means.size()) != ch) {
    throw Error(ErrorCode::kChannelMismatch, "frame means do not match the frame's channel count");
  }
  const std::vector<double> mean_d =
      frame_means.empty() ? frame.channel_means() : std::vector<double>(frame_means.begin(), frame_means.end());
  std::vector<float> mean(mean_d.begin(), mean_d.end());

  Patch patch;
  patch.image = ImageBuffer(out_side, out_side, ch);
  patch.source_scale = crop_side / out_side;
  patch.center = center;
  patch.crop_side = crop_side;

  const double step = patch.source_scale;
  // Integer and fractional parts of the window origin are split once so that
  // integer translations of the center shift only the integer part.
  const double origin_x = center.x - crop_side / 2.0;
  const double origin_y = center.y - crop_side / 2.0;

  // Precompute column taps; rows are handled in the outer loop.
  std::vector<int> col0(out_side), col1(out_side);
  std::vector<float> colf(out_side);
  bool padded = false;
  for (int c = 0; c < out_side; ++c) {
    const double u = origin_x + (c + 0.5) * step - 0.5;
    const double fl = std::floor(u);
    col0[c] = static_cast<int>(fl);
    col1[c] = col0[c] + 1;
    colf[c] = static_cast<float>(u - fl);
    if (col0[c] < 0 || col1[c] >= fw) padded = true;
  }

  const float* src = frame.data().data();
  float* dst = patch.image.data().data();
  auto sample = [&](int r, int c, int k) -> float {
    if (r < 0 || r >= fh || c < 0 || c >= fw) return mean[k];
    return src[(static_cast<std::size_t>(r) * fw + c) * ch + k];
  };

  for (int r = 0; r < out_side; ++r) {
    const double v = origin_y + (r + 0.5) * step - 0.5;
    const double fl = std::floor(v);
    const int r0 = static_cast<int>(fl);
    const int r1 = r0 + 1;
    const float fy = static_cast<float>(v - fl);
    if (r0 < 0 || r1 >= fh) padded = true;
    const bool rows_inside = r0 >= 0 && r1 < fh;
    for (int c = 0; c < out_side; ++c) {
      const int c0 = col0[c];
      const int c1 = col1[c];
      const float fx = colf[c];
      float* out = dst + (static_cast<std::size_t>(r) * out_side + c) * ch;
      if (rows_inside && c0 >= 0 && c1 < fw) {
        const float* p00 = src + (static_cast<std::size_t>(r0) * fw + c0) * ch;
        const float* p10 = src + (static_cast<std::size_t>(r1) * fw + c0) * ch;
        for (int k = 0; k < ch; ++k) {
          const float top = p00[k] + fx * (p00[k + ch] - p00[k]);
          const float bot = p10[k] + fx * (p10[k + ch] - p10[k]);
          out[k] = top + fy * (bot - top);
        }
      } else {
        for (int k = 0; k < ch; ++k) {
          const float a = sample(r0, c0, k), b = sample(r0, c1, k);
          const float c_ = sample(r1, c0, k), d = sample(r1, c1, k);
          const float top = a + fx * (b - a);
          const float bot = c_ + fx * (d - c_);
          out[k] = top + fy * (bot - top);
        }
      }
    }
  }
  patch.padded = padded;
  return patch;
}

inline Patch crop_context(const ImageBuffer& frame, const BoundingBox& box, int out_side) {
  require_valid(box);
  if (out_side < 8) throw Error(ErrorCode::kInvalidArgument, "output side must be at least 8");
  return crop_square(frame, box.center(), context_crop_side(box.w, box.h), out_side);
}

inline std::vector<Patch> build_search_pyramid(const ImageBuffer& frame, Point center, double base_crop_side,
                                               std::span<const double> scale_factors, int out_side = 255) {
  if (scale_factors.empty()) throw Error(ErrorCode::kInvalidArgument, "scale factor list is empty");
  for (double f : scale_factors) {
    if (!(f > 0.0)) throw Error(ErrorCode::kInvalidArgument, "scale factors must be positive");
  }
  const std::vector<double> means = frame.channel_means();
  std::vector<Patch> out;
  out.reserve(scale_factors.size());
  for (double f : scale_factors) out.push_back(crop_square(frame, center, base_crop_side * f, out_side, means));
  return out;
}

}  // namespace mbst
