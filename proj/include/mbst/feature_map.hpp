#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "mbst/error.hpp"

namespace mbst {

// H x W x C embedding, row-major with interleaved channels: element (r, c, k)
// lives at (r * W + c) * C + k. `stride` is the number of input pixels per
// cell step.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(int height, int width, int channels, int stride = 1)
      : height_(height), width_(width), channels_(channels), stride_(stride) {
    validate_dims();
    data_.assign(static_cast<std::size_t>(height) * width * channels, 0.0f);
  }
  FeatureMap(int height, int width, int channels, int stride, std::vector<float> data)
      : height_(height), width_(width), channels_(channels), stride_(stride), data_(std::move(data)) {
    validate_dims();
    if (data_.size() != static_cast<std::size_t>(height) * width * channels) {
      throw Error(ErrorCode::kShapeMismatch, "feature data length does not match H*W*C");
    }
  }

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  int stride() const { return stride_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float& at(int r, int c, int k = 0) {
    return data_[(static_cast<std::size_t>(r) * width_ + c) * channels_ + k];
  }
  float at(int r, int c, int k = 0) const {
    return data_[(static_cast<std::size_t>(r) * width_ + c) * channels_ + k];
  }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  bool same_shape(const FeatureMap& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_ &&
           stride_ == other.stride_;
  }

  double squared_norm() const {
    double s = 0.0;
    for (float v : data_) s += static_cast<double>(v) * v;
    return s;
  }

  // Cells [row0, row0+rows) x [col0, col0+cols), all channels.
  FeatureMap window(int row0, int col0, int rows, int cols) const {
    if (row0 < 0 || col0 < 0 || rows < 0 || cols < 0 || row0 + rows > height_ || col0 + cols > width_) {
      throw Error(ErrorCode::kInvalidArgument, "feature window out of bounds");
    }
    FeatureMap out(rows, cols, channels_, stride_);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        for (int k = 0; k < channels_; ++k) out.at(r, c, k) = at(row0 + r, col0 + c, k);
      }
    }
    return out;
  }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  void validate_dims() const {
    if (height_ < 1 || width_ < 1 || channels_ < 1) {
      throw Error(ErrorCode::kInvalidArgument, "feature map dims must be positive");
    }
    if (stride_ < 1) throw Error(ErrorCode::kInvalidArgument, "feature stride must be at least 1");
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  int stride_ = 1;
  std::vector<float> data_;
};

// Subtracts each channel's mean over all cells.
inline void center_channels(FeatureMap& map) {
  const int ch = map.channels();
  std::vector<double> mean(ch, 0.0);
  auto d = map.data();
  for (std::size_t i = 0; i < d.size(); ++i) mean[i % ch] += d[i];
  const double cells = static_cast<double>(map.height()) * map.width();
  for (double& m : mean) m /= cells;
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<float>(d[i] - mean[i % ch]);
}

// Scales the whole map to unit L2 norm; an all-zero map is left unchanged.
inline void l2_normalize(FeatureMap& map) {
  const double n = std::sqrt(map.squared_norm());
  if (!(n > 0.0)) return;
  for (float& v : map.data()) v = static_cast<float>(v / n);
}

}  // namespace mbst
