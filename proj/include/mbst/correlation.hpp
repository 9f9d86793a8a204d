#pragma once

// Cross-correlation of exemplar and search embeddings, and the response
// post-processing used for localization.

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>
#include <vector>

#include "mbst/error.hpp"
#include "mbst/feature_map.hpp"

namespace mbst {

struct ResponseMap {
  int height = 0;
  int width = 0;
  std::vector<double> data;
  int scale_index = 0;
  int branch_id = 0;

  ResponseMap() = default;
  ResponseMap(int h, int w, double fill = 0.0) : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }
  bool empty() const { return data.empty(); }
};

struct Peak {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

// First maximum in row-major order.
inline Peak argmax(const ResponseMap& map) {
  if (map.empty()) throw Error(ErrorCode::kEmptyInput, "argmax of an empty response map");
  std::size_t best = 0;
  for (std::size_t i = 1; i < map.data.size(); ++i) {
    if (map.data[i] > map.data[best]) best = i;
  }
  return {static_cast<int>(best / map.width), static_cast<int>(best % map.width), map.data[best]};
}

namespace detail {

inline void check_xcorr_inputs(const FeatureMap& exemplar, const FeatureMap& search) {
  if (exemplar.empty() || search.empty()) throw Error(ErrorCode::kEmptyInput, "cannot correlate empty feature maps");
  if (exemplar.channels() != search.channels()) {
    throw Error(ErrorCode::kChannelMismatch, "exemplar has " + std::to_string(exemplar.channels()) +
                                                 " channels, search has " + std::to_string(search.channels()));
  }
  if (exemplar.height() > search.height() || exemplar.width() > search.width()) {
    throw Error(ErrorCode::kShapeMismatch, "exemplar is larger than the search map");
  }
}

}  // namespace detail

// out[u,v] = sum_{i,j,c} exemplar[i,j,c] * search[u+i, v+j, c]
inline ResponseMap xcorr(const FeatureMap& exemplar, const FeatureMap& search) {
  detail::check_xcorr_inputs(exemplar, search);
  const int zh = exemplar.height(), zw = exemplar.width(), ch = exemplar.channels();
  const int oh = search.height() - zh + 1;
  const int ow = search.width() - zw + 1;
  ResponseMap out(oh, ow);
  const float* z = exemplar.data().data();
  const float* x = search.data().data();
  const std::size_t z_row = static_cast<std::size_t>(zw) * ch;
  const std::size_t x_row = static_cast<std::size_t>(search.width()) * ch;
  for (int u = 0; u < oh; ++u) {
    for (int v = 0; v < ow; ++v) {
      double acc = 0.0;
      for (int i = 0; i < zh; ++i) {
        const float* zr = z + i * z_row;
        const float* xr = x + (u + i) * x_row + static_cast<std::size_t>(v) * ch;
        for (std::size_t k = 0; k < z_row; ++k) acc += static_cast<double>(zr[k]) * xr[k];
      }
      out.at(u, v) = acc;
    }
  }
  return out;
}

namespace detail {

inline int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

// FFTW plans are created once per transform size and reused through the
// new-array execute interface, which is thread-safe. Plan creation itself is
// not, hence the mutex.
class FftPlans {
 public:
  struct Pair {
    fftw_plan forward = nullptr;
    fftw_plan inverse = nullptr;
  };

  static const Pair& get(int rows, int cols) {
    static FftPlans instance;
    std::lock_guard<std::mutex> lock(instance.mutex_);
    auto it = instance.plans_.find({rows, cols});
    if (it != instance.plans_.end()) return it->second;
    const int ccols = cols / 2 + 1;
    double* real = fftw_alloc_real(static_cast<std::size_t>(rows) * cols);
    fftw_complex* spec = fftw_alloc_complex(static_cast<std::size_t>(rows) * ccols);
    Pair p;
    p.forward = fftw_plan_dft_r2c_2d(rows, cols, real, spec, FFTW_ESTIMATE | FFTW_UNALIGNED);
    p.inverse = fftw_plan_dft_c2r_2d(rows, cols, spec, real, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(real);
    fftw_free(spec);
    return instance.plans_.emplace(std::make_pair(rows, cols), p).first->second;
  }

  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;

 private:
  FftPlans() = default;
  ~FftPlans() {
    for (auto& [dims, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.inverse);
    }
  }

  std::mutex mutex_;
  std::map<std::pair<int, int>, Pair> plans_;
};

}  // namespace detail

// Same contract as xcorr, computed per channel in the frequency domain on a
// zero-padded power-of-two grid and summed before a single inverse transform.
inline ResponseMap xcorr_fft(const FeatureMap& exemplar, const FeatureMap& search) {
  detail::check_xcorr_inputs(exemplar, search);
  const int zh = exemplar.height(), zw = exemplar.width(), ch = exemplar.channels();
  const int xh = search.height(), xw = search.width();
  const int rows = detail::next_pow2(xh);
  const int cols = detail::next_pow2(xw);
  const int ccols = cols / 2 + 1;
  const std::size_t n_real = static_cast<std::size_t>(rows) * cols;
  const std::size_t n_spec = static_cast<std::size_t>(rows) * ccols;
  const auto& plans = detail::FftPlans::get(rows, cols);

  std::vector<double> real(n_real);
  std::vector<std::complex<double>> z_spec(n_spec), x_spec(n_spec), acc(n_spec, {0.0, 0.0});
  auto as_fftw = [](std::vector<std::complex<double>>& v) { return reinterpret_cast<fftw_complex*>(v.data()); };

  for (int k = 0; k < ch; ++k) {
    std::fill(real.begin(), real.end(), 0.0);
    for (int r = 0; r < zh; ++r) {
      for (int c = 0; c < zw; ++c) real[static_cast<std::size_t>(r) * cols + c] = exemplar.at(r, c, k);
    }
    fftw_execute_dft_r2c(plans.forward, real.data(), as_fftw(z_spec));
    std::fill(real.begin(), real.end(), 0.0);
    for (int r = 0; r < xh; ++r) {
      for (int c = 0; c < xw; ++c) real[static_cast<std::size_t>(r) * cols + c] = search.at(r, c, k);
    }
    fftw_execute_dft_r2c(plans.forward, real.data(), as_fftw(x_spec));
    for (std::size_t i = 0; i < n_spec; ++i) acc[i] += std::conj(z_spec[i]) * x_spec[i];
  }
  fftw_execute_dft_c2r(plans.inverse, as_fftw(acc), real.data());

  const int oh = xh - zh + 1;
  const int ow = xw - zw + 1;
  const double scale = 1.0 / static_cast<double>(n_real);
  ResponseMap out(oh, ow);
  for (int u = 0; u < oh; ++u) {
    for (int v = 0; v < ow; ++v) out.at(u, v) = real[static_cast<std::size_t>(u) * cols + v] * scale;
  }
  return out;
}

namespace detail {

// Keys cubic convolution kernel, a = -0.5.
inline double cubic_kernel(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

// One axis of bicubic upsampling with align-corners geometry and clamped
// borders: out[o] samples in[o / factor].
inline std::vector<double> upsample_axis(const std::vector<double>& in, int rows, int cols, int factor, bool along_cols,
                                         int& out_rows, int& out_cols) {
  const int n_in = along_cols ? cols : rows;
  const int n_out = (n_in - 1) * factor + 1;
  out_rows = along_cols ? rows : n_out;
  out_cols = along_cols ? n_out : cols;
  std::vector<std::array<double, 4>> taps(factor);
  for (int ph = 0; ph < factor; ++ph) {
    const double t = static_cast<double>(ph) / factor;
    for (int j = 0; j < 4; ++j) taps[ph][j] = cubic_kernel(t - (j - 1));
  }
  std::vector<double> out(static_cast<std::size_t>(out_rows) * out_cols);
  auto src = [&](int i, int line) {
    i = std::clamp(i, 0, n_in - 1);
    return along_cols ? in[static_cast<std::size_t>(line) * cols + i] : in[static_cast<std::size_t>(i) * cols + line];
  };
  const int lines = along_cols ? rows : cols;
  for (int line = 0; line < lines; ++line) {
    for (int o = 0; o < n_out; ++o) {
      const int base = o / factor;
      const int ph = o % factor;
      double v;
      if (ph == 0) {
        v = src(base, line);
      } else {
        v = 0.0;
        for (int j = 0; j < 4; ++j) v += taps[ph][j] * src(base + j - 1, line);
      }
      if (along_cols) {
        out[static_cast<std::size_t>(line) * out_cols + o] = v;
      } else {
        out[static_cast<std::size_t>(o) * out_cols + line] = v;
      }
    }
  }
  return out;
}

}  // namespace detail

// Bicubic upsampling to ((H-1)*factor+1) x ((W-1)*factor+1); input samples are
// reproduced exactly at multiples of `factor`.
inline ResponseMap upsample_response(const ResponseMap& map, int factor) {
  if (factor < 1) throw Error(ErrorCode::kInvalidArgument, "upsample factor must be at least 1");
  if (map.empty()) throw Error(ErrorCode::kEmptyInput, "cannot upsample an empty response map");
  if (factor == 1) return map;
  int r1, c1, r2, c2;
  auto tmp = detail::upsample_axis(map.data, map.height, map.width, factor, true, r1, c1);
  auto out_data = detail::upsample_axis(tmp, r1, c1, factor, false, r2, c2);
  ResponseMap out;
  out.height = r2;
  out.width = c2;
  out.data = std::move(out_data);
  out.scale_index = map.scale_index;
  out.branch_id = map.branch_id;
  return out;
}

// Periodic-free Hann window of length n (zero at both ends, peak at the
// center for odd n). n = 1 gives {1}.
inline std::vector<double> hann(int n) {
  if (n == 1) return {1.0};
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (n - 1));
  return w;
}

// Outer product of Hann windows normalized to sum 1.
inline ResponseMap hann2d(int rows, int cols) {
  const auto wr = hann(rows);
  const auto wc = hann(cols);
  ResponseMap out(rows, cols);
  double sum = 0.0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) sum += out.at(r, c) = wr[r] * wc[c];
  }
  for (double& v : out.data) v /= sum;
  return out;
}

// Shifts the map to a zero minimum and scales it to sum 1; a constant map
// becomes all zeros.
inline ResponseMap normalize_response(const ResponseMap& map) {
  ResponseMap out = map;
  if (out.empty()) return out;
  const double mn = *std::min_element(out.data.begin(), out.data.end());
  double sum = 0.0;
  for (double& v : out.data) sum += v = v - mn;
  if (sum > 0.0) {
    for (double& v : out.data) v /= sum;
  }
  return out;
}

// (1 - influence) * normalized map + influence * normalized Hann window.
inline ResponseMap apply_cosine_window(const ResponseMap& map, double influence) {
  if (!(influence >= 0.0 && influence <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "window influence must lie in [0,1]");
  }
  if (map.empty()) throw Error(ErrorCode::kEmptyInput, "cannot window an empty response map");
  ResponseMap out = normalize_response(map);
  const ResponseMap win = hann2d(map.height, map.width);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = (1.0 - influence) * out.data[i] + influence * win.data[i];
  }
  return out;
}

}  // namespace mbst
