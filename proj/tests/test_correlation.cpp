#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <thread>

#include "mbst/correlation.hpp"
#include "test_util.hpp"

using namespace mbst;

namespace {

FeatureMap ones_2x2() { return FeatureMap(2, 2, 1, 1, std::vector<float>(4, 1.0f)); }

FeatureMap one_to_nine() {
  std::vector<float> v(9);
  for (int i = 0; i < 9; ++i) v[i] = static_cast<float>(i + 1);
  return FeatureMap(3, 3, 1, 1, v);
}

// Independent sliding dot product written straight from the definition.
double brute(const FeatureMap& z, const FeatureMap& x, int u, int v) {
  double s = 0.0;
  for (int i = 0; i < z.height(); ++i) {
    for (int j = 0; j < z.width(); ++j) {
      for (int c = 0; c < z.channels(); ++c) s += static_cast<double>(z.at(i, j, c)) * x.at(u + i, v + j, c);
    }
  }
  return s;
}

double max_abs(const ResponseMap& m) {
  double a = 0.0;
  for (double v : m.data) a = std::max(a, std::abs(v));
  return a;
}

}  // namespace

TEST(Xcorr, HandExample) {
  for (auto fn : {&xcorr, &xcorr_fft}) {
    const ResponseMap r = fn(ones_2x2(), one_to_nine());
    ASSERT_EQ(r.height, 2);
    ASSERT_EQ(r.width, 2);
    EXPECT_NEAR(r.at(0, 0), 12, 1e-9);
    EXPECT_NEAR(r.at(0, 1), 16, 1e-9);
    EXPECT_NEAR(r.at(1, 0), 24, 1e-9);
    EXPECT_NEAR(r.at(1, 1), 28, 1e-9);
  }
}

TEST(Xcorr, SameSizeGivesSquaredNorm) {
  std::mt19937 rng(1);
  const FeatureMap z = test::random_map(5, 4, 3, rng);
  const ResponseMap r = xcorr(z, z);
  ASSERT_EQ(r.data.size(), 1u);
  EXPECT_NEAR(r.data[0], z.squared_norm(), 1e-9);
}

TEST(Xcorr, ZeroExemplar) {
  std::mt19937 rng(2);
  const FeatureMap x = test::random_map(9, 9, 2, rng);
  const FeatureMap z(3, 3, 2, 8);
  for (double v : xcorr(z, x).data) EXPECT_EQ(v, 0.0);
  for (double v : xcorr_fft(z, x).data) EXPECT_NEAR(v, 0.0, 1e-9);
}

TEST(Xcorr, MatchesBruteForce) {
  std::mt19937 rng(3);
  const FeatureMap z = test::random_map(4, 3, 5, rng);
  const FeatureMap x = test::random_map(10, 7, 5, rng);
  const ResponseMap r = xcorr(z, x);
  for (int u = 0; u < r.height; ++u) {
    for (int v = 0; v < r.width; ++v) EXPECT_NEAR(r.at(u, v), brute(z, x, u, v), 1e-9);
  }
}

TEST(Xcorr, Bilinear) {
  std::mt19937 rng(4);
  FeatureMap z = test::random_map(6, 6, 4, rng);
  const FeatureMap x = test::random_map(22, 22, 4, rng);
  const ResponseMap base = xcorr(z, x);
  for (float& v : z.data()) v *= 2.0f;  // exact in float
  const ResponseMap scaled = xcorr(z, x);
  for (std::size_t i = 0; i < base.data.size(); ++i) EXPECT_EQ(scaled.data[i], 2.0 * base.data[i]);
}

TEST(Xcorr, Errors) {
  std::mt19937 rng(5);
  try {
    xcorr(test::random_map(2, 2, 3, rng), test::random_map(4, 4, 2, rng));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kChannelMismatch);
  }
  EXPECT_THROW(xcorr(test::random_map(5, 2, 1, rng), test::random_map(4, 4, 1, rng)), Error);
  EXPECT_THROW(xcorr_fft(test::random_map(2, 2, 3, rng), test::random_map(4, 4, 2, rng)), Error);
}

TEST(XcorrFft, AgreesWithDirectOnRandomPairs) {
  std::mt19937 rng(6);
  std::uniform_int_distribution<int> dim(1, 22), ch(1, 32);
  for (int n = 0; n < 200; ++n) {
    const int xh = dim(rng), xw = dim(rng), c = ch(rng);
    const int zh = std::uniform_int_distribution<int>(1, xh)(rng);
    const int zw = std::uniform_int_distribution<int>(1, xw)(rng);
    const FeatureMap z = test::random_map(zh, zw, c, rng);
    const FeatureMap x = test::random_map(xh, xw, c, rng);
    const ResponseMap a = xcorr(z, x);
    const ResponseMap b = xcorr_fft(z, x);
    ASSERT_EQ(a.height, b.height);
    ASSERT_EQ(a.width, b.width);
    const double scale = std::max(max_abs(a), 1e-12);
    for (std::size_t i = 0; i < a.data.size(); ++i) ASSERT_LE(std::abs(a.data[i] - b.data[i]) / scale, 1e-5);
  }
}

TEST(XcorrFft, ConcurrentCallsMatchSerial) {
  std::mt19937 rng(7);
  std::vector<FeatureMap> zs, xs;
  for (int i = 0; i < 8; ++i) {
    zs.push_back(test::random_map(6, 6, 8 + i, rng));
    xs.push_back(test::random_map(22, 22, 8 + i, rng));
  }
  std::vector<ResponseMap> serial;
  for (int i = 0; i < 8; ++i) serial.push_back(xcorr_fft(zs[i], xs[i]));
  std::vector<ResponseMap> par(8);
  std::vector<std::thread> pool;
  for (int i = 0; i < 8; ++i) pool.emplace_back([&, i] { par[i] = xcorr_fft(zs[i], xs[i]); });
  for (auto& t : pool) t.join();
  for (int i = 0; i < 8; ++i) EXPECT_EQ(serial[i].data, par[i].data);
}

TEST(Upsample, FactorOneIsIdentity) {
  ResponseMap m(17, 17);
  std::mt19937 rng(8);
  for (double& v : m.data) v = std::uniform_real_distribution<double>(-1, 1)(rng);
  EXPECT_EQ(upsample_response(m, 1).data, m.data);
}

TEST(Upsample, ConstantStaysConstant) {
  const ResponseMap up = upsample_response(ResponseMap(17, 17, 0.37), 16);
  EXPECT_EQ(up.height, 257);
  EXPECT_EQ(up.width, 257);
  for (double v : up.data) EXPECT_NEAR(v, 0.37, 1e-12);
}

TEST(Upsample, CentralPeakStaysCentral) {
  ResponseMap m(17, 17, 0.0);
  m.at(8, 8) = 1.0;
  const Peak p = argmax(upsample_response(m, 16));
  EXPECT_EQ(p.row, 128);
  EXPECT_EQ(p.col, 128);
}

TEST(Upsample, ReproducesSamplesAtGridPoints) {
  ResponseMap m(5, 7);
  std::mt19937 rng(9);
  for (double& v : m.data) v = std::uniform_real_distribution<double>(-1, 1)(rng);
  const ResponseMap up = upsample_response(m, 4);
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 7; ++c) EXPECT_NEAR(up.at(4 * r, 4 * c), m.at(r, c), 1e-12);
  }
}

TEST(Upsample, PeakWithinOneCellOfScaledInputPeak) {
  std::mt19937 rng(10);
  std::uniform_int_distribution<int> pos(0, 16);
  for (int n = 0; n < 100; ++n) {
    // Smooth single-mode maps, as produced by correlating unit-norm embeddings.
    const double pr = pos(rng) + std::uniform_real_distribution<double>(-0.4, 0.4)(rng);
    const double pc = pos(rng) + std::uniform_real_distribution<double>(-0.4, 0.4)(rng);
    ResponseMap m(17, 17);
    for (int r = 0; r < 17; ++r) {
      for (int c = 0; c < 17; ++c) m.at(r, c) = std::exp(-((r - pr) * (r - pr) + (c - pc) * (c - pc)) / 4.0);
    }
    const Peak in = argmax(m);
    const Peak out = argmax(upsample_response(m, 16));
    EXPECT_LE(std::abs(out.row - in.row * 16), 16);
    EXPECT_LE(std::abs(out.col - in.col * 16), 16);
  }
}

TEST(Window, InfluenceZeroKeepsArgmax) {
  ResponseMap m(17, 17, 0.0);
  m.at(2, 13) = 5.0;
  m.at(9, 9) = 1.0;
  const Peak p = argmax(apply_cosine_window(m, 0.0));
  EXPECT_EQ(p.row, 2);
  EXPECT_EQ(p.col, 13);
}

TEST(Window, InfluenceOnePeaksAtCenter) {
  ResponseMap m(17, 17, 0.0);
  m.at(0, 0) = 100.0;
  const Peak p = argmax(apply_cosine_window(m, 1.0));
  EXPECT_EQ(p.row, 8);
  EXPECT_EQ(p.col, 8);
}

TEST(Window, ConstantMapPeaksAtCenter) {
  const Peak p = argmax(apply_cosine_window(ResponseMap(17, 17, 3.0), 0.3));
  EXPECT_EQ(p.row, 8);
  EXPECT_EQ(p.col, 8);
}

TEST(Window, BlendIsNormalizedMapPlusHann) {
  ResponseMap m(5, 5);
  for (int i = 0; i < 25; ++i) m.data[i] = i % 7 - 2.0;
  const ResponseMap norm = normalize_response(m);
  const ResponseMap win = hann2d(5, 5);
  double s1 = 0, s2 = 0;
  for (int i = 0; i < 25; ++i) s1 += norm.data[i], s2 += win.data[i];
  EXPECT_NEAR(s1, 1.0, 1e-12);
  EXPECT_NEAR(s2, 1.0, 1e-12);
  const ResponseMap out = apply_cosine_window(m, 0.25);
  for (int i = 0; i < 25; ++i) EXPECT_NEAR(out.data[i], 0.75 * norm.data[i] + 0.25 * win.data[i], 1e-12);
  EXPECT_THROW(apply_cosine_window(m, 1.5), Error);
}
