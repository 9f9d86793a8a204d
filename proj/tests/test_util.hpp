#pragma once

#include <algorithm>
#include <cstdint>
#include <random>

#include "mbst/feature_map.hpp"
#include "mbst/image.hpp"

namespace mbst::test {

inline ImageBuffer noise_image(int w, int h, int channels, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  ImageBuffer img(w, h, channels);
  for (float& v : img.data()) v = u(rng);
  return img;
}

inline FeatureMap random_map(int h, int w, int c, std::mt19937& rng) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  FeatureMap m(h, w, c, 8);
  for (float& v : m.data()) v = n(rng);
  return m;
}

inline Patch as_patch(ImageBuffer img) {
  Patch p;
  p.image = std::move(img);
  return p;
}

}  // namespace mbst::test

namespace mbst::test {

// Striped red target on a dark background, with per-frame Gaussian noise.
// The stripe pattern is attached to the target and scales with it.
inline ImageBuffer scene_frame(int w, int h, const BoundingBox& box, double base_size, double noise,
                               std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> n(0.0f, static_cast<float>(noise));
  ImageBuffer img(w, h, 3);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double x = c + 0.5, y = r + 0.5;
      float rgb[3] = {0.15f, 0.15f, 0.15f};
      if (x >= box.x && x < box.x + box.w && y >= box.y && y < box.y + box.h) {
        const double u = (x - box.x) * base_size / box.w;
        const double v = (y - box.y) * base_size / box.h;
        const float k = (static_cast<int>(u / 5) + static_cast<int>(v / 8)) % 2 ? 1.0f : 0.6f;
        rgb[0] = 0.92f * k;
        rgb[1] = 0.14f * k;
        rgb[2] = 0.14f * k;
      }
      for (int ch = 0; ch < 3; ++ch) img.at(r, c, ch) = std::clamp(rgb[ch] + n(rng), 0.0f, 1.0f);
    }
  }
  return img;
}

}  // namespace mbst::test
