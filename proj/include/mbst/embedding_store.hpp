#pragma once

// Precomputed embeddings for the external branch.
//
// File layout (little-endian):
//   char[8]  magic "MBSTEMB1"
//   u32      record count
//   per record:
//     u32 sequence id, u32 frame index, u8 role (0 = exemplar, 1+k = search scale k),
//     u16 H, u16 W, u16 C, u16 stride, then H*W*C float32 row-major.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "mbst/error.hpp"
#include "mbst/feature_map.hpp"

namespace mbst {

inline constexpr std::array<char, 8> kEmbeddingMagic = {'M', 'B', 'S', 'T', 'E', 'M', 'B', '1'};

struct PatchRole {
  std::uint8_t code = 0;

  static PatchRole exemplar() { return {0}; }
  static PatchRole search(int scale_index) { return {static_cast<std::uint8_t>(1 + scale_index)}; }

  bool is_exemplar() const { return code == 0; }
  int scale_index() const { return static_cast<int>(code) - 1; }

  friend auto operator<=>(const PatchRole&, const PatchRole&) = default;
};

struct EmbeddingKey {
  std::uint32_t sequence_id = 0;
  std::uint32_t frame_index = 0;
  PatchRole role;

  friend auto operator<=>(const EmbeddingKey&, const EmbeddingKey&) = default;
};

class EmbeddingStore {
 public:
  // Inserts or replaces a map, enforcing that all exemplar maps share one
  // shape and all search maps share one shape.
  void insert(const EmbeddingKey& key, FeatureMap map) {
    std::optional<FeatureMap>& ref = key.role.is_exemplar() ? exemplar_shape_ : search_shape_;
    if (ref && !ref->same_shape(map)) {
      throw Error(ErrorCode::kDimensionMismatch,
                  std::string(key.role.is_exemplar() ? "exemplar" : "search") +
                      " map dims differ from earlier records of the same role");
    }
    if (!ref) ref = FeatureMap(map.height(), map.width(), map.channels(), map.stride());
    maps_.insert_or_assign(key, std::move(map));
  }

  const FeatureMap* find(const EmbeddingKey& key) const {
    auto it = maps_.find(key);
    return it == maps_.end() ? nullptr : &it->second;
  }

  const FeatureMap& at(const EmbeddingKey& key) const {
    const FeatureMap* m = find(key);
    if (!m) {
      throw Error(ErrorCode::kMissingEmbedding,
                  "no embedding for sequence " + std::to_string(key.sequence_id) + ", frame " +
                      std::to_string(key.frame_index) + ", role " + std::to_string(key.role.code));
    }
    return *m;
  }

  std::size_t size() const { return maps_.size(); }
  const std::map<EmbeddingKey, FeatureMap>& records() const { return maps_; }

 private:
  std::map<EmbeddingKey, FeatureMap> maps_;
  std::optional<FeatureMap> exemplar_shape_;
  std::optional<FeatureMap> search_shape_;
};

namespace detail {

template <typename T>
void put_le(std::ostream& os, T value) {
  std::array<unsigned char, sizeof(T)> bytes{};
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  os.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get_le(std::istream& is, const char* what) {
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!is.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) {
    throw Error(ErrorCode::kCorruptFile, std::string("truncated embedding file while reading ") + what);
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace detail

inline void save_embedding_store(const EmbeddingStore& store, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
  os.write(kEmbeddingMagic.data(), kEmbeddingMagic.size());
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(store.size()));
  for (const auto& [key, map] : store.records()) {
    detail::put_le<std::uint32_t>(os, key.sequence_id);
    detail::put_le<std::uint32_t>(os, key.frame_index);
    detail::put_le<std::uint8_t>(os, key.role.code);
    detail::put_le<std::uint16_t>(os, static_cast<std::uint16_t>(map.height()));
    detail::put_le<std::uint16_t>(os, static_cast<std::uint16_t>(map.width()));
    detail::put_le<std::uint16_t>(os, static_cast<std::uint16_t>(map.channels()));
    detail::put_le<std::uint16_t>(os, static_cast<std::uint16_t>(map.stride()));
    for (float v : map.data()) detail::put_le<float>(os, v);
  }
  if (!os) throw Error(ErrorCode::kIo, "write failed for " + path);
}

inline EmbeddingStore load_embedding_store(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::kMissingFile, "cannot open embedding file " + path);
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kEmbeddingMagic) {
    throw Error(ErrorCode::kCorruptFile, "bad magic header in " + path);
  }
  const auto count = detail::get_le<std::uint32_t>(is, "record count");
  EmbeddingStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    EmbeddingKey key;
    key.sequence_id = detail::get_le<std::uint32_t>(is, "sequence id");
    key.frame_index = detail::get_le<std::uint32_t>(is, "frame index");
    key.role.code = detail::get_le<std::uint8_t>(is, "role");
    const int h = detail::get_le<std::uint16_t>(is, "height");
    const int w = detail::get_le<std::uint16_t>(is, "width");
    const int c = detail::get_le<std::uint16_t>(is, "channels");
    const int stride = detail::get_le<std::uint16_t>(is, "stride");
    if (h == 0 || w == 0 || c == 0 || stride == 0) {
      throw Error(ErrorCode::kCorruptFile, "record " + std::to_string(i) + " has a zero dimension");
    }
    std::vector<float> data(static_cast<std::size_t>(h) * w * c);
    for (float& v : data) {
      v = detail::get_le<float>(is, "feature data");
      if (!std::isfinite(v)) throw Error(ErrorCode::kCorruptFile, "non-finite feature value");
    }
    store.insert(key, FeatureMap(h, w, c, stride, std::move(data)));
  }
  return store;
}

}  // namespace mbst
