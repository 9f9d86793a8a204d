#pragma once

// Sequences in the OTB directory layout:
//
//   <name>/img/0001.png ...        zero-padded, numbered frames (png/jpg)
//   <name>/groundtruth_rect.txt    one "x,y,w,h" per frame, 1-based pixels;
//                                  comma, tab or space separated
//   <name>/attributes.txt          optional attribute tags (e.g. OCC, DEF)

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "mbst/error.hpp"
#include "mbst/image.hpp"
#include "mbst/image_io.hpp"

namespace mbst {

struct Sequence {
  std::string name;
  std::vector<std::string> frame_paths;
  std::vector<ImageBuffer> frames;  // in-memory frames; take precedence over paths
  std::vector<BoundingBox> ground_truth;
  std::vector<std::string> attributes;

  std::size_t size() const { return frames.empty() ? frame_paths.size() : frames.size(); }

  ImageBuffer frame(std::size_t i) const {
    if (!frames.empty()) return frames.at(i);
    return read_image(frame_paths.at(i));
  }

  void validate() const {
    if (size() == 0) throw Error(ErrorCode::kEmptyInput, "sequence '" + name + "' has no frames");
    if (ground_truth.size() != size()) {
      throw Error(ErrorCode::kCountMismatch, "sequence '" + name + "' has " + std::to_string(size()) + " frames but " +
                                                 std::to_string(ground_truth.size()) + " ground-truth boxes");
    }
    require_valid(ground_truth.front());
  }
};

namespace detail {

inline std::vector<double> split_numbers(const std::string& line) {
  std::string cleaned = line;
  std::replace_if(cleaned.begin(), cleaned.end(), [](char c) { return c == ',' || c == '\t' || c == ';'; }, ' ');
  std::istringstream is(cleaned);
  std::vector<double> values;
  std::string tok;
  while (is >> tok) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kCorruptFile, "not a number in ground truth: '" + tok + "'");
    }
  }
  return values;
}

inline bool is_image_file(const std::filesystem::path& p) {
  const std::string ext = lower_extension(p.string());
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace detail

// Parses OTB ground truth; 1-based coordinates become 0-based.
inline std::vector<BoundingBox> parse_ground_truth(std::istream& is) {
  std::vector<BoundingBox> boxes;
  std::string line;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    const auto v = detail::split_numbers(line);
    if (v.size() != 4) {
      throw Error(ErrorCode::kCorruptFile, "ground-truth line needs 4 values, got " + std::to_string(v.size()));
    }
    boxes.push_back({v[0] - 1.0, v[1] - 1.0, v[2], v[3]});
  }
  return boxes;
}

inline Sequence load_otb_sequence(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kMissingFile, "sequence directory not found: " + dir.string());
  const fs::path img_dir = dir / "img";
  const fs::path gt_path = dir / "groundtruth_rect.txt";
  if (!fs::is_directory(img_dir)) throw Error(ErrorCode::kMissingFile, "missing img/ in " + dir.string());
  if (!fs::exists(gt_path)) throw Error(ErrorCode::kMissingFile, "missing groundtruth_rect.txt in " + dir.string());

  Sequence seq;
  seq.name = dir.filename().string();
  if (seq.name.empty()) seq.name = dir.parent_path().filename().string();
  for (const auto& entry : fs::directory_iterator(img_dir)) {
    if (entry.is_regular_file() && detail::is_image_file(entry.path())) seq.frame_paths.push_back(entry.path().string());
  }
  std::sort(seq.frame_paths.begin(), seq.frame_paths.end());

  std::ifstream gt(gt_path);
  seq.ground_truth = parse_ground_truth(gt);

  const fs::path attr_path = dir / "attributes.txt";
  if (fs::exists(attr_path)) {
    std::ifstream as(attr_path);
    std::string tok;
    std::string all((std::istreambuf_iterator<char>(as)), std::istreambuf_iterator<char>());
    std::replace(all.begin(), all.end(), ',', ' ');
    std::istringstream is(all);
    while (is >> tok) seq.attributes.push_back(tok);
  }
  seq.validate();
  return seq;
}

// Writes frames and ground truth in the layout load_otb_sequence reads.
inline void write_otb_sequence(const Sequence& seq, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "img");
  for (std::size_t i = 0; i < seq.size(); ++i) {
    std::ostringstream name;
    name << std::setw(4) << std::setfill('0') << (i + 1) << ".png";
    write_png((dir / "img" / name.str()).string(), seq.frame(i));
  }
  std::ofstream gt(dir / "groundtruth_rect.txt");
  gt << std::setprecision(10);
  for (const auto& b : seq.ground_truth) gt << b.x + 1.0 << ',' << b.y + 1.0 << ',' << b.w << ',' << b.h << '\n';
  if (!seq.attributes.empty()) {
    std::ofstream as(dir / "attributes.txt");
    for (std::size_t i = 0; i < seq.attributes.size(); ++i) as << (i ? "," : "") << seq.attributes[i];
    as << '\n';
  }
}

}  // namespace mbst
