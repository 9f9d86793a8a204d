#pragma once

// JSON (de)serialization of the tracker configuration. Keys mirror the C++
// field names one to one; missing keys keep their defaults.

#include <nlohmann/json.hpp>

#include <string>

#include "mbst/branches.hpp"
#include "mbst/error.hpp"
#include "mbst/synth.hpp"
#include "mbst/tracker.hpp"

namespace mbst {

inline void to_json(nlohmann::json& j, const BranchParams& p) {
  j = nlohmann::json{{"stride", p.stride},
                     {"field", p.field},
                     {"center", p.center},
                     {"cell_norm_eps", p.cell_norm_eps},
                     {"pool", p.pool},
                     {"orientation_bins", p.orientation_bins},
                     {"hue_bins", p.hue_bins},
                     {"sat_bins", p.sat_bins},
                     {"val_bins", p.val_bins}};
}

inline void from_json(const nlohmann::json& j, BranchParams& p) {
  p.stride = j.value("stride", p.stride);
  p.field = j.value("field", p.field);
  p.center = j.value("center", p.center);
  p.cell_norm_eps = j.value("cell_norm_eps", p.cell_norm_eps);
  p.pool = j.value("pool", p.pool);
  p.orientation_bins = j.value("orientation_bins", p.orientation_bins);
  p.hue_bins = j.value("hue_bins", p.hue_bins);
  p.sat_bins = j.value("sat_bins", p.sat_bins);
  p.val_bins = j.value("val_bins", p.val_bins);
}

inline void to_json(nlohmann::json& j, const BranchConfigEntry& e) {
  j = nlohmann::json{{"kind", e.kind}};
  if (e.id) j["id"] = *e.id;
  if (e.weight) j["weight"] = *e.weight;
  if (e.params) j["params"] = *e.params;
}

inline void from_json(const nlohmann::json& j, BranchConfigEntry& e) {
  if (j.is_string()) {
    e.kind = j.get<std::string>();
    return;
  }
  e.kind = j.at("kind").get<std::string>();
  if (j.contains("id")) e.id = j.at("id").get<int>();
  if (j.contains("weight")) e.weight = j.at("weight").get<double>();
  if (j.contains("params")) e.params = j.at("params").get<BranchParams>();
}

inline void to_json(nlohmann::json& j, const TrackerConfig& c) {
  j = nlohmann::json{{"exemplar_side", c.exemplar_side},
                     {"search_side", c.search_side},
                     {"scale_factors", c.scale_factors},
                     {"scale_penalty", c.scale_penalty},
                     {"scale_damping", c.scale_damping},
                     {"window_influence", c.window_influence},
                     {"upsample_factor", c.upsample_factor},
                     {"selection_interval", c.selection_interval},
                     {"branches", c.branches}};
}

inline void from_json(const nlohmann::json& j, TrackerConfig& c) {
  c.exemplar_side = j.value("exemplar_side", c.exemplar_side);
  c.search_side = j.value("search_side", c.search_side);
  if (j.contains("scale_factors")) c.scale_factors = j.at("scale_factors").get<std::vector<double>>();
  c.scale_penalty = j.value("scale_penalty", c.scale_penalty);
  c.scale_damping = j.value("scale_damping", c.scale_damping);
  c.window_influence = j.value("window_influence", c.window_influence);
  c.upsample_factor = j.value("upsample_factor", c.upsample_factor);
  c.selection_interval = j.value("selection_interval", c.selection_interval);
  if (j.contains("branches")) c.branches = j.at("branches").get<std::vector<BranchConfigEntry>>();
}

inline TrackerConfig parse_tracker_config(const std::string& text) {
  try {
    TrackerConfig cfg = nlohmann::json::parse(text).get<TrackerConfig>();
    cfg.validate();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad tracker config: ") + e.what());
  }
}

// Synthetic sequence specs. frame_count may be omitted and is then the sum of
// the phase lengths; init_box is [x, y, w, h] in 0-based pixels.
inline void from_json(const nlohmann::json& j, SynthSpec& s) {
  s.name = j.value("name", s.name);
  s.width = j.value("width", s.width);
  s.height = j.value("height", s.height);
  if (j.contains("init_box")) {
    const auto b = j.at("init_box").get<std::vector<double>>();
    if (b.size() != 4) throw Error(ErrorCode::kInvalidArgument, "init_box needs 4 numbers");
    s.init_box = {b[0], b[1], b[2], b[3]};
  }
  if (j.contains("motion")) {
    s.motion.clear();
    for (const auto& m : j.at("motion")) {
      s.motion.push_back({m.value("frames", 0), m.value("vx", 0.0), m.value("vy", 0.0)});
    }
  }
  s.scale_end = j.value("scale_end", s.scale_end);
  s.bounce = j.value("bounce", s.bounce);
  s.phases.clear();
  for (const auto& p : j.at("phases")) {
    s.phases.push_back({parse_regime(p.at("regime").get<std::string>()), p.at("frames").get<int>()});
  }
  int total = 0;
  for (const auto& p : s.phases) total += p.frames;
  s.frame_count = j.value("frame_count", total);
  s.noise = j.value("noise", s.noise);
  s.seed = j.value("seed", s.seed);
  s.occluder = j.value("occluder", s.occluder);
  s.transition = j.value("transition", s.transition);
}

inline SynthSpec parse_synth_spec(const std::string& text) {
  try {
    SynthSpec spec = nlohmann::json::parse(text).get<SynthSpec>();
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad synthetic spec: ") + e.what());
  }
}

}  // namespace mbst
