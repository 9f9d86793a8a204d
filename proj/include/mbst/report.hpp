#pragma once

// Evaluation report output: full JSON, a per-sequence CSV summary, and SVG
// precision/success plots. None of these carry wall-clock data, so equal
// inputs always produce byte-identical files.

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mbst/evaluation.hpp"
#include "mbst/metrics.hpp"

namespace mbst {

inline nlohmann::json to_json(const AggregateMetrics& a) {
  return {{"sequences", a.sequences},
          {"precision_at_20", a.precision_at_20},
          {"auc", a.auc},
          {"mean_iou", a.mean_iou},
          {"precision_rates", a.precision_rates},
          {"success_rates", a.success_rates}};
}

inline nlohmann::json to_json(const SelectionEvent& e) {
  nlohmann::json scores = nlohmann::json::array();
  for (const auto& s : e.scores) {
    scores.push_back({{"branch", s.branch_id}, {"peak", s.peak}, {"floor", s.floor}, {"weight", s.weight},
                      {"power", s.power}});
  }
  return {{"frame", e.frame_index}, {"chosen", e.chosen}, {"scores", scores}};
}

inline nlohmann::json to_json(const SequenceResult& r, bool with_trace) {
  nlohmann::json j = {{"name", r.name}, {"attributes", r.attributes}, {"ok", r.ok}};
  if (!r.ok) {
    j["error"] = r.error;
    return j;
  }
  nlohmann::json boxes = nlohmann::json::array();
  for (const auto& b : r.boxes) boxes.push_back({b.x, b.y, b.w, b.h});
  j["frames"] = r.boxes.size();
  j["precision_at_20"] = r.precision.at20;
  j["auc"] = r.success.auc;
  j["mean_iou"] = r.mean_iou();
  j["mean_center_error"] = r.mean_center_error();
  j["precision_rates"] = r.precision.rates;
  j["success_rates"] = r.success.rates;
  j["boxes"] = boxes;
  j["active_branches"] = r.active_branches;
  j["center_errors"] = r.center_errors;
  j["ious"] = r.ious;
  if (with_trace) {
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& e : r.selections) trace.push_back(to_json(e));
    j["selections"] = trace;
  }
  return j;
}

inline nlohmann::json to_json(const EvalReport& report, bool with_trace = false) {
  nlohmann::json seqs = nlohmann::json::array();
  for (const auto& r : report.sequences) seqs.push_back(to_json(r, with_trace));
  nlohmann::json attrs = nlohmann::json::object();
  for (const auto& [name, a] : report.by_attribute) attrs[name] = to_json(a);
  nlohmann::json thresholds = {{"precision_px", nlohmann::json::array()}, {"success_iou", nlohmann::json::array()}};
  for (int t = 0; t <= kPrecisionMaxThreshold; ++t) thresholds["precision_px"].push_back(t);
  for (int i = 0; i <= kSuccessSteps; ++i) thresholds["success_iou"].push_back(static_cast<double>(i) / kSuccessSteps);
  return {{"config", report.config},
          {"thresholds", thresholds},
          {"overall", to_json(report.overall)},
          {"by_attribute", attrs},
          {"sequences", seqs}};
}

inline std::string report_csv(const EvalReport& report) {
  std::ostringstream os;
  os << "sequence,ok,frames,precision_at_20,auc,mean_iou,mean_center_error,attributes\n";
  char buf[160];
  for (const auto& r : report.sequences) {
    std::string attrs;
    for (const auto& a : r.attributes) attrs += (attrs.empty() ? "" : ";") + a;
    if (!r.ok) {
      os << r.name << ",0,0,,,,," << attrs << '\n';
      continue;
    }
    std::snprintf(buf, sizeof buf, ",1,%zu,%.6f,%.6f,%.6f,%.4f,", r.boxes.size(), r.precision.at20, r.success.auc,
                  r.mean_iou(), r.mean_center_error());
    os << r.name << buf << attrs << '\n';
  }
  return os.str();
}

// One labeled row per configuration, e.g. an ablation or an interval sweep.
struct CurveSet {
  std::string label;
  AggregateMetrics metrics;
};

inline std::string summary_csv(const std::vector<CurveSet>& rows) {
  std::ostringstream os;
  os << "label,sequences,precision_at_20,auc,mean_iou\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, ",%d,%.6f,%.6f,%.6f", r.metrics.sequences, r.metrics.precision_at_20,
                  r.metrics.auc, r.metrics.mean_iou);
    os << r.label << buf << '\n';
  }
  return os.str();
}

namespace detail {

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline void svg_panel(std::ostringstream& os, double x0, const std::string& title, const std::string& xlabel,
                      double x_max, const std::vector<CurveSet>& sets, bool success) {
  constexpr double w = 360, h = 260, pad = 40;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2",
                                 "#7f7f7f"};
  char buf[256];
  std::snprintf(buf, sizeof buf, "<g transform=\"translate(%.0f,0)\">\n", x0);
  os << buf;
  std::snprintf(buf, sizeof buf,
                "<rect x=\"%.0f\" y=\"%.0f\" width=\"%.0f\" height=\"%.0f\" fill=\"none\" stroke=\"#444\"/>\n", pad,
                pad, w, h);
  os << buf;
  os << "<text x=\"" << pad + w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << svg_escape(title)
     << "</text>\n";
  os << "<text x=\"" << pad + w / 2 << "\" y=\"" << pad + h + 32
     << "\" text-anchor=\"middle\" font-size=\"12\">" << svg_escape(xlabel) << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double y = pad + h - h * i / 4.0;
    std::snprintf(buf, sizeof buf, "<text x=\"%.0f\" y=\"%.1f\" text-anchor=\"end\" font-size=\"10\">%.2f</text>\n",
                  pad - 4, y + 3, i / 4.0);
    os << buf;
  }
  for (std::size_t k = 0; k < sets.size(); ++k) {
    const auto& rates = success ? sets[k].metrics.success_rates : sets[k].metrics.precision_rates;
    if (rates.empty()) continue;
    os << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << colors[k % 8] << "\" points=\"";
    for (std::size_t i = 0; i < rates.size(); ++i) {
      const double xv = success ? static_cast<double>(i) / kSuccessSteps : static_cast<double>(i);
      std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", i ? " " : "", pad + w * xv / x_max, pad + h - h * rates[i]);
      os << buf;
    }
    os << "\"/>\n";
    const double score = success ? sets[k].metrics.auc : sets[k].metrics.precision_at_20;
    std::snprintf(buf, sizeof buf, " [%.3f]", score);
    const double ly = success ? pad + 14 + 14 * k : pad + h - 8 - 14 * (sets.size() - 1 - k);
    const double lx = pad + w - 6;
    os << "<text x=\"" << lx << "\" y=\"" << ly << "\" text-anchor=\"end\" font-size=\"11\" fill=\""
       << colors[k % 8] << "\">" << svg_escape(sets[k].label) << buf << "</text>\n";
  }
  os << "</g>\n";
}

}  // namespace detail

// Precision plot (left) and success plot (right) for one or more labeled
// configurations.
inline std::string plots_svg(const std::vector<CurveSet>& sets) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"880\" height=\"340\" font-family=\"sans-serif\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  detail::svg_panel(os, 0, "Precision plots of OPE", "Location error threshold (px)", kPrecisionMaxThreshold, sets,
                    false);
  detail::svg_panel(os, 440, "Success plots of OPE", "Overlap threshold", 1.0, sets, true);
  os << "</svg>\n";
  return os.str();
}

}  // namespace mbst
