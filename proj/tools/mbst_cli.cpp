// mbst: track sequences, run OPE benchmarks, generate synthetic data and
// measure throughput.
//
// Exit codes: 0 success, 1 tracking or evaluation failure, 2 usage or
// configuration error.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mbst/config_json.hpp"
#include "mbst/embedding_store.hpp"
#include "mbst/evaluation.hpp"
#include "mbst/report.hpp"
#include "mbst/sequence.hpp"
#include "mbst/suite.hpp"
#include "mbst/synth.hpp"
#include "mbst/tracker.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// Thrown for anything the user can fix on the command line or in a config.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrackerFlags {
  std::string config_path;
  std::string branches;
  std::string weights;
  std::string scales;
  std::optional<int> interval;
  std::string embeddings;
  bool trace = false;
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App* app) {
    app->add_option("--config", config_path, "JSON tracker config; flags override its fields");
    app->add_option("--branches", branches, "comma-separated branch kinds, e.g. intensity,color_hist");
    app->add_option("--weights", weights, "comma-separated response weights, one per branch");
    app->add_option("--interval", interval, "branch selection interval T (frames)");
    app->add_option("--scales", scales, "comma-separated search scale factors");
    app->add_option("--embeddings", embeddings, "embedding file for external branches");
    app->add_flag("--trace-selection", trace, "record every selection with its per-branch scores");
    app->add_option("--seed", seed, "seed (synthetic inputs only; tracking is deterministic)");
  }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(text);
  while (std::getline(is, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_numbers(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const auto& s : split_list(text)) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size()) throw UsageError("bad number '" + s + "' in " + what);
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(what + " is empty");
  return out;
}

mbst::TrackerConfig build_config(const TrackerFlags& f) {
  try {
    mbst::TrackerConfig cfg;
    if (!f.config_path.empty()) cfg = mbst::parse_tracker_config(read_file(f.config_path));
    if (!f.branches.empty()) {
      cfg.branches.clear();
      for (const auto& k : split_list(f.branches)) {
        mbst::parse_branch_kind(k);
        cfg.branches.push_back({k});
      }
    }
    if (!f.weights.empty()) {
      const auto w = parse_numbers(f.weights, "--weights");
      if (w.size() != cfg.branches.size()) {
        throw UsageError("--weights has " + std::to_string(w.size()) + " values for " +
                         std::to_string(cfg.branches.size()) + " branches");
      }
      for (std::size_t i = 0; i < w.size(); ++i) cfg.branches[i].weight = w[i];
    }
    if (f.interval) cfg.selection_interval = *f.interval;
    if (!f.scales.empty()) cfg.scale_factors = parse_numbers(f.scales, "--scales");
    cfg.validate();
    mbst::register_builtin_branches(cfg.branches);
    return cfg;
  } catch (const mbst::Error& e) {
    throw UsageError(e.what());
  }
}

std::optional<mbst::EmbeddingStore> load_store(const TrackerFlags& f) {
  if (f.embeddings.empty()) return std::nullopt;
  try {
    return mbst::load_embedding_store(f.embeddings);
  } catch (const mbst::Error& e) {
    throw UsageError(e.what());
  }
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

std::vector<mbst::Sequence> load_dataset(const std::string& dir) {
  if (!fs::is_directory(dir)) throw UsageError("dataset directory not found: " + dir);
  std::vector<fs::path> seq_dirs;
  if (fs::exists(fs::path(dir) / "groundtruth_rect.txt")) {
    seq_dirs.push_back(dir);
  } else {
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_directory() && fs::exists(e.path() / "groundtruth_rect.txt")) seq_dirs.push_back(e.path());
    }
  }
  std::sort(seq_dirs.begin(), seq_dirs.end());
  if (seq_dirs.empty()) throw UsageError("no sequences under " + dir);
  std::vector<mbst::Sequence> out;
  for (const auto& p : seq_dirs) {
    try {
      out.push_back(mbst::load_otb_sequence(p));
    } catch (const mbst::Error& e) {
      // A malformed sequence stays in the dataset so the report lists it as skipped.
      mbst::Sequence bad;
      bad.name = p.filename().string();
      out.push_back(std::move(bad));
      std::cerr << "warning: " << e.what() << '\n';
    }
  }
  return out;
}

// ---- track ----------------------------------------------------------------

int cmd_track(const std::string& seq_dir, const std::string& out_path, std::uint32_t sequence_id,
              const TrackerFlags& flags) {
  const mbst::TrackerConfig cfg = build_config(flags);
  const auto store = load_store(flags);
  if (!fs::is_directory(seq_dir)) throw UsageError("sequence directory not found: " + seq_dir);
  mbst::Sequence seq;
  try {
    seq = mbst::load_otb_sequence(seq_dir);
  } catch (const mbst::Error& e) {
    throw UsageError(e.what());
  }
  mbst::MultiBranchTracker tracker(cfg, store ? &*store : nullptr, sequence_id);
  mbst::SequenceResult result;
  try {
    result = mbst::run_sequence(seq, tracker);
  } catch (const std::exception& e) {
    std::cerr << "error: tracking failed: " << e.what() << '\n';
    return kExitFailure;
  }
  std::ostringstream csv;
  csv << "frame,x,y,w,h,active_branch\n";
  char buf[160];
  for (std::size_t i = 0; i < result.boxes.size(); ++i) {
    const auto& b = result.boxes[i];
    // Written in the 1-based convention of groundtruth_rect.txt.
    std::snprintf(buf, sizeof buf, "%zu,%.3f,%.3f,%.3f,%.3f,%d\n", i + 1, b.x + 1.0, b.y + 1.0, b.w, b.h,
                  result.active_branches[i]);
    csv << buf;
  }
  write_output(out_path, csv.str());
  if (flags.trace) {
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& e : result.selections) trace.push_back(mbst::to_json(e));
    std::cerr << trace.dump() << '\n';
  }
  std::cerr << seq.name << ": precision@20 " << result.precision.at20 << ", AUC " << result.success.auc << '\n';
  return kExitOk;
}

// ---- eval -----------------------------------------------------------------

int cmd_eval(const std::string& dataset_dir, const std::string& out_path, const std::string& format, int jobs,
             bool ablation, const std::string& sweep, const TrackerFlags& flags) {
  const mbst::TrackerConfig cfg = build_config(flags);
  const auto store = load_store(flags);
  const mbst::EmbeddingStore* store_ptr = store ? &*store : nullptr;
  if (ablation && !sweep.empty()) throw UsageError("--ablation and --sweep-interval are exclusive");
  const auto dataset = load_dataset(dataset_dir);

  std::vector<int> intervals;
  if (!sweep.empty()) {
    for (double v : parse_numbers(sweep, "--sweep-interval")) {
      if (v < 1 || v != static_cast<int>(v)) throw UsageError("selection intervals must be positive integers");
      intervals.push_back(static_cast<int>(v));
    }
  }

  // Labeled reports: one for a plain run, one per subset or interval otherwise.
  std::vector<std::pair<std::string, mbst::EvalReport>> rows;
  if (ablation) {
    for (auto& row : mbst::run_ablation(dataset, cfg, store_ptr, jobs)) rows.emplace_back(row.label, std::move(row.report));
  } else if (!intervals.empty()) {
    for (auto& row : mbst::run_interval_sweep(dataset, cfg, intervals, store_ptr, jobs)) {
      rows.emplace_back("T=" + std::to_string(row.interval), std::move(row.report));
    }
  } else {
    rows.emplace_back("tracker", mbst::run_ope(dataset, cfg, store_ptr, jobs));
  }

  std::vector<mbst::CurveSet> curves;
  for (const auto& [label, rep] : rows) curves.push_back({label, rep.overall});
  const bool multi = ablation || !intervals.empty();
  std::string text;
  if (format == "json") {
    if (multi) {
      nlohmann::json j = nlohmann::json::array();
      for (std::size_t i = 0; i < rows.size(); ++i) {
        nlohmann::json row = mbst::to_json(rows[i].second, flags.trace);
        row["label"] = rows[i].first;
        if (!intervals.empty()) row["interval"] = intervals[i];
        j.push_back(std::move(row));
      }
      text = j.dump(2) + "\n";
    } else {
      text = mbst::to_json(rows.front().second, flags.trace).dump(2) + "\n";
    }
  } else if (format == "csv") {
    text = multi ? mbst::summary_csv(curves) : mbst::report_csv(rows.front().second);
  } else {
    text = mbst::plots_svg(curves);
  }
  write_output(out_path, text);

  int failed = 0;
  for (const auto& [label, rep] : rows) {
    for (const auto& r : rep.sequences) {
      if (!r.ok) {
        ++failed;
        std::cerr << "warning: " << label << ": sequence " << r.name << " skipped: " << r.error << '\n';
      }
    }
  }
  for (const auto& c : curves) {
    std::fprintf(stderr, "%-32s precision@20 %.4f  AUC %.4f  (%d sequences)\n", c.label.c_str(),
                 c.metrics.precision_at_20, c.metrics.auc, c.metrics.sequences);
  }
  return failed > 0 ? kExitFailure : kExitOk;
}

// ---- synth-gen ------------------------------------------------------------

int cmd_synth(const std::string& out_dir, const std::string& preset, const std::string& spec_path,
              std::optional<std::uint64_t> seed) {
  if (preset.empty() == spec_path.empty()) throw UsageError("give exactly one of --preset or --spec");
  std::vector<std::pair<mbst::SynthSpec, mbst::Sequence>> items;
  if (!preset.empty()) {
    if (preset != "alternating") throw UsageError("unknown preset '" + preset + "' (known: alternating)");
    for (auto& e : mbst::alternating_suite(seed.value_or(7))) items.emplace_back(e.spec, std::move(e.sequence));
  } else {
    mbst::SynthSpec spec;
    try {
      spec = mbst::parse_synth_spec(read_file(spec_path));
      if (seed) spec.seed = *seed;
    } catch (const mbst::Error& e) {
      throw UsageError(e.what());
    }
    items.emplace_back(spec, mbst::generate(spec));
  }
  for (const auto& [spec, seq] : items) {
    mbst::write_otb_sequence(seq, fs::path(out_dir) / seq.name);
    std::cerr << "wrote " << (fs::path(out_dir) / seq.name).string() << " (" << seq.size() << " frames)\n";
  }
  return kExitOk;
}

// ---- bench ----------------------------------------------------------------

struct BenchRow {
  std::string label;
  int interval = 0;
  mbst::WorkCounters counters;
  double seconds = 0.0;
  double selection_ms = 0.0;  // mean per selection frame
  double other_ms = 0.0;      // mean per non-selection frame
};

BenchRow bench_one(const std::string& label, const mbst::TrackerConfig& cfg, const mbst::Sequence& seq,
                   const mbst::EmbeddingStore* store) {
  using clock = std::chrono::steady_clock;
  mbst::MultiBranchTracker tracker(cfg, store, 0);
  std::vector<mbst::ImageBuffer> frames;
  for (std::size_t i = 0; i < seq.size(); ++i) frames.push_back(seq.frame(i));
  tracker.init(frames[0], seq.ground_truth[0]);
  double sel = 0.0, other = 0.0;
  int n_sel = 0, n_other = 0;
  const auto t0 = clock::now();
  for (std::size_t i = 1; i < frames.size(); ++i) {
    const auto a = clock::now();
    const auto r = tracker.track(frames[i]);
    const double ms = std::chrono::duration<double, std::milli>(clock::now() - a).count();
    (r.selected ? sel : other) += ms;
    ++(r.selected ? n_sel : n_other);
  }
  BenchRow row;
  row.label = label;
  row.interval = cfg.selection_interval;
  row.seconds = std::chrono::duration<double>(clock::now() - t0).count();
  row.counters = tracker.counters();
  row.selection_ms = n_sel ? sel / n_sel : 0.0;
  row.other_ms = n_other ? other / n_other : 0.0;
  return row;
}

int cmd_bench(const std::string& dataset_dir, const std::string& out_path, const TrackerFlags& flags) {
  const mbst::TrackerConfig cfg = build_config(flags);
  const auto store = load_store(flags);
  mbst::Sequence seq;
  if (!dataset_dir.empty()) {
    seq = load_dataset(dataset_dir).front();
  } else {
    seq = mbst::alternating_suite(flags.seed.value_or(7)).front().sequence;
  }

  std::vector<std::pair<std::string, mbst::TrackerConfig>> configs;
  for (const auto& b : cfg.branches) {
    mbst::TrackerConfig c = cfg;
    c.branches = {b};
    configs.emplace_back(b.kind, c);
  }
  if (cfg.branches.size() > 1) {
    configs.emplace_back(mbst::subset_label(cfg.branches), cfg);
    if (cfg.selection_interval != 1) {
      mbst::TrackerConfig c = cfg;
      c.selection_interval = 1;
      configs.emplace_back(mbst::subset_label(cfg.branches) + " (T=1)", c);
    }
  }

  nlohmann::json rows = nlohmann::json::array();
  for (const auto& [label, c] : configs) {
    BenchRow r;
    try {
      r = bench_one(label, c, seq, store ? &*store : nullptr);
    } catch (const std::exception& e) {
      std::cerr << "error: " << label << ": " << e.what() << '\n';
      return kExitFailure;
    }
    const double frames = static_cast<double>(r.counters.frames);
    rows.push_back({{"label", r.label},
                    {"branches", c.branches.size()},
                    {"interval", r.interval},
                    {"work",
                     {{"frames", r.counters.frames},
                      {"selection_frames", r.counters.selection_frames},
                      {"selection_embeddings", r.counters.selection_embeddings},
                      {"scale_embeddings", r.counters.scale_embeddings}}},
                    {"timing",
                     {{"fps", frames / r.seconds},
                      {"selection_frame_ms", r.selection_ms},
                      {"tracking_frame_ms", r.other_ms}}}});
    std::fprintf(stderr, "%-40s %8.1f fps  selection frame %.2f ms  other frame %.2f ms\n", r.label.c_str(),
                 frames / r.seconds, r.selection_ms, r.other_ms);
  }
  nlohmann::json report = {{"sequence", seq.name},
                           {"frames", seq.size()},
                           {"search_side", cfg.search_side},
                           {"config", cfg},
                           {"rows", rows}};
  write_output(out_path, report.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-branch template tracker with online branch selection"};
  app.require_subcommand(1);

  std::string out_path;
  TrackerFlags track_flags, eval_flags, bench_flags;

  auto* track = app.add_subcommand("track", "track one OTB-layout sequence and write per-frame boxes as CSV");
  std::string track_dir;
  std::uint32_t sequence_id = 0;
  track->add_option("sequence", track_dir, "sequence directory (img/ and groundtruth_rect.txt)")->required();
  track->add_option("-o,--output", out_path, "output CSV (default stdout)");
  track->add_option("--sequence-id", sequence_id, "sequence id used to look up external embeddings");
  track_flags.add_to(track);

  auto* eval = app.add_subcommand("eval", "one-pass evaluation over a directory of sequences");
  std::string eval_dir, format = "json", sweep;
  int jobs = 0;
  bool ablation = false;
  eval->add_option("dataset", eval_dir, "directory of OTB-layout sequences")->required();
  eval->add_option("-o,--output", out_path, "output file (default stdout)");
  eval->add_option("--format", format, "json, csv or svg")->check(CLI::IsMember({"json", "csv", "svg"}));
  eval->add_option("--jobs", jobs, "worker threads (default: all cores)")->check(CLI::NonNegativeNumber);
  eval->add_flag("--ablation", ablation, "evaluate every non-empty subset of the configured branches");
  eval->add_option("--sweep-interval", sweep, "comma-separated selection intervals, e.g. 1,3,5,7,10,13");
  eval_flags.add_to(eval);

  auto* synth = app.add_subcommand("synth-gen", "write synthetic sequences in the OTB layout");
  std::string synth_dir, preset, spec_path;
  std::optional<std::uint64_t> synth_seed;
  synth->add_option("output", synth_dir, "output directory")->required();
  synth->add_option("--preset", preset, "named suite: alternating");
  synth->add_option("--spec", spec_path, "JSON sequence spec");
  synth->add_option("--seed", synth_seed, "noise seed");

  auto* bench = app.add_subcommand("bench", "throughput of single branches and of the full branch set");
  std::string bench_dir;
  bench->add_option("--dataset", bench_dir, "use the first sequence of this directory instead of a synthetic one");
  bench->add_option("-o,--output", out_path, "output JSON (default stdout)");
  bench_flags.add_to(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*track) return cmd_track(track_dir, out_path, sequence_id, track_flags);
    if (*eval) return cmd_eval(eval_dir, out_path, format, jobs, ablation, sweep, eval_flags);
    if (*synth) return cmd_synth(synth_dir, preset, spec_path, synth_seed);
    if (*bench) return cmd_bench(bench_dir, out_path, bench_flags);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
