// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mbst/branches.hpp"
#include "mbst/correlation.hpp"
#include "mbst/evaluation.hpp"
#include "mbst/metrics.hpp"
#include "mbst/selection.hpp"
#include "mbst/suite.hpp"
#include "mbst/tracker.hpp"
#include "test_util.hpp"

using namespace mbst;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("criterion %d %-22s %s  %s\n", id, name, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void correlation_oracle() {
  const auto t0 = Clock::now();
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> dim(1, 22), ch(1, 32);
  double worst = 0.0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    const int xh = dim(rng), xw = dim(rng), c = ch(rng);
    const int zh = std::uniform_int_distribution<int>(1, xh)(rng);
    const int zw = std::uniform_int_distribution<int>(1, xw)(rng);
    const FeatureMap z = test::random_map(zh, zw, c, rng);
    const FeatureMap x = test::random_map(xh, xw, c, rng);
    const ResponseMap a = xcorr(z, x);
    const ResponseMap b = xcorr_fft(z, x);
    if (a.height != b.height || a.width != b.width) {
      worst = INFINITY;
      break;
    }
    double scale = 1e-300, err = 0.0;
    for (std::size_t k = 0; k < a.data.size(); ++k) {
      scale = std::max(scale, std::abs(a.data[k]));
      err = std::max(err, std::abs(a.data[k] - b.data[k]));
    }
    worst = std::max(worst, err / scale);
  }
  const double secs = seconds_since(t0);
  report(1, "correlation-oracle", worst <= 1e-5 && secs < 10.0,
         fmt("%d pairs, max relative error %.2e, %.2f s", n, worst, secs));
}

void selection_conformance() {
  std::mt19937 rng(77);
  std::uniform_int_distribution<int> nb(1, 6);
  std::uniform_real_distribution<double> val(-1.0, 1.0), wt(0.0, 12.0);
  int mismatches = 0, ties = 0;
  for (int n = 0; n < 1000; ++n) {
    const int k = nb(rng);
    std::vector<ResponseMap> maps;
    std::vector<double> weights;
    for (int i = 0; i < k; ++i) {
      // Every fifth case copies branch 0 into the last branch to force a tie.
      if (i == k - 1 && k > 1 && n % 5 == 0) {
        maps.push_back(maps[0]);
        weights.push_back(weights[0]);
        ++ties;
      } else {
        ResponseMap m(17, 17);
        for (double& v : m.data) v = val(rng);
        maps.push_back(m);
        weights.push_back(wt(rng));
      }
      maps.back().branch_id = i;
    }
    for (double c : {1.0, 0.5, 2.0, 10.0}) {
      // Reference: plain loops, strict > keeps the earliest (lowest id) maximum.
      int best = -1;
      double best_power = 0.0;
      std::vector<SelectionScore> scores;
      for (int i = 0; i < k; ++i) {
        double mx = maps[i].data[0], mn = maps[i].data[0];
        for (double v : maps[i].data) {
          if (v > mx) mx = v;
          if (v < mn) mn = v;
        }
        const double w = c * weights[i];
        const double power = w * (mx - mn);
        const SelectionScore s = discriminative_power(maps[i], w);
        if (s.peak != mx || s.floor != mn || s.power != power) ++mismatches;
        scores.push_back(s);
        if (best < 0 || power > best_power) best = i, best_power = power;
      }
      if (select_branch(scores) != best) ++mismatches;
    }
    // Scaling every weight leaves the choice unchanged.
    auto pick = [&](double c) {
      std::vector<SelectionScore> s;
      for (int i = 0; i < k; ++i) s.push_back(discriminative_power(maps[i], c * weights[i]));
      return select_branch(s);
    };
    for (double c : {0.5, 2.0, 10.0}) {
      if (pick(c) != pick(1.0)) ++mismatches;
    }
  }
  report(2, "selection-conformance", mismatches == 0,
         fmt("1000 cases (%d with forced ties), scales {0.5,2,10}, %d mismatches", ties, mismatches));
}

void geometry() {
  std::string detail;
  bool ok = true;
  const TrackerConfig cfg;
  for (const auto& spec : register_builtin_branches({{"intensity"}, {"gradient_hist"}, {"color_hist"}})) {
    const Patch z = test::as_patch(test::noise_image(cfg.exemplar_side, cfg.exemplar_side, 3, 1));
    const Patch x = test::as_patch(test::noise_image(cfg.search_side, cfg.search_side, 3, 2));
    const FeatureMap fz = embed(spec, z);
    const FeatureMap fx = embed(spec, x);
    const ResponseMap r = xcorr(fz, fx);
    const bool good = fz.height() == 6 && fz.width() == 6 && fx.height() == 22 && fx.width() == 22 &&
                      r.height == 17 && r.width == 17;
    ok = ok && good;
    detail += fmt("%s %dx%d/%dx%d/%dx%d; ", spec.name().c_str(), fz.height(), fz.width(), fx.height(), fx.width(),
                  r.height, r.width);
  }
  report(3, "geometry", ok, detail);
}

class ReplayTracker : public TrackerBase {
 public:
  explicit ReplayTracker(std::vector<BoundingBox> boxes) : boxes_(std::move(boxes)) {}
  FrameResult init(const ImageBuffer&, const BoundingBox&) override { return {0, boxes_.at(0)}; }
  FrameResult track(const ImageBuffer&) override {
    ++i_;
    return {static_cast<std::uint32_t>(i_), boxes_.at(i_)};
  }

 private:
  std::vector<BoundingBox> boxes_;
  std::size_t i_ = 0;
};

void metric_oracle() {
  std::vector<Sequence> data;
  for (int s = 0; s < 2; ++s) {
    Sequence seq;
    seq.name = "hand_" + std::to_string(s);
    for (int f = 0; f < 10; ++f) {
      seq.frames.emplace_back(8, 8, 1, 0.0f);
      seq.ground_truth.push_back({10.0 + 3 * f + s, 20.0 - f, 12.0 + f, 9.0});
    }
    data.push_back(seq);
  }
  const auto echo = run_ope(data, [](const Sequence& s, std::uint32_t) -> std::unique_ptr<TrackerBase> {
    return std::make_unique<ReplayTracker>(s.ground_truth);
  });
  const auto disjoint = run_ope(data, [](const Sequence& s, std::uint32_t) -> std::unique_ptr<TrackerBase> {
    std::vector<BoundingBox> far;
    for (const auto& b : s.ground_truth) far.push_back({b.x + 1000.0, b.y, b.w, b.h});
    return std::make_unique<ReplayTracker>(far);
  });
  // Two frames off by 10 and 30 px: half the frames within 20 px.
  SequenceResult two;
  two.name = "two";
  two.boxes = {{10, 0, 4, 4}, {30, 0, 4, 4}};
  score_trajectory(two, {{0, 0, 4, 4}, {0, 0, 4, 4}});

  const bool ok = echo.overall.precision_at_20 == 1.0 && echo.overall.auc == 20.0 / 21.0 &&
                  disjoint.overall.auc == 0.0 && disjoint.overall.precision_at_20 == 0.0 &&
                  two.precision.at20 == 0.5;
  report(4, "metric-oracle", ok,
         fmt("echo p@20 %.6f auc %.6f (20/21 = %.6f); disjoint auc %.6f; errors {10,30} p@20 %.3f",
             echo.overall.precision_at_20, echo.overall.auc, 20.0 / 21.0, disjoint.overall.auc, two.precision.at20));
}

std::vector<Sequence> suite_sequences(const std::vector<SuiteEntry>& suite) {
  std::vector<Sequence> out;
  for (const auto& e : suite) out.push_back(e.sequence);
  return out;
}

double suite_iou(const std::vector<Sequence>& data, const TrackerConfig& cfg) {
  return run_ope(data, cfg, nullptr, 0).overall.mean_iou;
}

void selection_efficacy(const std::vector<SuiteEntry>& suite) {
  const auto t0 = Clock::now();
  const Certification cert = certify_suite(suite);
  if (!cert.passed) {
    report(5, "selection-efficacy", false, "suite certification failed: " + cert.detail);
    return;
  }
  const auto data = suite_sequences(suite);
  double best_single = 0.0;
  std::string best_name;
  std::string singles;
  for (const char* kind : {"intensity", "gradient_hist", "color_hist"}) {
    TrackerConfig cfg;
    cfg.branches = {{kind}};
    const double v = suite_iou(data, cfg);
    singles += fmt("%s %.3f, ", kind, v);
    if (v > best_single) best_single = v, best_name = kind;
  }
  TrackerConfig multi;
  multi.selection_interval = 7;
  const double m = suite_iou(data, multi);
  const double secs = seconds_since(t0);
  report(5, "selection-efficacy", m >= best_single + 0.05 && secs < 120.0,
         fmt("certified (phases won %d/%d/%d); %smulti T=7 %.3f vs best single %.3f + 0.05; %.1f s",
             cert.phases_won[0], cert.phases_won[1], cert.phases_won[2], singles.c_str(), m, best_single, secs));
}

void interval_study(const std::vector<SuiteEntry>& suite) {
  const auto t0 = Clock::now();
  const auto rows = run_interval_sweep(suite_sequences(suite), TrackerConfig{}, {1, 3, 5, 7, 10, 13}, nullptr, 0);
  const double secs = seconds_since(t0);
  double a1 = 0, a7 = 0, a13 = 0;
  std::string detail = "AUC";
  for (const auto& r : rows) {
    detail += fmt(" T=%d %.4f", r.interval, r.report.overall.auc);
    if (r.interval == 1) a1 = r.report.overall.auc;
    if (r.interval == 7) a7 = r.report.overall.auc;
    if (r.interval == 13) a13 = r.report.overall.auc;
  }
  report(6, "interval-study", a7 >= a1 && a7 >= a13 && secs < 600.0,
         detail + fmt("; need T=7 >= T=1 (%s) and T=7 >= T=13 (%s); %.1f s", a7 >= a1 ? "yes" : "no",
                      a7 >= a13 ? "yes" : "no", secs));
}

void tracking_sanity() {
  constexpr int w = 320, h = 240;
  const BoundingBox still{140, 100, 40, 40};
  MultiBranchTracker a(TrackerConfig{});
  a.init(test::scene_frame(w, h, still, 40, 0.02, 10), still);
  double drift = 0.0;
  for (int f = 1; f < 50; ++f) {
    drift = std::max(drift, center_error(a.track(test::scene_frame(w, h, still, 40, 0.02, 10 + f)).box, still));
  }

  BoundingBox box{60, 60, 40, 40};
  MultiBranchTracker b(TrackerConfig{});
  b.init(test::scene_frame(w, h, box, 40, 0.02, 20), box);
  double iou_sum = 1.0;
  for (int f = 1; f < 100; ++f) {
    const double px = 60 + 2.0 * f;
    box.x = px <= 250 ? px : 500 - px;
    box.y = 60 + 0.8 * f;
    iou_sum += iou(b.track(test::scene_frame(w, h, box, 40, 0.02, 20 + f)).box, box);
  }
  const double mean_iou = iou_sum / 100.0;
  report(7, "tracking-sanity", drift <= 1.0 && mean_iou >= 0.6,
         fmt("static drift %.3f px (<= 1), translation mean IoU %.3f (>= 0.6)", drift, mean_iou));
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MBST_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void determinism() {
  const fs::path dir = fs::temp_directory_path() / "mbst_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string data = (dir / "data").string();
  bool ok = run_cli("synth-gen " + data + " --preset alternating --seed 7") == 0;
  std::vector<std::string> reports;
  for (const char* jobs : {"1", "4", "1"}) {
    const fs::path out = dir / (std::string("r") + std::to_string(reports.size()) + ".json");
    ok = ok && run_cli("eval " + data + " --jobs " + jobs + " --interval 7 --trace-selection -o " + out.string()) == 0;
    reports.push_back(slurp(out));
  }
  const bool same = ok && !reports[0].empty() && reports[0] == reports[1] && reports[0] == reports[2];
  report(8, "determinism", same,
         fmt("eval JSON at jobs 1, 4, 1: %s (%zu bytes)", same ? "byte-identical" : "differs", reports[0].size()));
  fs::remove_all(dir);
}

void throughput() {
  constexpr int w = 320, h = 240;
  std::vector<ImageBuffer> frames;
  BoundingBox box{100, 80, 40, 40};
  for (int f = 0; f < 61; ++f) frames.push_back(test::scene_frame(w, h, {100.0 + f, 80, 40, 40}, 40, 0.02, 500 + f));

  auto per_frame = [&](const TrackerConfig& cfg) {
    MultiBranchTracker t(cfg);
    t.init(frames[0], box);
    const auto t0 = Clock::now();
    for (int f = 1; f < 61; ++f) t.track(frames[f]);
    return seconds_since(t0) / 60.0;
  };
  TrackerConfig single;
  single.branches = {{"intensity"}};
  TrackerConfig all;
  all.selection_interval = 1;  // every frame is a selection frame
  per_frame(single);           // warm-up
  const double s = per_frame(single);
  const double a = per_frame(all);
  report(9, "throughput-shape", 1.0 / s >= 100.0 && a > s,
         fmt("intensity %.1f fps (>= 100); all-branch selection frame %.2f ms vs single-branch %.2f ms", 1.0 / s,
             a * 1e3, s * 1e3));
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> quick = {correlation_oracle, selection_conformance, geometry, metric_oracle};
  for (const auto& fn : quick) fn();
  const auto suite = alternating_suite(7);
  selection_efficacy(suite);
  interval_study(suite);
  tracking_sanity();
  determinism();
  throughput();
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
