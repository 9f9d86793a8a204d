#pragma once

// The alternating benchmark: synthetic sequences whose appearance regime
// changes every 30 frames, so that no single built-in branch is best
// throughout. Certification measures each single-branch tracker phase by
// phase and checks that the intended asymmetry actually holds.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mbst/error.hpp"
#include "mbst/metrics.hpp"
#include "mbst/synth.hpp"
#include "mbst/tracker.hpp"

namespace mbst {

inline constexpr int kSuitePhaseFrames = 30;
inline constexpr int kSuiteTransitionFrames = 8;

struct SuiteEntry {
  SynthSpec spec;
  Sequence sequence;
};

// Every sequence opens with a neutral-background phase so the exemplar shows
// the target against plain context. Regimes fade into each other over a few
// frames rather than switching in a single frame.
inline std::vector<SuiteEntry> alternating_suite(std::uint64_t seed = 7) {
  using R = Regime;
  struct Plan {
    std::vector<R> phases;
    double vx, vy;
  };
  const std::vector<Plan> plans = {
      {{R::kOccludedBand, R::kColorDistinct, R::kGradientDistinct, R::kLowContrast, R::kContrastInvert,
        R::kColorDistinct},
       2.0, 1.0},
      {{R::kContrastInvert, R::kGradientDistinct, R::kLowContrast, R::kColorDistinct, R::kOccludedBand,
        R::kGradientDistinct},
       -1.5, 1.5},
      {{R::kOccludedBand, R::kLowContrast, R::kColorDistinct, R::kGradientDistinct, R::kOccludedBand,
        R::kLowContrast},
       1.0, -2.0},
      {{R::kContrastInvert, R::kColorDistinct, R::kLowContrast, R::kGradientDistinct, R::kColorDistinct,
        R::kOccludedBand},
       -2.0, -1.0},
      {{R::kOccludedBand, R::kGradientDistinct, R::kColorDistinct, R::kOccludedBand, R::kLowContrast,
        R::kGradientDistinct},
       1.5, 1.5},
      {{R::kContrastInvert, R::kLowContrast, R::kGradientDistinct, R::kColorDistinct, R::kContrastInvert,
        R::kLowContrast},
       -1.0, 2.0},
  };
  std::vector<SuiteEntry> suite;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    SynthSpec s;
    s.name = "alt_" + std::to_string(i + 1);
    s.seed = synth_detail::mix(seed + i);
    for (R r : plans[i].phases) s.phases.push_back({r, kSuitePhaseFrames});
    s.frame_count = kSuitePhaseFrames * static_cast<int>(plans[i].phases.size());
    s.motion = {{0, plans[i].vx, plans[i].vy}};
    s.transition = kSuiteTransitionFrames;
    suite.push_back({s, generate(s)});
  }
  return suite;
}

struct PhaseScore {
  std::string sequence;
  int phase = 0;
  Regime regime = Regime::kOccludedBand;
  std::vector<double> branch_iou;  // mean IoU per built-in branch, in `branches` order
  int best = 0;
};

struct Certification {
  std::vector<std::string> branches;
  std::vector<PhaseScore> phases;
  std::vector<int> phases_won;                    // per branch
  std::map<Regime, std::vector<double>> regime_iou;  // mean per branch over all phases of a regime
  bool every_branch_wins = false;
  bool regimes_favor_intended = false;
  bool passed = false;
  std::string detail;
};

// Branch each regime is meant to favor; regimes without an entry only need
// not to break the other checks.
inline std::optional<std::string> intended_branch(Regime r) {
  switch (r) {
    case Regime::kColorDistinct: return "color_hist";
    case Regime::kGradientDistinct: return "gradient_hist";
    case Regime::kLowContrast: return "intensity";
    default: return std::nullopt;
  }
}

// Runs every single built-in branch on every phase. The exemplar always comes
// from frame 0 as in normal tracking, but the tracker is moved to the true box
// at each phase start so one phase's failure does not leak into the next.
inline Certification certify_suite(const std::vector<SuiteEntry>& suite, const TrackerConfig& base = {}) {
  if (suite.empty()) throw Error(ErrorCode::kEmptyInput, "suite has no sequences");
  Certification cert;
  cert.branches = {"intensity", "gradient_hist", "color_hist"};
  const int nb = static_cast<int>(cert.branches.size());
  cert.phases_won.assign(nb, 0);
  std::map<Regime, std::vector<double>> sums;
  std::map<Regime, int> counts;

  for (const auto& entry : suite) {
    const Sequence& seq = entry.sequence;
    const SynthSpec& spec = entry.spec;
    std::vector<std::vector<double>> per_branch(nb);  // [branch][phase]
    for (int b = 0; b < nb; ++b) {
      TrackerConfig cfg = base;
      cfg.branches = {{cert.branches[b]}};
      MultiBranchTracker tracker(cfg);
      tracker.init(seq.frame(0), seq.ground_truth[0]);
      int start = 0;
      for (const auto& phase : spec.phases) {
        if (start > 0) tracker.reposition(seq.ground_truth[start - 1]);
        double sum = 0.0;
        for (int f = start; f < start + phase.frames; ++f) {
          const BoundingBox box = f == 0 ? seq.ground_truth[0] : tracker.track(seq.frame(f)).box;
          sum += iou(box, seq.ground_truth[f]);
        }
        per_branch[b].push_back(sum / phase.frames);
        start += phase.frames;
      }
    }
    for (std::size_t p = 0; p < spec.phases.size(); ++p) {
      PhaseScore ps;
      ps.sequence = seq.name;
      ps.phase = static_cast<int>(p);
      ps.regime = spec.phases[p].regime;
      for (int b = 0; b < nb; ++b) ps.branch_iou.push_back(per_branch[b][p]);
      ps.best = static_cast<int>(std::max_element(ps.branch_iou.begin(), ps.branch_iou.end()) - ps.branch_iou.begin());
      ++cert.phases_won[ps.best];
      auto& s = sums[ps.regime];
      s.resize(nb, 0.0);
      for (int b = 0; b < nb; ++b) s[b] += ps.branch_iou[b];
      ++counts[ps.regime];
      cert.phases.push_back(std::move(ps));
    }
  }

  cert.every_branch_wins = std::all_of(cert.phases_won.begin(), cert.phases_won.end(), [](int n) { return n > 0; });
  cert.regimes_favor_intended = true;
  for (auto& [regime, s] : sums) {
    for (double& v : s) v /= counts[regime];
    cert.regime_iou[regime] = s;
    const auto want = intended_branch(regime);
    if (!want) continue;
    const int best = static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin());
    if (cert.branches[best] != *want) {
      cert.regimes_favor_intended = false;
      cert.detail += std::string(to_string(regime)) + " favors " + cert.branches[best] + " instead of " + *want + "; ";
    }
  }
  for (int b = 0; b < nb; ++b) {
    if (cert.phases_won[b] == 0) cert.detail += cert.branches[b] + " wins no phase; ";
  }
  cert.passed = cert.every_branch_wins && cert.regimes_favor_intended;
  return cert;
}

}  // namespace mbst
