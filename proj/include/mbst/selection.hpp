#pragma once

// Online branch selection. Each branch's response map is scored by its
// weighted peak-to-minimum spread, the highest-scoring branch is selected and
// held until the next scheduled selection.

#include <algorithm>
#include <optional>
#include <span>
#include <vector>

#include "mbst/correlation.hpp"
#include "mbst/error.hpp"

namespace mbst {

struct SelectionScore {
  int branch_id = 0;
  double peak = 0.0;   // maximum of the response map
  double floor = 0.0;  // minimum of the response map
  double weight = 1.0;
  double power = 0.0;  // weight * (peak - floor)
};

inline SelectionScore discriminative_power(const ResponseMap& map, double weight) {
  if (map.empty()) throw Error(ErrorCode::kEmptyInput, "cannot score an empty response map");
  if (!(weight >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "branch weight must be nonnegative");
  const auto [mn, mx] = std::minmax_element(map.data.begin(), map.data.end());
  SelectionScore s;
  s.branch_id = map.branch_id;
  s.peak = *mx;
  s.floor = *mn;
  s.weight = weight;
  s.power = weight * (s.peak - s.floor);
  return s;
}

// Id with the largest power; ties go to the lowest id.
inline int select_branch(std::span<const SelectionScore> scores) {
  if (scores.empty()) throw Error(ErrorCode::kEmptyInput, "no branch scores to select from");
  const SelectionScore* best = &scores[0];
  for (const auto& s : scores.subspan(1)) {
    if (s.power > best->power || (s.power == best->power && s.branch_id < best->branch_id)) best = &s;
  }
  return best->branch_id;
}

struct SelectionState {
  int active_branch = 0;
  int frames_since_selection = 0;
  int interval = 7;
  std::vector<SelectionScore> last_scores;
};

inline SelectionState make_selection_state(int interval, int initial_branch = 0) {
  if (interval < 1) throw Error(ErrorCode::kInvalidArgument, "selection interval must be at least 1");
  SelectionState s;
  s.interval = interval;
  s.active_branch = initial_branch;
  return s;
}

// Selection runs when the counter is at zero: tracked frames 1, 1+T, 1+2T, ...
inline bool selection_due(const SelectionState& state) { return state.frames_since_selection == 0; }

inline SelectionState advance(const SelectionState& state, std::optional<int> chosen) {
  const bool due = selection_due(state);
  if (chosen.has_value() != due) {
    throw Error(ErrorCode::kOffSchedule, due ? "selection was due but no branch was chosen"
                                             : "a branch was chosen off the selection schedule");
  }
  SelectionState next = state;
  if (chosen) next.active_branch = *chosen;
  next.frames_since_selection = (state.frames_since_selection + 1) % state.interval;
  return next;
}

}  // namespace mbst
