#include <gtest/gtest.h>

#include <random>

#include "mbst/selection.hpp"

using namespace mbst;

namespace {

ResponseMap map_with(double lo, double hi) {
  ResponseMap m(3, 3, (lo + hi) / 2);
  m.at(0, 0) = lo;
  m.at(2, 1) = hi;
  return m;
}

SelectionScore scored(int id, double power) {
  SelectionScore s;
  s.branch_id = id;
  s.power = power;
  return s;
}

}  // namespace

TEST(Power, DirectFormula) {
  const auto s = discriminative_power(map_with(0.1, 0.9), 1.0);
  EXPECT_DOUBLE_EQ(s.peak, 0.9);
  EXPECT_DOUBLE_EQ(s.floor, 0.1);
  EXPECT_NEAR(s.power, 0.8, 1e-15);
  EXPECT_NEAR(discriminative_power(map_with(0.05, 0.3), 10.5).power, 2.625, 1e-12);
  EXPECT_EQ(discriminative_power(ResponseMap(4, 4, 0.6), 3.0).power, 0.0);
}

TEST(Power, InvariantToConstantShift) {
  ResponseMap m = map_with(-0.2, 0.7);
  const double before = discriminative_power(m, 2.0).power;
  for (double& v : m.data) v += 0.5;  // exactly representable shift
  EXPECT_NEAR(discriminative_power(m, 2.0).power, before, 1e-12);
}

TEST(Power, Errors) {
  EXPECT_THROW(discriminative_power(ResponseMap{}, 1.0), Error);
  EXPECT_THROW(discriminative_power(map_with(0, 1), -1.0), Error);
}

TEST(Select, Argmax) {
  const std::vector<SelectionScore> s{scored(0, 0.8), scored(1, 2.625), scored(2, 0.5)};
  EXPECT_EQ(select_branch(s), 1);
}

TEST(Select, TiesGoToLowestId) {
  const std::vector<SelectionScore> s{scored(2, 1.0), scored(0, 1.0), scored(1, 1.0)};
  EXPECT_EQ(select_branch(s), 0);
  const std::vector<SelectionScore> t{scored(0, 0.5), scored(3, 2.0), scored(1, 2.0)};
  EXPECT_EQ(select_branch(t), 1);
}

TEST(Select, SingleAndEmpty) {
  const std::vector<SelectionScore> one{scored(4, 0.0)};
  EXPECT_EQ(select_branch(one), 4);
  EXPECT_THROW(select_branch(std::vector<SelectionScore>{}), Error);
}

TEST(Select, BruteForceAndWeightScaling) {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> nb(1, 6);
  std::uniform_real_distribution<double> val(-1, 1), w(0, 12);
  for (int n = 0; n < 300; ++n) {
    const int k = nb(rng);
    std::vector<ResponseMap> maps;
    std::vector<double> weights;
    for (int i = 0; i < k; ++i) {
      ResponseMap m(17, 17);
      for (double& v : m.data) v = val(rng);
      m.branch_id = i;
      maps.push_back(m);
      weights.push_back(w(rng));
    }
    auto pick = [&](double c) {
      std::vector<SelectionScore> s;
      for (int i = 0; i < k; ++i) s.push_back(discriminative_power(maps[i], c * weights[i]));
      return select_branch(s);
    };
    int best = 0;
    double best_power = -1;
    for (int i = 0; i < k; ++i) {
      double mx = maps[i].data[0], mn = maps[i].data[0];
      for (double v : maps[i].data) mx = std::max(mx, v), mn = std::min(mn, v);
      const double p = weights[i] * (mx - mn);
      if (p > best_power) best_power = p, best = i;
    }
    ASSERT_EQ(pick(1.0), best);
    for (double c : {0.5, 2.0, 10.0}) ASSERT_EQ(pick(c), best);
  }
}

TEST(Schedule, DueOnFirstThenEveryT) {
  SelectionState s = make_selection_state(7);
  std::vector<int> due_frames;
  for (int frame = 1; frame <= 20; ++frame) {
    const bool due = selection_due(s);
    if (due) due_frames.push_back(frame);
    s = mbst::advance(s, due ? std::optional<int>(frame % 3) : std::nullopt);
  }
  EXPECT_EQ(due_frames, (std::vector<int>{1, 8, 15}));
}

TEST(Schedule, IntervalOneAlwaysDue) {
  SelectionState s = make_selection_state(1);
  for (int i = 0; i < 5; ++i) {
    ASSERT_TRUE(selection_due(s));
    s = mbst::advance(s, 0);
  }
}

TEST(Schedule, AdvanceSemantics) {
  SelectionState s = make_selection_state(7);
  s = mbst::advance(s, 2);
  EXPECT_EQ(s.active_branch, 2);
  EXPECT_EQ(s.frames_since_selection, 1);
  s.frames_since_selection = 3;
  EXPECT_FALSE(selection_due(s));
  s = mbst::advance(s, std::nullopt);
  EXPECT_EQ(s.active_branch, 2);
  EXPECT_EQ(s.frames_since_selection, 4);
  s.frames_since_selection = 6;
  s = mbst::advance(s, std::nullopt);
  EXPECT_EQ(s.frames_since_selection, 0);
}

TEST(Schedule, OffScheduleChoiceRejected) {
  SelectionState s = make_selection_state(3);
  s.frames_since_selection = 1;
  try {
    mbst::advance(s, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOffSchedule);
  }
  EXPECT_THROW(mbst::advance(make_selection_state(3), std::nullopt), Error);
  EXPECT_THROW(make_selection_state(0), Error);
}
