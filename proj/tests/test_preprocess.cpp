#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "probemine/preprocess.hpp"
#include "support.hpp"

namespace probemine::prep {
namespace {

using test::at;
using test::make_traj;
using test::monday;

TEST(StayTake, Arithmetic) {
  const auto d = monday();
  auto t = make_traj("x", d, {{"A1", at(d, 10), at(d, 10, 30)}, {"B1", at(d, 10, 40), at(d, 11)}});
  EXPECT_EQ(t.entries[0].stay, 1800);
  EXPECT_EQ(t.entries[1].stay, 1200);
  EXPECT_EQ(t.entries[0].take, 600);
  EXPECT_EQ(t.entries[1].take, 0);

  auto single = make_traj("x", d, {{"A1", at(d, 9), at(d, 9, 10)}});
  EXPECT_EQ(single.entries[0].stay, 600);
  EXPECT_EQ(single.entries[0].take, 0);

  auto touching = make_traj("x", d, {{"A1", at(d, 10), at(d, 10, 30)}, {"B1", at(d, 10, 30), at(d, 10, 45)}});
  EXPECT_EQ(touching.entries[0].take, 0);
}

TEST(StayTake, OverlapTruncatesEarlierEntry) {
  const auto d = monday();
  auto t = make_traj("x", d, {{"A1", at(d, 10), at(d, 11)}, {"B1", at(d, 10, 30), at(d, 12)}});
  EXPECT_EQ(t.entries[0].end, at(d, 10, 30));
  EXPECT_EQ(t.entries[0].stay, 1800);
  EXPECT_EQ(t.entries[0].take, 0);
}

TEST(Merge, SameBuildingWithinThreshold) {
  const auto d = monday();
  auto t = merge_to_building_level(
      make_traj("x", d, {{"A1", at(d, 10), at(d, 10, 30)}, {"A2", at(d, 10, 40), at(d, 11)}}));
  ASSERT_EQ(t.entries.size(), 1u);
  EXPECT_EQ(t.entries[0].node, NodeId("A"));
  EXPECT_EQ(t.entries[0].start, at(d, 10));
  EXPECT_EQ(t.entries[0].end, at(d, 11));
  EXPECT_EQ(t.entries[0].stay, 3600);
}

TEST(Merge, GapAboveThresholdStaysSplit) {
  const auto d = monday();
  auto t = merge_to_building_level(
      make_traj("x", d, {{"B1", at(d, 8), at(d, 8, 10)}, {"B1", at(d, 15), at(d, 15, 5)}}));
  ASSERT_EQ(t.entries.size(), 2u);
  EXPECT_EQ(t.entries[0].take, 24600);
}

TEST(Merge, ThresholdIsStrict) {
  const auto d = monday();
  auto exact = merge_to_building_level(
      make_traj("x", d, {{"B1", at(d, 8), at(d, 8, 10)}, {"B2", at(d, 14, 10), at(d, 14, 20)}}));
  EXPECT_EQ(exact.entries.size(), 2u);
  auto below = merge_to_building_level(
      make_traj("x", d, {{"B1", at(d, 8), at(d, 8, 10)}, {"B2", at(d, 14, 9, 59), at(d, 14, 20)}}));
  EXPECT_EQ(below.entries.size(), 1u);
}

TEST(Merge, DifferentBuildingsOnlyRenamed) {
  const auto d = monday();
  auto t = merge_to_building_level(
      make_traj("x", d, {{"A1", at(d, 9), at(d, 9, 10)}, {"B1", at(d, 9, 20), at(d, 9, 30)}}));
  ASSERT_EQ(t.entries.size(), 2u);
  EXPECT_EQ(t.entries[0].node, NodeId("A"));
  EXPECT_EQ(t.entries[0].next, NodeId("B"));
  EXPECT_EQ(t.entries[1].node, NodeId("B"));
}

TEST(Merge, ChainOfThreeCollapses) {
  const auto d = monday();
  auto t = merge_to_building_level(make_traj("x", d, {{"A1", at(d, 8), at(d, 9)},
                                                      {"A2", at(d, 12), at(d, 13)},
                                                      {"A1", at(d, 17), at(d, 18)}}));
  ASSERT_EQ(t.entries.size(), 1u);
  EXPECT_EQ(t.entries[0].stay, 10 * kHourSeconds);
}

std::vector<oracle::Span> spans_of(const DayTrajectory& t) {
  std::vector<oracle::Span> out;
  for (const auto& e : t.entries) out.push_back({building_of(e.node).value(), e.start, e.end});
  return out;
}

TEST(Merge, MatchesFixedPointOracle) {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const auto in = test::random_sensor_traj(rng);
    const auto out = merge_to_building_level(in);
    const auto ref = oracle::merge_fixed_point(spans_of(in), kMergeThreshold);
    const auto got = spans_of(out);
    ASSERT_EQ(got.size(), ref.size());
    for (std::size_t j = 0; j < ref.size(); ++j) {
      ASSERT_EQ(got[j].building, ref[j].building);
      ASSERT_EQ(got[j].start, ref[j].start);
      ASSERT_EQ(got[j].end, ref[j].end);
    }
  }
}

TEST(Merge, Properties) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 2000; ++i) {
    const auto in = test::random_sensor_traj(rng);
    const auto out = merge_to_building_level(in);
    ASSERT_EQ(merge_to_building_level(out), out);
    ASSERT_LE(out.entries.size(), in.entries.size());
    ASSERT_EQ(out.entries.back().end - out.entries.front().start,
              in.entries.back().end - in.entries.front().start);
    ASSERT_TRUE(chain_holds(out));
    for (std::size_t j = 0; j < out.entries.size(); ++j) {
      const auto& e = out.entries[j];
      ASSERT_EQ(e.stay, e.end - e.start);
      if (j + 1 < out.entries.size()) {
        ASSERT_EQ(e.take, out.entries[j + 1].start - e.end);
        ASSERT_FALSE(e.node == out.entries[j + 1].node && e.take < kMergeThreshold);
      } else {
        ASSERT_EQ(e.take, 0);
      }
    }
  }
}

TEST(Filter, SpanAndStayRules) {
  const auto d = monday();
  std::vector<DayTrajectory> in = {
      make_traj("short", d, {{"A", at(d, 9), at(d, 9, 4, 59)}}),
      make_traj("exact", d, {{"A", at(d, 9), at(d, 9, 5)}}),
      make_traj("long", d, {{"a", at(d, 4), at(d, 21)}}),
      make_traj("ok", d, {{"a", at(d, 4), at(d, 19)}, {"B", at(d, 20), at(d, 21)}}),
  };
  FilterReport rep;
  const auto kept = filter_trajectories(in, rep);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].device.str(), "exact");
  EXPECT_EQ(kept[1].device.str(), "ok");
  EXPECT_EQ(rep.input, 4u);
  EXPECT_EQ(rep.kept, 2u);
  EXPECT_EQ(rep.too_short, 1u);
  EXPECT_EQ(rep.anomalous, 1u);
  EXPECT_EQ(classify(in[2]), FilterVerdict::Anomalous);
}

TEST(Filter, OrderPreservingSubset) {
  std::mt19937_64 rng(5);
  std::vector<DayTrajectory> in;
  for (int i = 0; i < 300; ++i) in.push_back(merge_to_building_level(test::random_sensor_traj(rng)));
  FilterReport rep;
  const auto kept = filter_trajectories(in, rep);
  std::size_t j = 0;
  for (const auto& t : in) {
    if (classify(t) == FilterVerdict::Keep) ASSERT_EQ(kept.at(j++), t);
  }
  EXPECT_EQ(j, kept.size());
  EXPECT_EQ(rep.kept + rep.too_short + rep.anomalous, rep.input);
}

}  // namespace
}  // namespace probemine::prep
