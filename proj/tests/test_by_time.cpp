#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "probemine/by_time.hpp"
#include "probemine/error.hpp"
#include "support.hpp"

namespace probemine::by_time {
namespace {

using test::at;
using test::make_traj;
using test::monday;

const DeploymentRegistry& registry() {
  static const auto r = DeploymentRegistry::standard();
  return r;
}

std::vector<std::int64_t> week() {
  std::vector<std::int64_t> d(7);
  std::iota(d.begin(), d.end(), monday());
  return d;
}

TEST(HourMask, MatchesOverlapOracle) {
  std::mt19937_64 rng(31);
  const auto day = test::frame().window(monday());
  for (int i = 0; i < 20000; ++i) {
    const Timestamp s = day.start + static_cast<Timestamp>(rng() % kDaySeconds);
    const Timestamp e = std::min(day.end, s + static_cast<Timestamp>(rng() % 3 == 0 ? 0 : rng() % 30000));
    const TrajectoryEntry entry{NodeId("A"), {}, s, e, e - s, 0};
    ASSERT_EQ(hour_mask(entry, day), oracle::hour_overlap(day.start, s, e)) << s - day.start << " " << e - s;
  }
}

TEST(HourlyCounts, OverlappedHoursCountOnce) {
  const auto d = monday();
  std::vector<DayTrajectory> trajs = {
      make_traj("x", d, {{"B", at(d, 10, 15), at(d, 12, 30)}}),
      make_traj("y", d, {{"B", at(d, 14, 5), at(d, 14, 10)}, {"a", at(d, 14, 20), at(d, 14, 25)},
                         {"B", at(d, 14, 40), at(d, 14, 50)}}),
  };
  const auto f = hourly_count_features(trajs, BuildingId('B'), registry(), test::frame(), week());
  ASSERT_EQ(f.size(), 7u);
  HourCounts expected{};
  expected[10 - 3] = expected[11 - 3] = expected[12 - 3] = 1;
  expected[14 - 3] = 1;
  EXPECT_EQ(f[0].counts, expected);
  EXPECT_EQ(f[1].counts, HourCounts{});
  EXPECT_EQ(f[0].normalized[7], 1.0);
  EXPECT_EQ(f[0].normalized[0], 0.0);
  EXPECT_THROW(hourly_count_features(trajs, BuildingId('Z'), registry(), test::frame(), week()), RegistryError);
}

TEST(HourlyCounts, EmptyInputIsZero) {
  const auto f = hourly_count_features({}, BuildingId('A'), registry(), test::frame(), week());
  for (const auto& x : f) {
    EXPECT_EQ(x.counts, HourCounts{});
    EXPECT_EQ(x.normalized, HourCurve{});
  }
}

TEST(HourlyCounts, InvariantToTrajectoryOrder) {
  std::mt19937_64 rng(8);
  std::vector<DayTrajectory> trajs;
  for (int i = 0; i < 300; ++i) {
    auto t = prep::merge_to_building_level(test::random_sensor_traj(rng));
    if (t.day.index < monday() + 7) trajs.push_back(t);
  }
  const auto base = hourly_count_features(trajs, BuildingId('A'), registry(), test::frame(), week());
  std::shuffle(trajs.begin(), trajs.end(), rng);
  const auto again = hourly_count_features(trajs, BuildingId('A'), registry(), test::frame(), week());
  for (std::size_t i = 0; i < base.size(); ++i) EXPECT_EQ(base[i].counts, again[i].counts);
}

DayFeature feature(std::int64_t day, const HourCurve& c) {
  DayFeature f;
  f.building = BuildingId('A');
  f.day = test::frame().window(day);
  f.normalized = c;
  return f;
}

TEST(ClusterDays, OneHotProfilesSeparate) {
  std::vector<DayFeature> fs;
  std::vector<std::size_t> plan;
  for (int copy = 0; copy < 4; ++copy) {
    for (std::size_t p = 0; p < 4; ++p) {
      HourCurve c{};
      c[p * 6] = 1;
      fs.push_back(feature(monday() + static_cast<std::int64_t>(fs.size()), c));
      plan.push_back(p);
    }
  }
  const auto a = cluster_days(fs, 4, 1);
  EXPECT_DOUBLE_EQ(cluster::adjusted_rand_index(a.clusters, plan), 1.0);
  EXPECT_EQ(a.days.front(), monday());
}

TEST(ClusterDays, IdenticalDaysOneCluster) {
  HourCurve c{};
  c[5] = 1;
  std::vector<DayFeature> fs;
  for (int i = 0; i < 5; ++i) fs.push_back(feature(monday() + i, c));
  const auto a = cluster_days(fs, 1, 1);
  EXPECT_EQ(a.clusters, std::vector<std::size_t>(5, 0));
  EXPECT_THROW(cluster_days(fs, 2, 1), Infeasible);
  EXPECT_THROW(cluster_days(std::span(fs).first(3), 4, 1), Infeasible);
}

TEST(ClusterDays, CanonicalLabelsBySize) {
  HourCurve big{};
  big[2] = 1;
  HourCurve small{};
  small[20] = 1;
  std::vector<DayFeature> fs = {feature(monday(), small), feature(monday() + 1, big), feature(monday() + 2, big)};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto a = cluster_days(fs, 2, seed);
    EXPECT_EQ(a.clusters, (std::vector<std::size_t>{1, 0, 0}));
  }
}

CalendarAssignment assignment(std::vector<std::int64_t> days, std::vector<std::size_t> clusters, std::size_t k) {
  CalendarAssignment a;
  a.building = BuildingId('A');
  a.k = k;
  a.days = std::move(days);
  a.clusters = std::move(clusters);
  return a;
}

TEST(Confusion, RowsArePercentages) {
  const auto cal = Calendar::build(monday(), 14, {});
  // Two Fridays in cluster 2; Mon-Thu of week one split 3/1.
  const auto a = assignment({monday() + 4, monday() + 11, monday(), monday() + 1, monday() + 2, monday() + 3},
                            {1, 1, 0, 0, 0, 1}, 4);
  const auto t = day_type_confusion(a, cal);
  const auto fri = static_cast<std::size_t>(DayLabel::Fri);
  const auto mon = static_cast<std::size_t>(DayLabel::MonThu);
  EXPECT_EQ(t.percent[fri], (std::vector<double>{0, 100, 0, 0}));
  EXPECT_EQ(t.percent[mon], (std::vector<double>{75, 25, 0, 0}));
  EXPECT_TRUE(t.empty[static_cast<std::size_t>(DayLabel::PH)]);
  EXPECT_EQ(t.percent[static_cast<std::size_t>(DayLabel::PH)], (std::vector<double>(4, 0.0)));

  const auto unlabelled = assignment({monday() + 20}, {0}, 1);
  EXPECT_THROW(day_type_confusion(unlabelled, cal), InvalidInput);
}

TEST(Confusion, RowSumsProperty) {
  std::mt19937_64 rng(3);
  const auto cal = Calendar::build(monday(), 28, {monday() + 4, monday() + 16});
  for (int i = 0; i < 200; ++i) {
    const std::size_t k = 1 + rng() % 6;
    std::vector<std::int64_t> days;
    std::vector<std::size_t> cl;
    for (std::int64_t d = 0; d < 28; ++d) {
      if (rng() % 3 == 0) continue;
      days.push_back(monday() + d);
      cl.push_back(rng() % k);
    }
    const auto t = day_type_confusion(assignment(days, cl, k), cal);
    for (std::size_t r = 0; r < kDayLabelCount; ++r) {
      const double sum = std::accumulate(t.percent[r].begin(), t.percent[r].end(), 0.0);
      if (t.empty[r]) ASSERT_EQ(sum, 0.0);
      else ASSERT_NEAR(sum, 100.0, 0.1);
    }
  }
}

TEST(DailyCurves, GroupedByCluster) {
  HourCurve a{};
  a[1] = 1;
  HourCurve b{};
  b[9] = 1;
  std::vector<DayFeature> fs = {feature(monday(), a), feature(monday() + 1, b), feature(monday() + 2, a)};
  const auto asg = assignment({monday(), monday() + 1, monday() + 2}, {0, 1, 0}, 2);
  const auto curves = cluster_daily_curves(fs, asg);
  ASSERT_EQ(curves.size(), 2u);
  ASSERT_EQ(curves[1].size(), 1u);
  EXPECT_EQ(curves[1][0].day, monday() + 1);
  EXPECT_EQ(curves[1][0].curve, b);
  EXPECT_EQ(curves[0].size(), 2u);
}

}  // namespace
}  // namespace probemine::by_time
