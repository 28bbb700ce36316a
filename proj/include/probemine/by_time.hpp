#pragma once

// Clustering by time: one 24-bucket head-count profile per (building, day),
// k-means over the normalized profiles, and calendar interpretation.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "probemine/calendar.hpp"
#include "probemine/cluster.hpp"
#include "probemine/core.hpp"
#include "probemine/registry.hpp"

namespace probemine::by_time {

inline constexpr std::size_t kHours = 24;
inline constexpr std::size_t kDefaultK = 4;

using HourCounts = std::array<std::int64_t, kHours>;
using HourCurve = std::array<double, kHours>;

/// Bit h set when [entry.start, entry.end) overlaps analysis-day hour
/// bucket h (bucket 0 is 03:00-04:00). Zero-length entries mark the bucket
/// holding their instant.
std::uint32_t hour_mask(const TrajectoryEntry& e, const DayWindow& day);

struct DayFeature {
  BuildingId building;
  DayWindow day;
  /// Unique devices present during each hour bucket.
  HourCounts counts{};
  HourCurve normalized{};
};

/// Per-(building, day) unique-device counts for every registry building at
/// once. Each device counts at most once per hour per building.
class HourlyCounter {
 public:
  HourlyCounter(const DeploymentRegistry& registry, const TimeFrame& frame, std::vector<std::int64_t> days);

  /// Throws RegistryError for entries at unknown buildings.
  void add(const DayTrajectory& traj);
  /// Features of one building over all configured days, in day order.
  std::vector<DayFeature> features(BuildingId building) const;
  const std::vector<std::int64_t>& days() const { return days_; }

 private:
  const DeploymentRegistry& registry_;
  std::vector<std::int64_t> days_;
  std::vector<DayWindow> windows_;
  std::vector<HourCounts> counts_;  // [building][day]
};

/// Convenience wrapper over HourlyCounter for a single building.
std::vector<DayFeature> hourly_count_features(std::span<const DayTrajectory> trajs, BuildingId building,
                                              const DeploymentRegistry& registry, const TimeFrame& frame,
                                              std::span<const std::int64_t> days);

struct CalendarAssignment {
  BuildingId building;
  std::size_t k = 0;
  std::vector<std::int64_t> days;
  /// Canonical cluster per day: 0 is the largest cluster.
  std::vector<std::size_t> clusters;
  double sse = 0;
};

/// k-means over the normalized profiles, relabelled by descending cluster
/// size (ties: earliest first day). Throws Infeasible with fewer than k
/// distinct days.
CalendarAssignment cluster_days(std::span<const DayFeature> features, std::size_t k, std::uint64_t seed,
                                std::size_t restarts = cluster::kDefaultRestarts, std::size_t threads = 1);

cluster::PointMatrix profile_matrix(std::span<const DayFeature> features);

struct ConfusionTable {
  std::size_t k = 0;
  /// Percent of days with row label placed in column cluster.
  std::array<std::vector<double>, kDayLabelCount> percent;
  std::array<std::size_t, kDayLabelCount> days{};
  /// Label never observed; its row is all zeros.
  std::array<bool, kDayLabelCount> empty{};
};

/// Throws InvalidInput when an assigned day has no calendar label.
ConfusionTable day_type_confusion(const CalendarAssignment& assignment, const Calendar& calendar);

struct DayCurve {
  std::int64_t day = 0;
  HourCurve curve{};
};

/// Each day's normalized profile grouped by its cluster.
std::vector<std::vector<DayCurve>> cluster_daily_curves(std::span<const DayFeature> features,
                                                        const CalendarAssignment& assignment);

}  // namespace probemine::by_time
