#pragma once

// Clustering by person: five stay-time features per day trajectory, k-means
// over them, and the per-cluster report artifacts.

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "probemine/by_time.hpp"
#include "probemine/calendar.hpp"
#include "probemine/cluster.hpp"
#include "probemine/core.hpp"
#include "probemine/registry.hpp"

namespace probemine::by_person {

inline constexpr std::size_t kDefaultK = 8;
/// Residential daytime is [07:00, 19:00) local.
inline constexpr Duration kDaytimeBegin = 7 * kHourSeconds;
inline constexpr Duration kDaytimeEnd = 19 * kHourSeconds;

using StayVector = std::array<Duration, kLocationCategoryCount>;

struct PersonFeature {
  DeviceId device;
  DayWindow day;
  /// Seconds per LocationCategory.
  StayVector stay{};
};

/// Throws RegistryError for buildings missing from the registry.
PersonFeature person_features(const DayTrajectory& traj, const DeploymentRegistry& registry,
                              const TimeFrame& frame);

cluster::PointMatrix feature_matrix(std::span<const PersonFeature> features);

struct PersonClustering {
  std::size_t k = 0;
  /// CP index per feature (0 is CP1).
  std::vector<std::size_t> clusters;
  /// Centroids in CP order.
  cluster::PointMatrix centroids{kLocationCategoryCount};
  std::vector<std::size_t> sizes;
  double sse = 0;
  /// Mean silhouette over a deterministic sample; absent when undefined.
  std::optional<double> silhouette;
  std::size_t silhouette_sample = 0;
};

/// k-means on raw seconds. CP order is descending centroid Mall stay, then
/// Hospital, Institute, daytime and nighttime Residential.
/// `silhouette_limit` caps the points scored (0 disables the metric).
PersonClustering cluster_persons(std::span<const PersonFeature> features, std::size_t k, std::uint64_t seed,
                                 std::size_t restarts = cluster::kDefaultRestarts, std::size_t threads = 1,
                                 std::size_t silhouette_limit = 2000);

struct Edge {
  /// Registry indices, a < b.
  std::size_t a = 0;
  std::size_t b = 0;
  std::int64_t weight = 0;

  bool operator==(const Edge&) const = default;
};

/// Undirected transition counts between consecutive entries, heaviest first
/// (ties by registry order).
std::vector<Edge> cluster_transition_graph(std::span<const DayTrajectory* const> trajs,
                                           const DeploymentRegistry& registry);

/// Bin u-1 holds the fraction of trajectories visiting exactly u distinct
/// buildings; one bin per registry building. All zeros for no input.
std::vector<double> unique_location_histogram(std::span<const DayTrajectory* const> trajs,
                                              const DeploymentRegistry& registry);

struct StartEnd {
  /// Indexed by local clock hour 0..23.
  std::array<double, 24> start{};
  std::array<double, 24> end{};
};

/// Clock hour of the first start and of the last end.
StartEnd start_end_distributions(std::span<const DayTrajectory* const> trajs, const TimeFrame& frame);

struct GroupCurve {
  DayGroup group = DayGroup::MonThu;
  /// No calendar day of this group; the curves are zeros.
  bool empty = true;
  std::size_t days = 0;
  by_time::HourCurve avg{};
  by_time::HourCurve min{};
  by_time::HourCurve max{};
};

/// Hourly unique-device counts restricted to `buildings`, summarised per day
/// group across every calendar day of that group.
std::array<GroupCurve, kDayGroupCount> daytype_count_curves(std::span<const DayTrajectory* const> trajs,
                                                            const std::set<BuildingId>& buildings,
                                                            const Calendar& calendar);

}  // namespace probemine::by_person
