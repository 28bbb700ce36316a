#pragma once

// Stay/take computation, sensor-to-building merging and the span/anomaly
// filters.

#include <vector>

#include "probemine/core.hpp"

namespace probemine::prep {

/// Consecutive same-building entries closer than this are merged (6 h).
inline constexpr Duration kMergeThreshold = 21600;
/// Trajectories spanning less than this are dropped (5 min).
inline constexpr Duration kMinSpan = 300;
/// Trajectories with any single stay longer than this are dropped (16 h).
inline constexpr Duration kMaxStay = 57600;

/// stay = end - start; take = next start - end, 0 on the last entry.
/// Overlapping detections at different nodes truncate the earlier entry's
/// end to the later entry's start, so take never goes negative.
DayTrajectory compute_stay_take(DayTrajectory traj);

/// Renames nodes to their buildings, then folds every consecutive
/// same-building pair with take < threshold into one entry, left to right,
/// until no such pair remains.
DayTrajectory merge_to_building_level(DayTrajectory traj, Duration threshold = kMergeThreshold);

struct FilterOptions {
  Duration min_span = kMinSpan;
  Duration max_stay = kMaxStay;
};

struct FilterReport {
  std::size_t input = 0;
  std::size_t kept = 0;
  std::size_t too_short = 0;
  std::size_t anomalous = 0;
};

enum class FilterVerdict { Keep, TooShort, Anomalous };

FilterVerdict classify(const DayTrajectory& traj, const FilterOptions& opts = {});

/// Order-preserving subset: drops spans < min_span and trajectories holding
/// any entry with stay > max_stay.
std::vector<DayTrajectory> filter_trajectories(std::vector<DayTrajectory> trajs, FilterReport& report,
                                               const FilterOptions& opts = {});

}  // namespace probemine::prep
