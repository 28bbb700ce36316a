#pragma once

// Shared fixtures for the unit and acceptance tests: trajectory builders on a
// fixed calendar, and small filesystem helpers.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "probemine/core.hpp"
#include "probemine/preprocess.hpp"

namespace probemine::test {

/// Monday 2024-03-25, local.
inline std::int64_t monday() { return TimeFrame::parse_date("2024-03-25"); }

inline const TimeFrame& frame() {
  static const TimeFrame f(kDefaultTzOffset);
  return f;
}

/// Local wall-clock time on analysis day `day`; clocks before 03:00 belong
/// to the next calendar date.
inline Timestamp at(std::int64_t day, int hour, int minute = 0, int second = 0) {
  return frame().at_clock(frame().window(day), hour * kHourSeconds + minute * 60 + second);
}

struct Visit {
  std::string node;
  Timestamp start;
  Timestamp end;
};

/// Builds a chained trajectory with stay/take filled in.
inline DayTrajectory make_traj(const std::string& device, std::int64_t day, const std::vector<Visit>& visits) {
  DayTrajectory t;
  t.device = DeviceId(device);
  t.day = frame().window(day);
  for (const auto& v : visits) t.entries.push_back({NodeId(v.node), {}, v.start, v.end, 0, 0});
  return prep::compute_stay_take(std::move(t));
}

/// Random sensor-level trajectory of 1..max_len entries inside one day:
/// three buildings with two sensors each, gaps clustered around the 6 h
/// merge threshold so both merge outcomes are common.
inline DayTrajectory random_sensor_traj(std::mt19937_64& rng, std::size_t max_len = 12) {
  const std::int64_t day = monday() + static_cast<std::int64_t>(rng() % 28);
  const auto w = frame().window(day);
  const std::size_t len = 1 + rng() % max_len;
  std::vector<Visit> visits;
  Timestamp t = w.start + static_cast<Timestamp>(rng() % 3600);
  for (std::size_t i = 0; i < len; ++i) {
    const Timestamp end = t + static_cast<Timestamp>(rng() % 5400);
    if (end >= w.end) break;
    const std::string node = std::string(1, "ABC"[rng() % 3]) + std::to_string(1 + rng() % 2);
    visits.push_back({node, t, end});
    Duration gap = 0;
    switch (rng() % 4) {
      case 0: gap = static_cast<Duration>(rng() % 1800); break;
      case 1: gap = 21600 - 5 + static_cast<Duration>(rng() % 11); break;
      case 2: gap = static_cast<Duration>(rng() % 30000); break;
      default: gap = 0; break;
    }
    t = end + gap;
    if (t >= w.end) break;
  }
  return make_traj("dev" + std::to_string(rng() % 1000), day, visits);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("probemine_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace probemine::test
