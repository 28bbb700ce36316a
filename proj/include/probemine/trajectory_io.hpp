#pragma once

// JSON-lines interchange for day trajectories: one trajectory per line with
// explicit stay/take fields. This is the file every perspective reads.

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "probemine/core.hpp"
#include "probemine/text.hpp"

namespace probemine::io {

/// Appends one line (with trailing newline).
void append_trajectory_json(std::string& out, const DayTrajectory& traj);
/// Throws MalformedInput.
DayTrajectory parse_trajectory_json(std::string_view line);

class TrajectoryWriter {
 public:
  explicit TrajectoryWriter(const std::filesystem::path& path) : out_(path) {}
  void write(const DayTrajectory& traj);
  void close() { out_.close(); }
  std::size_t count() const { return count_; }

 private:
  text::FileWriter out_;
  std::size_t count_ = 0;
};

void for_each_trajectory(const std::filesystem::path& path, const std::function<void(DayTrajectory&&)>& fn);
std::vector<DayTrajectory> read_trajectories(const std::filesystem::path& path);
void write_trajectories(const std::filesystem::path& path, const std::vector<DayTrajectory>& trajs);

}  // namespace probemine::io
