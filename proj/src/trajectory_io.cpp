#include "probemine/trajectory_io.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "probemine/error.hpp"

namespace probemine::io {

void append_trajectory_json(std::string& out, const DayTrajectory& traj) {
  auto it = std::back_inserter(out);
  fmt::format_to(it, R"({{"device":{},"day":{},"date":"{}","day_start":{},"day_end":{},"entries":[)",
                 nlohmann::json(traj.device.str()).dump(), traj.day.index, TimeFrame::date_string(traj.day.index),
                 traj.day.start, traj.day.end);
  bool first = true;
  for (const auto& e : traj.entries) {
    fmt::format_to(it, R"({}{{"node":"{}","next":"{}","start":{},"end":{},"stay":{},"take":{}}})",
                   first ? "" : ",", e.node.view(), e.next.view(), e.start, e.end, e.stay, e.take);
    first = false;
  }
  out += "]}\n";
}

DayTrajectory parse_trajectory_json(std::string_view line) {
  const auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw MalformedInput("trajectory line is not a JSON object");
  try {
    DayTrajectory t;
    t.device = DeviceId(j.at("device").get<std::string>());
    t.day.index = j.at("day").get<std::int64_t>();
    t.day.start = j.at("day_start").get<Timestamp>();
    t.day.end = j.at("day_end").get<Timestamp>();
    const auto& entries = j.at("entries");
    t.entries.reserve(entries.size());
    for (const auto& je : entries) {
      TrajectoryEntry e;
      e.node = NodeId(je.at("node").get<std::string>());
      e.next = NodeId(je.at("next").get<std::string>());
      e.start = je.at("start").get<Timestamp>();
      e.end = je.at("end").get<Timestamp>();
      e.stay = je.at("stay").get<Duration>();
      e.take = je.at("take").get<Duration>();
      t.entries.push_back(e);
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedInput(fmt::format("bad trajectory record: {}", e.what()));
  }
}

void TrajectoryWriter::write(const DayTrajectory& traj) {
  append_trajectory_json(out_.buffer(), traj);
  out_.maybe_flush();
  ++count_;
}

void for_each_trajectory(const std::filesystem::path& path, const std::function<void(DayTrajectory&&)>& fn) {
  text::LineReader reader(path);
  std::string_view line;
  std::size_t lineno = 0;
  while (reader.next(line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      fn(parse_trajectory_json(line));
    } catch (const MalformedInput& e) {
      throw MalformedInput(fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
    }
  }
}

std::vector<DayTrajectory> read_trajectories(const std::filesystem::path& path) {
  std::vector<DayTrajectory> out;
  for_each_trajectory(path, [&](DayTrajectory&& t) { out.push_back(std::move(t)); });
  return out;
}

void write_trajectories(const std::filesystem::path& path, const std::vector<DayTrajectory>& trajs) {
  TrajectoryWriter w(path);
  for (const auto& t : trajs) w.write(t);
  w.close();
}

}  // namespace probemine::io
