#include "probemine/preprocess.hpp"

namespace probemine::prep {

DayTrajectory compute_stay_take(DayTrajectory traj) {
  auto& e = traj.entries;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (i + 1 < e.size() && e[i + 1].start < e[i].end) e[i].end = e[i + 1].start;
    e[i].stay = e[i].end - e[i].start;
    e[i].take = i + 1 < e.size() ? e[i + 1].start - e[i].end : 0;
  }
  relink(traj);
  return traj;
}

DayTrajectory merge_to_building_level(DayTrajectory traj, Duration threshold) {
  std::vector<TrajectoryEntry> out;
  out.reserve(traj.entries.size());
  for (auto e : traj.entries) {
    e.node = building_of(e.node).node();
    if (!out.empty() && out.back().node == e.node && out.back().take < threshold) {
      auto& prev = out.back();
      prev.end = e.end;
      prev.stay = prev.stay + prev.take + e.stay;
      prev.take = e.take;
    } else {
      out.push_back(e);
    }
  }
  traj.entries = std::move(out);
  relink(traj);
  return traj;
}

FilterVerdict classify(const DayTrajectory& traj, const FilterOptions& opts) {
  const auto& e = traj.entries;
  if (e.empty() || e.back().end - e.front().start < opts.min_span) return FilterVerdict::TooShort;
  for (const auto& x : e) {
    if (x.stay > opts.max_stay) return FilterVerdict::Anomalous;
  }
  return FilterVerdict::Keep;
}

std::vector<DayTrajectory> filter_trajectories(std::vector<DayTrajectory> trajs, FilterReport& report,
                                               const FilterOptions& opts) {
  std::vector<DayTrajectory> kept;
  kept.reserve(trajs.size());
  for (auto& t : trajs) {
    ++report.input;
    switch (classify(t, opts)) {
      case FilterVerdict::Keep:
        ++report.kept;
        kept.push_back(std::move(t));
        break;
      case FilterVerdict::TooShort: ++report.too_short; break;
      case FilterVerdict::Anomalous: ++report.anomalous; break;
    }
  }
  return kept;
}

}  // namespace probemine::prep
