#include "probemine/by_time.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

#include <fmt/format.h>

#include "probemine/error.hpp"

namespace probemine::by_time {

std::uint32_t hour_mask(const TrajectoryEntry& e, const DayWindow& day) {
  const auto bucket = [&](Timestamp t) {
    return static_cast<int>(std::clamp<Timestamp>((t - day.start) / kHourSeconds, 0, kHours - 1));
  };
  const int first = bucket(e.start);
  const int last = e.end > e.start ? bucket(e.end - 1) : first;
  std::uint32_t mask = 0;
  for (int h = first; h <= last; ++h) mask |= 1u << h;
  return mask;
}

HourlyCounter::HourlyCounter(const DeploymentRegistry& registry, const TimeFrame& frame,
                             std::vector<std::int64_t> days)
    : registry_(registry), days_(std::move(days)) {
  std::sort(days_.begin(), days_.end());
  days_.erase(std::unique(days_.begin(), days_.end()), days_.end());
  for (const auto d : days_) windows_.push_back(frame.window(d));
  counts_.assign(registry_.size() * days_.size(), HourCounts{});
}

void HourlyCounter::add(const DayTrajectory& traj) {
  const auto it = std::lower_bound(days_.begin(), days_.end(), traj.day.index);
  if (it == days_.end() || *it != traj.day.index) return;
  const auto day_slot = static_cast<std::size_t>(it - days_.begin());

  // One mask per building so repeated visits within an hour count once.
  std::array<std::uint32_t, 256> masks{};
  std::array<std::size_t, 256> touched{};
  std::size_t n_touched = 0;
  for (const auto& e : traj.entries) {
    const auto b = registry_.index_of(building_of(e.node));
    if (masks[b] == 0) touched[n_touched++] = b;
    masks[b] |= hour_mask(e, traj.day);
  }
  for (std::size_t t = 0; t < n_touched; ++t) {
    const auto b = touched[t];
    auto& counts = counts_[b * days_.size() + day_slot];
    for (std::uint32_t m = masks[b]; m != 0; m &= m - 1) ++counts[std::countr_zero(m)];
  }
}

std::vector<DayFeature> HourlyCounter::features(BuildingId building) const {
  const auto b = registry_.index_of(building);
  std::vector<DayFeature> out;
  out.reserve(days_.size());
  for (std::size_t d = 0; d < days_.size(); ++d) {
    DayFeature f;
    f.building = building;
    f.day = windows_[d];
    f.counts = counts_[b * days_.size() + d];
    std::array<double, kHours> raw{};
    std::copy(f.counts.begin(), f.counts.end(), raw.begin());
    const auto norm = cluster::minmax_normalize(raw);
    std::copy(norm.begin(), norm.end(), f.normalized.begin());
    out.push_back(f);
  }
  return out;
}

std::vector<DayFeature> hourly_count_features(std::span<const DayTrajectory> trajs, BuildingId building,
                                              const DeploymentRegistry& registry, const TimeFrame& frame,
                                              std::span<const std::int64_t> days) {
  registry.index_of(building);
  HourlyCounter counter(registry, frame, std::vector<std::int64_t>(days.begin(), days.end()));
  for (const auto& t : trajs) counter.add(t);
  return counter.features(building);
}

cluster::PointMatrix profile_matrix(std::span<const DayFeature> features) {
  cluster::PointMatrix m(kHours);
  m.reserve(features.size());
  for (const auto& f : features) m.push_back(f.normalized);
  return m;
}

CalendarAssignment cluster_days(std::span<const DayFeature> features, std::size_t k, std::uint64_t seed,
                                std::size_t restarts, std::size_t threads) {
  if (features.size() < k) {
    throw Infeasible(fmt::format("{} days cannot form {} clusters", features.size(), k));
  }
  const auto res = cluster::kmeans(profile_matrix(features), {k, seed, restarts, cluster::kMaxIterations, threads});

  std::vector<std::size_t> size(k, 0);
  std::vector<std::size_t> first(k, features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto c = res.assignments[i];
    ++size[c];
    first[c] = std::min(first[c], i);
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return size[a] != size[b] ? size[a] > size[b] : first[a] < first[b];
  });
  std::vector<std::size_t> relabel(k);
  for (std::size_t r = 0; r < k; ++r) relabel[order[r]] = r;

  CalendarAssignment out;
  out.building = features.empty() ? BuildingId{} : features.front().building;
  out.k = k;
  out.sse = res.sse;
  for (std::size_t i = 0; i < features.size(); ++i) {
    out.days.push_back(features[i].day.index);
    out.clusters.push_back(relabel[res.assignments[i]]);
  }
  return out;
}

ConfusionTable day_type_confusion(const CalendarAssignment& assignment, const Calendar& calendar) {
  ConfusionTable t;
  t.k = assignment.k;
  std::array<std::vector<std::size_t>, kDayLabelCount> counts;
  for (auto& row : counts) row.assign(t.k, 0);
  for (std::size_t i = 0; i < assignment.days.size(); ++i) {
    const auto label = calendar.label_of(assignment.days[i]);
    if (!label) {
      throw InvalidInput(fmt::format("day {} has no calendar label", TimeFrame::date_string(assignment.days[i])));
    }
    const auto r = static_cast<std::size_t>(*label);
    ++counts[r][assignment.clusters[i]];
    ++t.days[r];
  }
  for (std::size_t r = 0; r < kDayLabelCount; ++r) {
    t.percent[r].assign(t.k, 0.0);
    t.empty[r] = t.days[r] == 0;
    if (t.empty[r]) continue;
    for (std::size_t c = 0; c < t.k; ++c) {
      t.percent[r][c] = 100.0 * static_cast<double>(counts[r][c]) / static_cast<double>(t.days[r]);
    }
  }
  return t;
}

std::vector<std::vector<DayCurve>> cluster_daily_curves(std::span<const DayFeature> features,
                                                        const CalendarAssignment& assignment) {
  if (features.size() != assignment.clusters.size()) {
    throw InvalidInput("assignment was computed on a different feature set");
  }
  std::vector<std::vector<DayCurve>> out(assignment.k);
  for (std::size_t i = 0; i < features.size(); ++i) {
    out[assignment.clusters[i]].push_back({features[i].day.index, features[i].normalized});
  }
  return out;
}

}  // namespace probemine::by_time
