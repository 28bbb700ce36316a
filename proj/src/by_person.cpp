#include "probemine/by_person.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "probemine/error.hpp"

namespace probemine::by_person {
namespace {

Timestamp floor_div(Timestamp a, Timestamp b) { return a / b - ((a % b != 0) && ((a < 0) != (b < 0))); }

/// Seconds of [s, e) falling inside local [07:00, 19:00) on any date.
Duration daytime_overlap(Timestamp s, Timestamp e, Duration tz) {
  Duration total = 0;
  for (Timestamp d = floor_div(s + tz, kDaySeconds); d * kDaySeconds - tz < e; ++d) {
    const Timestamp lo = std::max(s, d * kDaySeconds - tz + kDaytimeBegin);
    const Timestamp hi = std::min(e, d * kDaySeconds - tz + kDaytimeEnd);
    if (hi > lo) total += hi - lo;
  }
  return total;
}

std::size_t slot(LocationCategory c) { return static_cast<std::size_t>(c); }

}  // namespace

PersonFeature person_features(const DayTrajectory& traj, const DeploymentRegistry& registry,
                              const TimeFrame& frame) {
  PersonFeature f;
  f.device = traj.device;
  f.day = traj.day;
  for (const auto& e : traj.entries) {
    const Duration len = std::max<Duration>(0, e.end - e.start);
    switch (registry.category_of(building_of(e.node))) {
      case Category::Hospital: f.stay[slot(LocationCategory::Hospital)] += len; break;
      case Category::Mall: f.stay[slot(LocationCategory::Mall)] += len; break;
      case Category::Institute: f.stay[slot(LocationCategory::Institute)] += len; break;
      case Category::Residential: {
        const auto day = daytime_overlap(e.start, e.end, frame.tz_offset());
        f.stay[slot(LocationCategory::ResidentialDay)] += day;
        f.stay[slot(LocationCategory::ResidentialNight)] += len - day;
        break;
      }
    }
  }
  return f;
}

cluster::PointMatrix feature_matrix(std::span<const PersonFeature> features) {
  cluster::PointMatrix m(kLocationCategoryCount);
  m.reserve(features.size());
  std::array<double, kLocationCategoryCount> row{};
  for (const auto& f : features) {
    for (std::size_t c = 0; c < kLocationCategoryCount; ++c) row[c] = static_cast<double>(f.stay[c]);
    m.push_back(row);
  }
  return m;
}

PersonClustering cluster_persons(std::span<const PersonFeature> features, std::size_t k, std::uint64_t seed,
                                 std::size_t restarts, std::size_t threads, std::size_t silhouette_limit) {
  if (features.size() < k) {
    throw Infeasible(fmt::format("{} trajectories cannot form {} clusters", features.size(), k));
  }
  const auto points = feature_matrix(features);
  const auto res = cluster::kmeans(points, {k, seed, restarts, cluster::kMaxIterations, threads});

  // Sort key: Mall, Hospital, Institute, Residential day, Residential night.
  constexpr std::array<LocationCategory, kLocationCategoryCount> key_order = {
      LocationCategory::Mall, LocationCategory::Hospital, LocationCategory::Institute,
      LocationCategory::ResidentialDay, LocationCategory::ResidentialNight};
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    for (const auto c : key_order) {
      const double x = res.centroids.row(a)[slot(c)];
      const double y = res.centroids.row(b)[slot(c)];
      if (x != y) return x > y;
    }
    return false;
  });
  std::vector<std::size_t> relabel(k);
  for (std::size_t r = 0; r < k; ++r) relabel[order[r]] = r;

  PersonClustering out;
  out.k = k;
  out.sse = res.sse;
  out.sizes.assign(k, 0);
  for (const auto a : res.assignments) {
    out.clusters.push_back(relabel[a]);
    ++out.sizes[relabel[a]];
  }
  for (const auto o : order) out.centroids.push_back(res.centroids.row(o));

  if (silhouette_limit > 0 && k >= 2) {
    const std::size_t stride = (features.size() + silhouette_limit - 1) / silhouette_limit;
    cluster::PointMatrix sample(kLocationCategoryCount);
    std::vector<std::size_t> labels;
    for (std::size_t i = 0; i < features.size(); i += stride) {
      sample.push_back(points.row(i));
      labels.push_back(out.clusters[i]);
    }
    out.silhouette_sample = labels.size();
    try {
      out.silhouette = cluster::silhouette(sample, labels);
    } catch (const UndefinedMetric&) {
      out.silhouette.reset();
    }
  }
  return out;
}

std::vector<Edge> cluster_transition_graph(std::span<const DayTrajectory* const> trajs,
                                           const DeploymentRegistry& registry) {
  std::map<std::pair<std::size_t, std::size_t>, std::int64_t> weights;
  for (const auto* t : trajs) {
    for (std::size_t i = 0; i + 1 < t->entries.size(); ++i) {
      auto a = registry.index_of(building_of(t->entries[i].node));
      auto b = registry.index_of(building_of(t->entries[i + 1].node));
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      ++weights[{a, b}];
    }
  }
  std::vector<Edge> edges;
  for (const auto& [pair, w] : weights) edges.push_back({pair.first, pair.second, w});
  std::stable_sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) { return x.weight > y.weight; });
  return edges;
}

std::vector<double> unique_location_histogram(std::span<const DayTrajectory* const> trajs,
                                              const DeploymentRegistry& registry) {
  std::vector<std::size_t> counts(registry.size(), 0);
  for (const auto* t : trajs) {
    std::vector<bool> seen(registry.size(), false);
    std::size_t unique = 0;
    for (const auto& e : t->entries) {
      const auto b = registry.index_of(building_of(e.node));
      if (!seen[b]) {
        seen[b] = true;
        ++unique;
      }
    }
    if (unique > 0) ++counts[unique - 1];
  }
  const auto total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  std::vector<double> out(counts.size(), 0.0);
  if (total == 0) return out;
  for (std::size_t u = 0; u < counts.size(); ++u) {
    out[u] = static_cast<double>(counts[u]) / static_cast<double>(total);
  }
  return out;
}

StartEnd start_end_distributions(std::span<const DayTrajectory* const> trajs, const TimeFrame& frame) {
  StartEnd out;
  std::array<std::size_t, 24> starts{};
  std::array<std::size_t, 24> ends{};
  std::size_t n = 0;
  for (const auto* t : trajs) {
    if (t->entries.empty()) continue;
    ++starts[frame.clock_hour(t->entries.front().start)];
    ++ends[frame.clock_hour(t->entries.back().end)];
    ++n;
  }
  if (n == 0) return out;
  for (std::size_t h = 0; h < 24; ++h) {
    out.start[h] = static_cast<double>(starts[h]) / static_cast<double>(n);
    out.end[h] = static_cast<double>(ends[h]) / static_cast<double>(n);
  }
  return out;
}

std::array<GroupCurve, kDayGroupCount> daytype_count_curves(std::span<const DayTrajectory* const> trajs,
                                                            const std::set<BuildingId>& buildings,
                                                            const Calendar& calendar) {
  const auto days = calendar.days();
  std::map<std::int64_t, by_time::HourCounts> counts;
  for (const auto d : days) counts[d] = {};
  for (const auto* t : trajs) {
    const auto it = counts.find(t->day.index);
    if (it == counts.end()) continue;
    std::uint32_t mask = 0;
    for (const auto& e : t->entries) {
      if (buildings.contains(building_of(e.node))) mask |= by_time::hour_mask(e, t->day);
    }
    for (std::size_t h = 0; h < by_time::kHours; ++h) {
      if (mask & (1u << h)) ++it->second[h];
    }
  }

  std::array<GroupCurve, kDayGroupCount> out;
  for (std::size_t g = 0; g < kDayGroupCount; ++g) {
    out[g].group = kAllDayGroups[g];
    out[g].min.fill(0);
    out[g].max.fill(0);
  }
  for (const auto& [day, c] : counts) {
    auto& gc = out[static_cast<std::size_t>(group_of(*calendar.label_of(day)))];
    for (std::size_t h = 0; h < by_time::kHours; ++h) {
      const auto v = static_cast<double>(c[h]);
      gc.avg[h] += v;
      gc.min[h] = gc.empty ? v : std::min(gc.min[h], v);
      gc.max[h] = gc.empty ? v : std::max(gc.max[h], v);
    }
    gc.empty = false;
    ++gc.days;
  }
  for (auto& gc : out) {
    if (gc.days == 0) continue;
    for (auto& v : gc.avg) v /= static_cast<double>(gc.days);
  }
  return out;
}

}  // namespace probemine::by_person
