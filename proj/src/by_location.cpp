#include "probemine/by_location.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "probemine/error.hpp"

namespace probemine::by_location {

std::string_view to_string(Window w) {
  switch (w) {
    case Window::Morning: return "morning";
    case Window::Midday: return "midday";
    case Window::Evening: return "evening";
  }
  return "?";
}

Window parse_window(std::string_view s) {
  for (const auto w : kAllWindows) {
    if (to_string(w) == s) return w;
  }
  throw MalformedInput(fmt::format("unknown window '{}'", s));
}

std::pair<Duration, Duration> window_range(Window w) {
  switch (w) {
    case Window::Morning: return {6 * kHourSeconds, 10 * kHourSeconds};
    case Window::Midday: return {11 * kHourSeconds, 14 * kHourSeconds};
    case Window::Evening: return {18 * kHourSeconds, 22 * kHourSeconds};
  }
  return {0, 0};
}

CountMatrix& CountMatrix::operator+=(const CountMatrix& o) {
  if (o.n_ != n_) throw InvalidInput("count matrix size mismatch");
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
  return *this;
}

std::int64_t CountMatrix::total() const {
  std::int64_t t = 0;
  for (const auto v : v_) t += v;
  return t;
}

void count_transitions(const DayTrajectory& traj, Window window, const DeploymentRegistry& registry,
                       const TimeFrame& frame, CountMatrix& n) {
  const auto [lo, hi] = window_range(window);
  for (std::size_t i = 0; i + 1 < traj.entries.size(); ++i) {
    const auto a = registry.index_of(building_of(traj.entries[i].node));
    const auto b = registry.index_of(building_of(traj.entries[i + 1].node));
    if (a == b) continue;
    const auto clock = frame.clock_seconds(traj.entries[i].end);
    if (clock >= lo && clock < hi) ++n(a, b);
  }
}

CountMatrix transition_counts(std::span<const DayTrajectory> trajs, Window window,
                              const DeploymentRegistry& registry, const TimeFrame& frame) {
  CountMatrix n(registry.size());
  for (const auto& t : trajs) count_transitions(t, window, registry, frame, n);
  return n;
}

cluster::SquareMatrix transition_probability(const CountMatrix& n) {
  const auto size = n.size();
  cluster::SquareMatrix t(size, 0.0);
  for (std::size_t i = 0; i < size; ++i) {
    if (n(i, i) != 0) throw InvalidInput("transition counts must have a zero diagonal");
    std::int64_t row = 0;
    for (std::size_t j = 0; j < size; ++j) {
      if (n(i, j) < 0) throw InvalidInput("negative transition count");
      row += n(i, j);
    }
    for (std::size_t j = 0; j < size; ++j) {
      if (j != i && row > 0) t(i, j) = static_cast<double>(n(i, j)) / static_cast<double>(row);
    }
    t(i, i) = 1.0;
  }
  return t;
}

cluster::SquareMatrix matrix_to_dissimilarity(const cluster::SquareMatrix& t) {
  const auto n = t.size();
  cluster::SquareMatrix d(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = std::clamp(1.0 - (t(i, j) + t(j, i)) / 2.0, 0.0, 1.0);
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

cluster::SquareMatrix row_vector_dissimilarity(const cluster::SquareMatrix& t) {
  const auto n = t.size();
  cluster::SquareMatrix d(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0;
      for (std::size_t c = 0; c < n; ++c) {
        const double diff = t(i, c) - t(j, c);
        s += diff * diff;
      }
      d(i, j) = s;
      d(j, i) = s;
    }
  }
  return d;
}

std::string_view to_string(HacInput h) {
  return h == HacInput::Dissimilarity ? "dissimilarity" : "row-vectors";
}

HacInput parse_hac_input(std::string_view s) {
  if (s == "dissimilarity") return HacInput::Dissimilarity;
  if (s == "row-vectors") return HacInput::RowVectors;
  throw ConfigError(fmt::format("hac-input must be dissimilarity or row-vectors, got '{}'", s));
}

LocationClustering cluster_locations(const cluster::SquareMatrix& t, CutRule cut, HacInput input) {
  if (!std::isfinite(cut.value) || cut.value < 0) throw ConfigError("cut threshold must be a finite value >= 0");
  LocationClustering out;
  const auto d = input == HacInput::Dissimilarity ? matrix_to_dissimilarity(t) : row_vector_dissimilarity(t);
  out.dendrogram = cluster::hac_ward(d);
  double top = 0;
  for (const auto& m : out.dendrogram.merges) top = std::max(top, m.height);
  out.threshold = cut.relative ? cut.value * top : cut.value;
  out.clusters = cluster::cut_dendrogram(out.dendrogram, out.threshold);
  out.order = cluster::leaf_order(out.dendrogram);
  const auto n = t.size();
  out.reordered = cluster::SquareMatrix(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out.reordered(i, j) = t(out.order[i], out.order[j]);
  }
  return out;
}

std::vector<DominantEdge> dominant_directions(const CountMatrix& n, Window window, double threshold) {
  std::vector<DominantEdge> out;
  for (std::size_t i = 0; i < n.size(); ++i) {
    for (std::size_t j = i + 1; j < n.size(); ++j) {
      const auto fwd = n(i, j);
      const auto back = n(j, i);
      if (fwd + back <= 0) continue;
      const double p = static_cast<double>(fwd) / static_cast<double>(fwd + back);
      if (p > threshold) {
        out.push_back({i, j, p, window});
      } else if (1.0 - p > threshold) {
        out.push_back({j, i, static_cast<double>(back) / static_cast<double>(fwd + back), window});
      }
    }
  }
  return out;
}

std::string_view to_string(FlowPattern p) {
  switch (p) {
    case FlowPattern::Reversal: return "reversal";
    case FlowPattern::ContinuousTarget: return "continuous-target";
    case FlowPattern::Mixed: return "mixed";
  }
  return "?";
}

FlowReport building_flow_report(const std::array<std::vector<DominantEdge>, kWindowCount>& edges,
                                BuildingId building, const DeploymentRegistry& registry) {
  const auto b = registry.index_of(building);
  FlowReport r;
  r.building = building;
  for (std::size_t w = 0; w < kWindowCount; ++w) {
    for (const auto& e : edges[w]) {
      if (e.to == b) r.inbound[w].push_back(e);
      if (e.from == b) r.outbound[w].push_back(e);
    }
  }
  const auto balance = [&](Window w) {
    const auto i = static_cast<std::size_t>(w);
    return static_cast<long>(r.inbound[i].size()) - static_cast<long>(r.outbound[i].size());
  };
  const long morning = balance(Window::Morning);
  const long evening = balance(Window::Evening);
  if ((morning > 0 && evening < 0) || (morning < 0 && evening > 0)) {
    r.pattern = FlowPattern::Reversal;
    return r;
  }
  bool same_target = true;
  for (std::size_t w = 0; w < kWindowCount; ++w) {
    if (r.outbound[w].size() != 1 || r.outbound[w][0].to != r.outbound[0][0].to) {
      same_target = false;
      break;
    }
  }
  r.pattern = same_target ? FlowPattern::ContinuousTarget : FlowPattern::Mixed;
  return r;
}

std::string format_flow_report(const FlowReport& report, const DeploymentRegistry& registry) {
  std::string out = fmt::format("building {}\npattern {}\n", report.building.str(), to_string(report.pattern));
  const auto name = [&](std::size_t i) { return registry.node(i).building.str(); };
  for (std::size_t w = 0; w < kWindowCount; ++w) {
    out += fmt::format("\n[{}]\n", to_string(kAllWindows[w]));
    for (const auto& e : report.inbound[w]) out += fmt::format("in  {} -> {} {:.4f}\n", name(e.from), name(e.to), e.probability);
    for (const auto& e : report.outbound[w]) out += fmt::format("out {} -> {} {:.4f}\n", name(e.from), name(e.to), e.probability);
  }
  return out;
}

}  // namespace probemine::by_location
