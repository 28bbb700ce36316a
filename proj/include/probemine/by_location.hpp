#pragma once

// Clustering by location: windowed transition counts between buildings, the
// row-normalised transition matrix, Ward clustering over it and dominant
// flow directions.

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "probemine/cluster.hpp"
#include "probemine/core.hpp"
#include "probemine/registry.hpp"

namespace probemine::by_location {

enum class Window { Morning, Midday, Evening };
inline constexpr std::size_t kWindowCount = 3;
inline constexpr std::array<Window, kWindowCount> kAllWindows = {Window::Morning, Window::Midday, Window::Evening};

std::string_view to_string(Window w);
/// Throws MalformedInput.
Window parse_window(std::string_view s);
/// Half-open local clock range [begin, end) in seconds since midnight.
std::pair<Duration, Duration> window_range(Window w);

inline constexpr double kDominantThreshold = 0.55;

/// Row-major n x n transition counts, zero diagonal.
class CountMatrix {
 public:
  CountMatrix() = default;
  explicit CountMatrix(std::size_t n) : n_(n), v_(n * n, 0) {}

  std::size_t size() const { return n_; }
  std::int64_t& operator()(std::size_t i, std::size_t j) { return v_[i * n_ + j]; }
  std::int64_t operator()(std::size_t i, std::size_t j) const { return v_[i * n_ + j]; }
  CountMatrix& operator+=(const CountMatrix& o);
  std::int64_t total() const;

  bool operator==(const CountMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::int64_t> v_;
};

/// Adds each consecutive pair with distinct buildings whose departure (end of
/// the source entry) falls inside the window.
void count_transitions(const DayTrajectory& traj, Window window, const DeploymentRegistry& registry,
                       const TimeFrame& frame, CountMatrix& n);

CountMatrix transition_counts(std::span<const DayTrajectory> trajs, Window window,
                              const DeploymentRegistry& registry, const TimeFrame& frame);

/// Row-normalised off-diagonal counts, zero rows stay zero, diagonal 1.
/// Throws InvalidInput for a negative entry or non-zero diagonal.
cluster::SquareMatrix transition_probability(const CountMatrix& n);

/// 1 - (T(i,j) + T(j,i)) / 2 off the diagonal, 0 on it.
cluster::SquareMatrix matrix_to_dissimilarity(const cluster::SquareMatrix& t);

/// Squared Euclidean distances between rows of T.
cluster::SquareMatrix row_vector_dissimilarity(const cluster::SquareMatrix& t);

enum class HacInput { Dissimilarity, RowVectors };
std::string_view to_string(HacInput h);
/// Throws ConfigError.
HacInput parse_hac_input(std::string_view s);

struct CutRule {
  double value = 0.75;
  /// Fraction of the highest merge instead of an absolute height.
  bool relative = true;
};

struct LocationClustering {
  cluster::Dendrogram dendrogram;
  double threshold = 0;
  std::vector<std::size_t> clusters;
  std::vector<std::size_t> order;
  /// T with rows and columns permuted by `order`.
  cluster::SquareMatrix reordered;
};

LocationClustering cluster_locations(const cluster::SquareMatrix& t, CutRule cut = {},
                                     HacInput input = HacInput::Dissimilarity);

struct DominantEdge {
  /// Registry indices.
  std::size_t from = 0;
  std::size_t to = 0;
  double probability = 0;
  Window window = Window::Morning;

  bool operator==(const DominantEdge&) const = default;
};

/// At most one edge per unordered pair: the direction whose share of the
/// pair's transitions strictly exceeds `threshold`.
std::vector<DominantEdge> dominant_directions(const CountMatrix& n, Window window,
                                              double threshold = kDominantThreshold);

enum class FlowPattern { Reversal, ContinuousTarget, Mixed };
std::string_view to_string(FlowPattern p);

struct FlowReport {
  BuildingId building;
  std::array<std::vector<DominantEdge>, kWindowCount> inbound;
  std::array<std::vector<DominantEdge>, kWindowCount> outbound;
  FlowPattern pattern = FlowPattern::Mixed;
};

/// Reversal: morning and evening flows point in opposite majority
/// directions. Continuous target: every window has exactly one outbound edge
/// and all go to the same building. Anything else is mixed.
FlowReport building_flow_report(const std::array<std::vector<DominantEdge>, kWindowCount>& edges,
                                BuildingId building, const DeploymentRegistry& registry);

std::string format_flow_report(const FlowReport& report, const DeploymentRegistry& registry);

}  // namespace probemine::by_location
