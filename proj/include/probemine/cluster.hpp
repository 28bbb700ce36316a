#pragma once

// Unsupervised-learning primitives: min-max scaling, Lloyd's k-means with
// seeded restarts, SSE/silhouette diagnostics, adjusted Rand index, and
// Ward-linkage agglomerative clustering.

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace probemine::cluster {

/// Dense row-major point set; every row has the same dimension and only
/// finite values.
class PointMatrix {
 public:
  explicit PointMatrix(std::size_t dim = 0) : dim_(dim) {}
  /// Throws InvalidInput on a size mismatch or non-finite value.
  PointMatrix(std::size_t dim, std::vector<double> data);

  void push_back(std::span<const double> row);
  void reserve(std::size_t rows) { data_.reserve(rows * dim_); }

  std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return size() == 0; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const PointMatrix&) const = default;

 private:
  std::size_t dim_;
  std::vector<double> data_;
};

double squared_distance(std::span<const double> a, std::span<const double> b);

/// (v - min) / (max - min); all zeros for a constant vector. Throws
/// InvalidInput on NaN/infinite entries or an empty vector.
std::vector<double> minmax_normalize(std::span<const double> v);

inline constexpr std::size_t kDefaultRestarts = 20;
inline constexpr std::size_t kMaxIterations = 300;

/// Initial centroids: D^2-weighted sampling (k-means++), or k distinct
/// points drawn uniformly.
enum class KMeansInit { PlusPlus, Uniform };

struct KMeansOptions {
  std::size_t k = 1;
  std::uint64_t seed = 0;
  std::size_t restarts = kDefaultRestarts;
  std::size_t max_iterations = kMaxIterations;
  std::size_t threads = 1;
  KMeansInit init = KMeansInit::PlusPlus;
};

struct KMeansResult {
  /// Zero-based cluster index per input point, in input order.
  std::vector<std::size_t> assignments;
  PointMatrix centroids;
  double sse = 0;
  std::size_t iterations = 0;
  bool converged = false;
  /// SSE after every iteration of the returned run.
  std::vector<double> sse_history;
  /// Seed of the returned run and its restart index.
  std::uint64_t seed = 0;
  std::size_t restart = 0;
};

/// One Lloyd run: k distinct initial centroids, then assignment/update until
/// assignments stop changing or `max_iterations` pass. Empty clusters take
/// the point farthest from its centroid. Equidistant centroids resolve to
/// the lowest index.
KMeansResult kmeans_single(const PointMatrix& points, std::size_t k, std::uint64_t seed,
                           std::size_t max_iterations = kMaxIterations, KMeansInit init = KMeansInit::PlusPlus);

/// Best of `restarts` runs by SSE (ties: lowest restart). Restart seeds are
/// derived from the master seed. The result does not depend on the input
/// order or the thread count. Throws InvalidInput (empty input, k == 0) or
/// Infeasible (k above the number of distinct points).
KMeansResult kmeans(const PointMatrix& points, const KMeansOptions& opts);

struct SsePoint {
  std::size_t k = 0;
  double sse = 0;
  /// SSE rose relative to k-1 (restart noise).
  bool increased = false;
};

std::vector<SsePoint> sse_curve(const PointMatrix& points, std::size_t k_min, std::size_t k_max,
                                std::uint64_t seed, std::size_t restarts = kDefaultRestarts,
                                std::size_t threads = 1);

/// Mean silhouette with Euclidean distance. Points in singleton clusters
/// score 0. Throws UndefinedMetric with fewer than two clusters.
double silhouette(const PointMatrix& points, std::span<const std::size_t> assignments);

/// Hubert-Arabie adjusted Rand index; 1 when both partitions are trivial and
/// identical.
double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b);

/// Square matrix, row-major.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), v_(n * n, fill) {}

  std::size_t size() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return v_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return v_[i * n_ + j]; }
  const std::vector<double>& data() const { return v_; }

  bool operator==(const SquareMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> v_;
};

/// One agglomeration step. Leaves are nodes 0..n-1; the i-th merge creates
/// node n+i. `a` is the child holding the lower leaf index.
struct Merge {
  std::size_t a = 0;
  std::size_t b = 0;
  double height = 0;
  std::size_t size = 0;

  bool operator==(const Merge&) const = default;
};

struct Dendrogram {
  std::size_t leaf_count = 0;
  std::vector<Merge> merges;

  bool operator==(const Dendrogram&) const = default;
};

/// Ward linkage through the Lance-Williams recurrence on the given
/// dissimilarities (squared Euclidean distances reproduce the minimum
/// within-cluster-variance increase). Ties go to the smallest
/// (slot_a, slot_b) pair, where a merged cluster keeps the lower slot.
/// Throws InvalidInput for a non-symmetric, negative, non-finite, or
/// non-zero-diagonal matrix.
Dendrogram hac_ward(const SquareMatrix& d);

/// Lance-Williams update for Ward linkage.
inline double ward_update(double d_ik, double d_jk, double d_ij, double n_i, double n_j, double n_k) {
  return ((n_i + n_k) * d_ik + (n_j + n_k) * d_jk - n_k * d_ij) / (n_i + n_j + n_k);
}

/// Connected components over merges with height strictly below
/// `threshold`. Labels are numbered by first leaf.
std::vector<std::size_t> cut_dendrogram(const Dendrogram& dendro,
                                        double threshold = std::numeric_limits<double>::infinity());

/// In-order traversal, lower-leaf child first.
std::vector<std::size_t> leaf_order(const Dendrogram& dendro);

}  // namespace probemine::cluster
