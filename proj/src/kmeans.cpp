#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "probemine/cluster.hpp"
#include "probemine/error.hpp"
#include "probemine/parallel.hpp"
#include "probemine/random.hpp"

namespace probemine::cluster {

PointMatrix::PointMatrix(std::size_t dim, std::vector<double> data) : dim_(dim), data_(std::move(data)) {
  if (dim_ == 0 || data_.size() % dim_ != 0) throw InvalidInput("point data does not fill whole rows");
  for (double x : data_) {
    if (!std::isfinite(x)) throw InvalidInput("non-finite coordinate");
  }
}

void PointMatrix::push_back(std::span<const double> row) {
  if (row.size() != dim_ || dim_ == 0) {
    throw InvalidInput(fmt::format("point has dimension {}, want {}", row.size(), dim_));
  }
  for (double x : row) {
    if (!std::isfinite(x)) throw InvalidInput("non-finite coordinate");
  }
  data_.insert(data_.end(), row.begin(), row.end());
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::vector<double> minmax_normalize(std::span<const double> v) {
  if (v.empty()) throw InvalidInput("cannot normalize an empty vector");
  for (double x : v) {
    if (!std::isfinite(x)) throw InvalidInput("cannot normalize a vector with NaN/infinite entries");
  }
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double min = *lo;
  const double range = *hi - *lo;
  std::vector<double> out(v.size(), 0.0);
  if (range == 0) return out;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - min) / range;
  return out;
}

namespace {

// Points sorted lexicographically, so runs do not depend on input order.
struct Canonical {
  PointMatrix points;
  std::vector<std::size_t> order;  // sorted position -> input index
  std::vector<std::size_t> distinct;  // sorted positions of first copies
};

bool row_less(std::span<const double> a, std::span<const double> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

Canonical canonicalize(const PointMatrix& in) {
  Canonical c{PointMatrix(in.dim()), {}, {}};
  c.order.resize(in.size());
  std::iota(c.order.begin(), c.order.end(), std::size_t{0});
  std::stable_sort(c.order.begin(), c.order.end(),
                   [&](std::size_t a, std::size_t b) { return row_less(in.row(a), in.row(b)); });
  c.points.reserve(in.size());
  for (auto i : c.order) c.points.push_back(in.row(i));
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    if (i == 0 || !std::equal(c.points.row(i).begin(), c.points.row(i).end(), c.points.row(i - 1).begin())) {
      c.distinct.push_back(i);
    }
  }
  return c;
}

void validate(const PointMatrix& points, std::size_t k) {
  if (points.empty()) throw InvalidInput("k-means on an empty point set");
  if (k == 0) throw InvalidInput("k must be at least 1");
}

PointMatrix uniform_init(const PointMatrix& pts, const std::vector<std::size_t>& distinct, std::size_t k,
                         rnd::Engine& rng) {
  // Partial Fisher-Yates over the distinct points.
  std::vector<std::size_t> pool = distinct;
  PointMatrix centroids(pts.dim());
  centroids.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    const auto pick = j + rnd::below(rng, pool.size() - j);
    std::swap(pool[j], pool[pick]);
    centroids.push_back(pts.row(pool[j]));
  }
  return centroids;
}

PointMatrix plus_plus_init(const PointMatrix& pts, std::size_t k, rnd::Engine& rng) {
  const std::size_t n = pts.size();
  PointMatrix centroids(pts.dim());
  centroids.reserve(k);
  centroids.push_back(pts.row(rnd::below(rng, n)));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(pts.row(i), centroids.row(0));
  for (std::size_t j = 1; j < k; ++j) {
    double total = 0;
    for (double d : d2) total += d;
    // Copies of a chosen point weigh zero, so picks stay distinct.
    const double x = rnd::unit(rng) * total;
    std::size_t pick = n;
    double acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (d2[i] == 0) continue;
      acc += d2[i];
      pick = i;
      if (x < acc) break;
    }
    centroids.push_back(pts.row(pick));
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(pts.row(i), centroids.row(j)));
  }
  return centroids;
}

KMeansResult lloyd(const PointMatrix& pts, const std::vector<std::size_t>& distinct, std::size_t k,
                   std::uint64_t seed, std::size_t max_iterations, KMeansInit init) {
  const std::size_t n = pts.size();
  const std::size_t dim = pts.dim();
  rnd::Engine rng(seed);
  PointMatrix centroids =
      init == KMeansInit::Uniform ? uniform_init(pts, distinct, k, rng) : plus_plus_init(pts, k, rng);

  KMeansResult res;
  res.seed = seed;
  res.assignments.assign(n, 0);
  std::vector<std::size_t> counts(k);
  std::vector<double> sums(k * dim);

  auto assign = [&] {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = squared_distance(pts.row(i), centroids.row(0));
      for (std::size_t j = 1; j < k; ++j) {
        const double d = squared_distance(pts.row(i), centroids.row(j));
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      if (res.assignments[i] != best) changed = true;
      res.assignments[i] = best;
    }
    return changed;
  };

  auto recompute = [&](std::size_t j) {
    std::fill(sums.begin() + j * dim, sums.begin() + (j + 1) * dim, 0.0);
    counts[j] = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (res.assignments[i] != j) continue;
      ++counts[j];
      const auto r = pts.row(i);
      for (std::size_t d = 0; d < dim; ++d) sums[j * dim + d] += r[d];
    }
    if (counts[j] == 0) return;
    auto c = centroids.row(j);
    for (std::size_t d = 0; d < dim; ++d) c[d] = sums[j * dim + d] / static_cast<double>(counts[j]);
  };

  auto update = [&] {
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto j = res.assignments[i];
      ++counts[j];
      const auto r = pts.row(i);
      for (std::size_t d = 0; d < dim; ++d) sums[j * dim + d] += r[d];
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] == 0) continue;
      auto c = centroids.row(j);
      for (std::size_t d = 0; d < dim; ++d) c[d] = sums[j * dim + d] / static_cast<double>(counts[j]);
    }
    bool repaired = false;
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] != 0) continue;
      // Farthest point from its own centroid, among clusters that can spare one.
      std::size_t far = n;
      double far_d = -1;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[res.assignments[i]] < 2) continue;
        const double d = squared_distance(pts.row(i), centroids.row(res.assignments[i]));
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      const auto donor = res.assignments[far];
      res.assignments[far] = j;
      recompute(j);
      recompute(donor);
      repaired = true;
    }
    return repaired;
  };

  auto sse = [&] {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += squared_distance(pts.row(i), centroids.row(res.assignments[i]));
    return s;
  };

  bool repaired = false;
  for (std::size_t it = 0; it < max_iterations; ++it) {
    const bool changed = assign();
    if (it > 0 && !changed && !repaired) {
      res.converged = true;
      break;
    }
    repaired = update();
    res.sse_history.push_back(sse());
    res.iterations = it + 1;
  }
  res.centroids = std::move(centroids);
  res.sse = res.sse_history.empty() ? sse() : res.sse_history.back();
  return res;
}

KMeansResult restore_order(KMeansResult r, const Canonical& c) {
  std::vector<std::size_t> a(r.assignments.size());
  for (std::size_t s = 0; s < c.order.size(); ++s) a[c.order[s]] = r.assignments[s];
  r.assignments = std::move(a);
  return r;
}

}  // namespace

KMeansResult kmeans_single(const PointMatrix& points, std::size_t k, std::uint64_t seed,
                           std::size_t max_iterations, KMeansInit init) {
  validate(points, k);
  const auto c = canonicalize(points);
  if (k > c.distinct.size()) {
    throw Infeasible(fmt::format("k = {} exceeds {} distinct points", k, c.distinct.size()));
  }
  return restore_order(lloyd(c.points, c.distinct, k, seed, max_iterations, init), c);
}

KMeansResult kmeans(const PointMatrix& points, const KMeansOptions& opts) {
  validate(points, opts.k);
  const auto c = canonicalize(points);
  if (opts.k > c.distinct.size()) {
    throw Infeasible(fmt::format("k = {} exceeds {} distinct points", opts.k, c.distinct.size()));
  }
  const std::size_t restarts = std::max<std::size_t>(1, opts.restarts);
  std::vector<KMeansResult> runs(restarts);
  parallel_for(restarts, opts.threads, [&](std::size_t r) {
    runs[r] = lloyd(c.points, c.distinct, opts.k, rnd::derive(opts.seed, r), opts.max_iterations, opts.init);
    runs[r].restart = r;
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < restarts; ++r) {
    if (runs[r].sse < runs[best].sse) best = r;
  }
  return restore_order(std::move(runs[best]), c);
}

std::vector<SsePoint> sse_curve(const PointMatrix& points, std::size_t k_min, std::size_t k_max,
                                std::uint64_t seed, std::size_t restarts, std::size_t threads) {
  std::vector<SsePoint> out;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    KMeansOptions opts{k, seed, restarts, kMaxIterations, threads, KMeansInit::PlusPlus};
    const auto r = kmeans(points, opts);
    out.push_back({k, r.sse, !out.empty() && r.sse > out.back().sse});
  }
  return out;
}

double silhouette(const PointMatrix& points, std::span<const std::size_t> assignments) {
  if (assignments.size() != points.size()) throw InvalidInput("one assignment per point required");
  const std::size_t n = points.size();
  std::size_t k = 0;
  for (auto a : assignments) k = std::max(k, a + 1);
  std::vector<std::size_t> sizes(k);
  for (auto a : assignments) ++sizes[a];
  const auto used = std::count_if(sizes.begin(), sizes.end(), [](std::size_t s) { return s > 0; });
  if (used < 2) throw UndefinedMetric("silhouette needs at least two non-empty clusters");

  double total = 0;
  std::vector<double> dist_sum(k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto own = assignments[i];
    if (sizes[own] == 1) continue;
    std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      dist_sum[assignments[j]] += std::sqrt(squared_distance(points.row(i), points.row(j)));
    }
    const double a = dist_sum[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c == own || sizes[c] == 0) continue;
      b = std::min(b, dist_sum[c] / static_cast<double>(sizes[c]));
    }
    const double m = std::max(a, b);
    if (m > 0) total += (b - a) / m;
  }
  return total / static_cast<double>(n);
}

double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  if (a.size() != b.size()) throw InvalidInput("partitions cover different point counts");
  const std::size_t n = a.size();
  if (n < 2) return 1.0;
  std::size_t ka = 0;
  std::size_t kb = 0;
  for (auto x : a) ka = std::max(ka, x + 1);
  for (auto x : b) kb = std::max(kb, x + 1);
  std::vector<double> table(ka * kb, 0.0);
  std::vector<double> row(ka, 0.0);
  std::vector<double> col(kb, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    table[a[i] * kb + b[i]] += 1;
    row[a[i]] += 1;
    col[b[i]] += 1;
  }
  auto pairs = [](double x) { return x * (x - 1) / 2; };
  double index = 0;
  for (double v : table) index += pairs(v);
  double sum_a = 0;
  double sum_b = 0;
  for (double v : row) sum_a += pairs(v);
  for (double v : col) sum_b += pairs(v);
  const double expected = sum_a * sum_b / pairs(static_cast<double>(n));
  const double max_index = (sum_a + sum_b) / 2;
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

}  // namespace probemine::cluster
