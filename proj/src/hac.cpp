#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "probemine/cluster.hpp"
#include "probemine/error.hpp"

namespace probemine::cluster {

namespace {

void validate_dissimilarity(const SquareMatrix& d) {
  const auto n = d.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (d(i, i) != 0.0) throw InvalidInput(fmt::format("dissimilarity diagonal ({0},{0}) is not zero", i));
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!std::isfinite(d(i, j)) || d(i, j) < 0) {
        throw InvalidInput(fmt::format("dissimilarity ({},{}) is negative or not finite", i, j));
      }
      if (d(i, j) != d(j, i)) throw InvalidInput(fmt::format("dissimilarity ({},{}) is not symmetric", i, j));
    }
  }
}

}  // namespace

Dendrogram hac_ward(const SquareMatrix& input) {
  validate_dissimilarity(input);
  const std::size_t n = input.size();
  Dendrogram out;
  out.leaf_count = n;
  if (n < 2) return out;

  SquareMatrix d = input;
  std::vector<bool> active(n, true);
  std::vector<double> size(n, 1.0);
  std::vector<std::size_t> node(n);
  std::iota(node.begin(), node.end(), std::size_t{0});

  // Nearest higher-slot neighbour of every slot, ties to the lowest slot.
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> nn(n, kNone);
  std::vector<double> nn_dist(n, std::numeric_limits<double>::infinity());
  auto rescan = [&](std::size_t i) {
    nn[i] = kNone;
    nn_dist[i] = std::numeric_limits<double>::infinity();
    for (std::size_t j = i + 1; j < n; ++j) {
      if (active[j] && d(i, j) < nn_dist[i]) {
        nn_dist[i] = d(i, j);
        nn[i] = j;
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i) rescan(i);

  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t i = kNone;
    for (std::size_t s = 0; s < n; ++s) {
      if (active[s] && nn[s] != kNone && (i == kNone || nn_dist[s] < nn_dist[i])) i = s;
    }
    const std::size_t j = nn[i];
    const double height = d(i, j);

    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == i || k == j) continue;
      const double v = ward_update(d(i, k), d(j, k), height, size[i], size[j], size[k]);
      d(i, k) = v;
      d(k, i) = v;
    }
    out.merges.push_back({node[i], node[j], height, static_cast<std::size_t>(size[i] + size[j])});
    active[j] = false;
    size[i] += size[j];
    node[i] = n + step;

    for (std::size_t k = 0; k < i; ++k) {
      if (!active[k]) continue;
      if (nn[k] == i || nn[k] == j) {
        rescan(k);
      } else if (d(k, i) < nn_dist[k] || (d(k, i) == nn_dist[k] && i < nn[k])) {
        nn[k] = i;
        nn_dist[k] = d(k, i);
      }
    }
    rescan(i);
    for (std::size_t k = i + 1; k < j; ++k) {
      if (active[k] && nn[k] == j) rescan(k);
    }
  }
  return out;
}

std::vector<std::size_t> cut_dendrogram(const Dendrogram& dendro, double threshold) {
  const std::size_t n = dendro.leaf_count;
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  // Any leaf under each node stands in for it.
  std::vector<std::size_t> rep(n + dendro.merges.size());
  std::iota(rep.begin(), rep.begin() + static_cast<std::ptrdiff_t>(n), std::size_t{0});
  for (std::size_t m = 0; m < dendro.merges.size(); ++m) {
    const auto& mg = dendro.merges[m];
    rep[n + m] = rep[mg.a];
    if (mg.height < threshold) parent[find(rep[mg.b])] = find(rep[mg.a]);
  }
  std::vector<std::size_t> label(n);
  std::vector<std::size_t> root_label(n, static_cast<std::size_t>(-1));
  std::size_t next = 0;
  for (std::size_t leaf = 0; leaf < n; ++leaf) {
    auto& l = root_label[find(leaf)];
    if (l == static_cast<std::size_t>(-1)) l = next++;
    label[leaf] = l;
  }
  return label;
}

std::vector<std::size_t> leaf_order(const Dendrogram& dendro) {
  const std::size_t n = dendro.leaf_count;
  if (n == 0) return {};
  if (dendro.merges.size() + 1 != n) {
    throw InvalidInput(fmt::format("dendrogram over {} leaves has {} merges", n, dendro.merges.size()));
  }
  const std::size_t total = n + dendro.merges.size();
  std::vector<std::size_t> min_leaf(total);
  std::iota(min_leaf.begin(), min_leaf.begin() + static_cast<std::ptrdiff_t>(n), std::size_t{0});
  for (std::size_t m = 0; m < dendro.merges.size(); ++m) {
    min_leaf[n + m] = std::min(min_leaf[dendro.merges[m].a], min_leaf[dendro.merges[m].b]);
  }
  std::vector<std::size_t> order;
  order.reserve(n);
  std::vector<std::size_t> stack{total - 1};
  while (!stack.empty()) {
    const auto x = stack.back();
    stack.pop_back();
    if (x < n) {
      order.push_back(x);
      continue;
    }
    auto left = dendro.merges[x - n].a;
    auto right = dendro.merges[x - n].b;
    if (min_leaf[right] < min_leaf[left]) std::swap(left, right);
    stack.push_back(right);
    stack.push_back(left);
  }
  return order;
}

}  // namespace probemine::cluster
