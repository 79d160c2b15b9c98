#pragma once

#include <cstdint>
#include <random>
#include <unordered_set>

#include "gda/graph.hpp"

namespace gda {

namespace detail {
inline std::uint64_t pair_key(int u, int v, int n) {
  return static_cast<std::uint64_t>(u) * static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(v);
}
}  // namespace detail

/// Uniform rejection sampling over non-edges. Returned pairs are canonical
/// u < v, distinct, disjoint from the graph's edges and from the diagonal.
/// Deterministic given the seed.
inline EdgeSet sample_negative_edges(const Graph& graph, std::size_t count, std::uint32_t rng_seed) {
  const int n = graph.num_nodes;
  const std::uint64_t total_pairs = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t free_pairs = total_pairs - graph.num_edges();
  if (count > free_pairs)
    throw std::invalid_argument("sample_negative_edges: infeasible count, not enough non-edges");

  std::unordered_set<std::uint64_t> taken;
  taken.reserve(count * 2);
  std::mt19937 rng(rng_seed);
  EdgeSet out;
  out.pairs.reserve(count);
  while (out.pairs.size() < count) {
    int u = uniform_below(rng, n);
    int v = uniform_below(rng, n);
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    if (graph.adj.has_edge(u, v)) continue;
    if (!taken.insert(detail::pair_key(u, v, n)).second) continue;
    out.pairs.emplace_back(u, v);
  }
  return out;
}

}  // namespace gda
