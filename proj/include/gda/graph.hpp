#pragma once

#include <algorithm>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gda/mat.hpp"

namespace gda {

/// Symmetric CSR adjacency: row_ptr has n+1 entries, col_idx holds both
/// directions of every undirected edge, each row sorted and duplicate-free.
struct Csr {
  int num_nodes = 0;
  std::vector<int> row_ptr{0};
  std::vector<int> col_idx;

  int degree(int u) const { return row_ptr[u + 1] - row_ptr[u]; }

  /// Directed entry count (= 2x undirected edges).
  std::size_t nnz() const { return col_idx.size(); }

  std::size_t num_undirected_edges() const { return col_idx.size() / 2; }

  bool has_edge(int u, int v) const {
    const int* b = col_idx.data() + row_ptr[u];
    const int* e = col_idx.data() + row_ptr[u + 1];
    return std::binary_search(b, e, v);
  }

  /// Each undirected edge once, canonical u < v, ascending.
  std::vector<std::pair<int, int>> undirected_edges() const {
    std::vector<std::pair<int, int>> out;
    out.reserve(num_undirected_edges());
    for (int u = 0; u < num_nodes; ++u)
      for (int k = row_ptr[u]; k < row_ptr[u + 1]; ++k)
        if (u < col_idx[k]) out.emplace_back(u, col_idx[k]);
    return out;
  }
};

/// Symmetrizes, deduplicates and drops self-loops, then builds CSR.
/// Out-of-range endpoints are an error.
inline Csr build_csr(int num_nodes, const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::vector<int>> adj(num_nodes);
  for (const auto& [u, v] : edges) {
    if (u < 0 || u >= num_nodes || v < 0 || v >= num_nodes)
      throw std::invalid_argument("edge index out of range");
    if (u == v) continue;
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  Csr csr;
  csr.num_nodes = num_nodes;
  csr.row_ptr.assign(num_nodes + 1, 0);
  for (int u = 0; u < num_nodes; ++u) {
    auto& row = adj[u];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    csr.row_ptr[u + 1] = csr.row_ptr[u] + static_cast<int>(row.size());
    csr.col_idx.insert(csr.col_idx.end(), row.begin(), row.end());
  }
  return csr;
}

constexpr int kUnlabeled = -1;

/// Undirected graph with node features, optional labels and role masks.
/// Immutable after construction by convention; safe to share across threads.
struct Graph {
  int num_nodes = 0;
  Csr adj;
  Mat<double> features;          // num_nodes x dim
  std::vector<int> labels;       // empty, or per-node class (kUnlabeled allowed)
  std::vector<std::uint8_t> train_mask, val_mask, test_mask;  // empty = absent
  int num_classes = 0;

  int feature_dim() const { return static_cast<int>(features.cols); }
  std::size_t num_edges() const { return adj.num_undirected_edges(); }
  bool has_labels() const { return !labels.empty(); }
  bool has_masks() const {
    return !train_mask.empty() || !val_mask.empty() || !test_mask.empty();
  }
};

/// Checks every structural invariant; throws on the first violation.
inline void validate_graph(const Graph& g) {
  const Csr& a = g.adj;
  if (a.num_nodes != g.num_nodes) throw std::runtime_error("csr node count mismatch");
  if (static_cast<int>(a.row_ptr.size()) != g.num_nodes + 1)
    throw std::runtime_error("row_ptr length mismatch");
  for (int u = 0; u < g.num_nodes; ++u) {
    if (a.row_ptr[u + 1] < a.row_ptr[u]) throw std::runtime_error("row_ptr not nondecreasing");
    for (int k = a.row_ptr[u]; k < a.row_ptr[u + 1]; ++k) {
      int v = a.col_idx[k];
      if (v < 0 || v >= g.num_nodes) throw std::runtime_error("col_idx out of range");
      if (v == u) throw std::runtime_error("self-loop in adjacency");
      if (k > a.row_ptr[u] && a.col_idx[k - 1] >= v)
        throw std::runtime_error("row not sorted or duplicate entry");
      if (!a.has_edge(v, u)) throw std::runtime_error("adjacency not symmetric");
    }
  }
  if (g.features.rows != static_cast<std::size_t>(g.num_nodes))
    throw std::runtime_error("feature row count mismatch");
  if (!g.labels.empty()) {
    if (static_cast<int>(g.labels.size()) != g.num_nodes)
      throw std::runtime_error("label length mismatch");
    for (int y : g.labels)
      if (y != kUnlabeled && (y < 0 || y >= g.num_classes))
        throw std::runtime_error("label out of range");
  }
  for (const auto* m : {&g.train_mask, &g.val_mask, &g.test_mask})
    if (!m->empty() && static_cast<int>(m->size()) != g.num_nodes)
      throw std::runtime_error("mask length mismatch");
}

/// Explicit node-pair list, canonical u < v, duplicate-free.
struct EdgeSet {
  std::vector<std::pair<int, int>> pairs;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

inline void validate_edge_set(const EdgeSet& es, int num_nodes) {
  std::vector<std::pair<int, int>> sorted = es.pairs;
  for (const auto& [u, v] : sorted) {
    if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes)
      throw std::invalid_argument("edge set index out of range");
    if (u >= v) throw std::invalid_argument("edge set pair not canonical u < v");
  }
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("edge set contains duplicates");
}

/// Base graph plus injected edges, with a merged CSR view for encoding.
/// The base graph is never modified.
struct NoisyGraph {
  const Graph* base = nullptr;
  EdgeSet injected;
  Csr merged;
};

/// Merges `negatives` into the adjacency of `graph`. The negatives must be
/// disjoint from the existing edges.
inline NoisyGraph inject_edges(const Graph& graph, const EdgeSet& negatives) {
  validate_edge_set(negatives, graph.num_nodes);
  for (const auto& [u, v] : negatives.pairs)
    if (graph.adj.has_edge(u, v))
      throw std::invalid_argument("injected edge overlaps existing edge");
  std::vector<std::pair<int, int>> all = graph.adj.undirected_edges();
  all.insert(all.end(), negatives.pairs.begin(), negatives.pairs.end());
  NoisyGraph noisy;
  noisy.base = &graph;
  noisy.injected = negatives;
  noisy.merged = build_csr(graph.num_nodes, all);
  return noisy;
}

/// Component ids numbered by the smallest node they contain (BFS order).
inline std::vector<int> connected_components(const Csr& adj) {
  std::vector<int> comp(adj.num_nodes, -1);
  int next_id = 0;
  std::queue<int> q;
  for (int s = 0; s < adj.num_nodes; ++s) {
    if (comp[s] != -1) continue;
    comp[s] = next_id;
    q.push(s);
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int k = adj.row_ptr[u]; k < adj.row_ptr[u + 1]; ++k) {
        int v = adj.col_idx[k];
        if (comp[v] == -1) {
          comp[v] = next_id;
          q.push(v);
        }
      }
    }
    ++next_id;
  }
  return comp;
}

inline std::vector<int> connected_components(const Graph& g) {
  return connected_components(g.adj);
}

constexpr int kUnreachable = -1;

/// Hop distances from `root`; kUnreachable for other components.
inline std::vector<int> bfs_hops(const Csr& adj, int root) {
  if (root < 0 || root >= adj.num_nodes) throw std::invalid_argument("bfs root out of range");
  std::vector<int> dist(adj.num_nodes, kUnreachable);
  dist[root] = 0;
  std::queue<int> q;
  q.push(root);
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int k = adj.row_ptr[u]; k < adj.row_ptr[u + 1]; ++k) {
      int v = adj.col_idx[k];
      if (dist[v] == kUnreachable) {
        dist[v] = dist[u] + 1;
        q.push(v);
      }
    }
  }
  return dist;
}

inline std::vector<int> bfs_hops(const Graph& g, int root) { return bfs_hops(g.adj, root); }

/// Class-by-class edge mass, normalized to sum to 1; symmetric. An undirected
/// within-class edge contributes its full mass to the diagonal, a cross-class
/// edge splits evenly between (i,j) and (j,i). Requires a fully labeled graph.
inline Mat<double> label_connectivity_matrix(const Graph& g) {
  if (!g.has_labels()) throw std::invalid_argument("label_connectivity_matrix: graph has no labels");
  for (int y : g.labels)
    if (y == kUnlabeled)
      throw std::invalid_argument("label_connectivity_matrix: unlabeled node present");
  Mat<double> m(g.num_classes, g.num_classes, 0.0);
  std::size_t entries = g.adj.nnz();
  if (entries == 0) return m;
  for (int u = 0; u < g.num_nodes; ++u)
    for (int k = g.adj.row_ptr[u]; k < g.adj.row_ptr[u + 1]; ++k)
      m(g.labels[u], g.labels[g.adj.col_idx[k]]) += 1.0;
  for (double& x : m.v) x /= static_cast<double>(entries);
  return m;
}

}  // namespace gda
