#pragma once

#include <array>
#include <cmath>
#include <random>

#include "gda/graph.hpp"

namespace gda {

/// Stochastic block model: block sizes, symmetric edge probabilities,
/// per-block Gaussian feature means. Labels are block ids.
struct SbmSpec {
  std::vector<int> block_sizes;
  Mat<double> block_probs;     // blocks x blocks, symmetric, in [0,1]
  Mat<double> feature_means;   // blocks x dim
  double feature_noise_sigma = 0.0;
  std::uint32_t seed = 0;

  int num_blocks() const { return static_cast<int>(block_sizes.size()); }
  int total_nodes() const {
    int n = 0;
    for (int s : block_sizes) n += s;
    return n;
  }
};

inline void validate_sbm_spec(const SbmSpec& spec) {
  int b = spec.num_blocks();
  if (b == 0) throw std::invalid_argument("sbm: no blocks");
  for (int s : spec.block_sizes)
    if (s <= 0) throw std::invalid_argument("sbm: block sizes must be positive");
  if (spec.block_probs.rows != static_cast<std::size_t>(b) ||
      spec.block_probs.cols != static_cast<std::size_t>(b))
    throw std::invalid_argument("sbm: block_probs must be blocks x blocks");
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < b; ++j) {
      double p = spec.block_probs(i, j);
      if (p < 0.0 || p > 1.0) throw std::invalid_argument("sbm: probability outside [0,1]");
      if (p != spec.block_probs(j, i)) throw std::invalid_argument("sbm: block_probs not symmetric");
    }
  if (spec.feature_means.rows != static_cast<std::size_t>(b))
    throw std::invalid_argument("sbm: feature_means row count must equal blocks");
  if (spec.feature_noise_sigma < 0.0) throw std::invalid_argument("sbm: negative noise sigma");
}

/// Samples a graph from the block model. Every candidate pair u < v is an
/// independent Bernoulli draw; features are block mean plus isotropic
/// Gaussian noise. Bit-deterministic given the seed.
inline Graph generate_sbm(const SbmSpec& spec) {
  validate_sbm_spec(spec);
  const int n = spec.total_nodes();
  const int d = static_cast<int>(spec.feature_means.cols);

  Graph g;
  g.num_nodes = n;
  g.num_classes = spec.num_blocks();
  g.labels.resize(n);
  int node = 0;
  for (int b = 0; b < spec.num_blocks(); ++b)
    for (int k = 0; k < spec.block_sizes[b]; ++k) g.labels[node++] = b;

  std::mt19937 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  g.features = Mat<double>(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      g.features(i, j) = spec.feature_means(g.labels[i], j) + spec.feature_noise_sigma * noise(rng);

  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (uniform01(rng) < spec.block_probs(g.labels[u], g.labels[v])) edges.emplace_back(u, v);

  g.adj = build_csr(n, edges);
  validate_graph(g);
  return g;
}

/// Source/target pair exhibiting a conditional structure shift across three
/// classes with scalar feature levels 1, delta and 0. In the source every
/// class is its own cluster (within-block density p_in, no cross edges), so
/// the two low-feature classes are hard to tell apart. The target keeps the
/// feature process but wires class 0 and class 1 together with density
/// p_12_target while class 2 stays isolated, so target structure separates
/// them. The scalar sits in feature coordinate 0; the remaining dims carry
/// pure noise. Labels are present on both graphs; the source gets a full
/// train mask.
inline std::pair<Graph, Graph> generate_threeclass_shift(double delta,
                                                         std::array<int, 3> sizes, double p_in,
                                                         double p_12_target, std::uint32_t seed,
                                                         int feature_dim = 8,
                                                         double noise_sigma = 0.3) {
  if (delta <= 0.0 || delta > 1.0)
    throw std::invalid_argument("threeclass: delta must lie in (0,1]");
  for (double p : {p_in, p_12_target})
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("threeclass: probability outside [0,1]");
  if (feature_dim < 1) throw std::invalid_argument("threeclass: feature_dim must be >= 1");

  SbmSpec base;
  base.block_sizes.assign(sizes.begin(), sizes.end());
  base.feature_means = Mat<double>(3, feature_dim, 0.0);
  base.feature_means(0, 0) = 1.0;
  base.feature_means(1, 0) = delta;
  base.feature_means(2, 0) = 0.0;
  base.feature_noise_sigma = noise_sigma;

  SbmSpec source = base;
  source.block_probs = Mat<double>(3, 3, 0.0);
  for (int b = 0; b < 3; ++b) source.block_probs(b, b) = p_in;
  source.seed = seed;

  SbmSpec target = base;
  target.block_probs = Mat<double>(3, 3, 0.0);
  for (int b = 0; b < 3; ++b) target.block_probs(b, b) = p_in;
  target.block_probs(0, 1) = target.block_probs(1, 0) = p_12_target;
  target.seed = seed + 1;

  Graph gs = generate_sbm(source);
  gs.train_mask.assign(gs.num_nodes, 1);
  gs.val_mask.assign(gs.num_nodes, 0);
  gs.test_mask.assign(gs.num_nodes, 0);
  Graph gt = generate_sbm(target);
  return {std::move(gs), std::move(gt)};
}

}  // namespace gda
