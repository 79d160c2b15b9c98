#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gda/graph.hpp"
#include "gda/graph_io.hpp"
#include "gda/models.hpp"
#include "gda/optim.hpp"
#include "gda/trainer.hpp"

namespace gda {

template <typename T>
double target_accuracy(const ModelBundle<T>& bundle, const Graph& target, int exclude_class = -1) {
  std::vector<int> rows(target.num_nodes);
  std::iota(rows.begin(), rows.end(), 0);
  return accuracy_over_rows(bundle, target, rows, exclude_class);
}

/// Mann-Whitney AUC with average ranks, so ties contribute 0.5.
inline double rank_auc(const std::vector<double>& positive, const std::vector<double>& negative) {
  if (positive.empty() || negative.empty())
    throw std::invalid_argument("rank_auc: both score sets must be nonempty");
  struct Item {
    double score;
    bool pos;
  };
  std::vector<Item> items;
  items.reserve(positive.size() + negative.size());
  for (double s : positive) items.push_back({s, true});
  for (double s : negative) items.push_back({s, false});
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.score < b.score; });
  double pos_rank_sum = 0;
  std::size_t i = 0;
  while (i < items.size()) {
    std::size_t j = i;
    while (j < items.size() && items[j].score == items[i].score) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
    for (std::size_t k = i; k < j; ++k)
      if (items[k].pos) pos_rank_sum += avg_rank;
    i = j;
  }
  const double n1 = static_cast<double>(positive.size());
  const double n0 = static_cast<double>(negative.size());
  return (pos_rank_sum - n1 * (n1 + 1) / 2.0) / (n1 * n0);
}

/// AUC of true target edges against injected negatives, scored the same way
/// the denoising loss sees them: embeddings from the merged noisy adjacency.
template <typename T>
double edge_auc(const ModelBundle<T>& bundle, const Graph& target, const EdgeSet& negatives) {
  NoisyGraph noisy = inject_edges(target, negatives);
  Tape<T> tape;
  ForwardCtx ctx = eval_ctx();
  Tensor<T> emb = bundle.encode(tape, noisy.merged, target.features.template cast<T>(), ctx);
  std::vector<std::pair<int, int>> pos_pairs = target.adj.undirected_edges();
  Tensor<T> pos_scores = edge_scores(tape, bundle, emb, pos_pairs, ctx);
  Tensor<T> neg_scores = edge_scores(tape, bundle, emb, negatives.pairs, ctx);
  tape.clear();
  std::vector<double> pos(pos_scores.value().begin(), pos_scores.value().end());
  std::vector<double> neg(neg_scores.value().begin(), neg_scores.value().end());
  return rank_auc(pos, neg);
}

inline double row_l2_distance(const Mat<double>& m, int a, int b) {
  double acc = 0;
  for (std::size_t j = 0; j < m.cols; ++j) {
    const double d = m(a, j) - m(b, j);
    acc += d * d;
  }
  return std::sqrt(acc);
}

enum class Xi1Stat { max, mean, quantile };

inline Xi1Stat parse_xi1_stat(const std::string& s) {
  if (s == "max") return Xi1Stat::max;
  if (s == "mean") return Xi1Stat::mean;
  if (s == "quantile") return Xi1Stat::quantile;
  throw std::invalid_argument("unknown xi1 statistic: " + s);
}

/// Aggregated L2 embedding distance across the given edges. Quantile uses
/// the nearest-rank definition. An empty edge list yields 0.
inline double xi1_estimate(const Mat<double>& embeddings,
                           const std::vector<std::pair<int, int>>& edges, Xi1Stat stat,
                           double q = 0.5) {
  if (edges.empty()) return 0.0;
  std::vector<double> dists;
  dists.reserve(edges.size());
  for (const auto& [u, v] : edges) dists.push_back(row_l2_distance(embeddings, u, v));
  switch (stat) {
    case Xi1Stat::max:
      return *std::max_element(dists.begin(), dists.end());
    case Xi1Stat::mean:
      return std::accumulate(dists.begin(), dists.end(), 0.0) / static_cast<double>(dists.size());
    case Xi1Stat::quantile: {
      if (q <= 0 || q > 1) throw std::invalid_argument("xi1 quantile must lie in (0,1]");
      std::sort(dists.begin(), dists.end());
      const std::size_t k =
          static_cast<std::size_t>(std::ceil(q * static_cast<double>(dists.size())));
      return dists[k == 0 ? 0 : k - 1];
    }
  }
  return 0.0;
}

using HeadFn = std::function<std::vector<double>(const std::vector<double>&)>;

struct LipschitzEstimate {
  double value = 0;
  bool degenerate = false;  // every edge had zero embedding distance
};

/// Edge-restricted empirical Lipschitz constant of g: the max output/input
/// distance ratio over target edges. Zero-distance pairs are skipped; if all
/// pairs are skipped the estimate is 0 with the degenerate flag set.
inline LipschitzEstimate empirical_lipschitz(const HeadFn& g, const Mat<double>& embeddings,
                                             const std::vector<std::pair<int, int>>& edges) {
  LipschitzEstimate est;
  est.degenerate = true;
  for (const auto& [u, v] : edges) {
    const double dx = row_l2_distance(embeddings, u, v);
    if (dx == 0.0) continue;
    est.degenerate = false;
    const std::vector<double> gu = g(embeddings.row_copy(u));
    const std::vector<double> gv = g(embeddings.row_copy(v));
    double dy = 0;
    for (std::size_t j = 0; j < gu.size(); ++j) dy += (gu[j] - gv[j]) * (gu[j] - gv[j]);
    est.value = std::max(est.value, std::sqrt(dy) / dx);
  }
  return est;
}

struct ComponentBound {
  int component_id = 0;
  int size = 0;
  int anchor = 0;
  double anchor_disagreement = 0;
  double k_avg = 0;
  double lhs_estimate = 0;  // argmax disagreement rate within the component
  double rhs_estimate = 0;
};

struct BoundReport {
  std::vector<ComponentBound> components;
  double xi1 = 0;
  double xi2 = 0;
  double l1 = 0;
  double l2 = 0;
  bool l1_degenerate = false;
  bool l2_degenerate = false;
  double disagreement_rate = 0;  // global lhs: Pr(argmax g1 != argmax g2)
  double rhs_estimate = 0;       // component-size-weighted sum
  int telescope_checked = 0;
  int telescope_violations = 0;
  double telescope_max_slack = 0;  // most negative margin observed (<= 0 when clean)
};

/// Instantiates the disagreement bound chain on frozen embeddings. g1 and g2
/// map one embedding row to the output vector whose L2 distance defines the
/// disagreement d(u); pass softmaxed heads for probability-space distances.
///
/// Per component: anchor = argmin d(u) (ties toward the lower node id),
/// K from BFS hop counts, rhs = (d(anchor) + K_avg*(L1+L2)*xi1) / xi2 with
/// edge-restricted empirical L1, L2 and the max-statistic xi1. The per-node
/// telescoped inequality d(u) <= d(anchor) + K(u,anchor)*(L1+L2)*xi1 is
/// checked for every node; with empirical maxima it can only fail through
/// floating-point noise, so violations are counted against a 1e-9 slack.
inline BoundReport bound_report_from_embeddings(const HeadFn& g1, const HeadFn& g2,
                                                const Mat<double>& embeddings, const Csr& adj,
                                                double xi2) {
  if (xi2 <= 0) throw std::invalid_argument("bound report: xi2 must be positive");
  if (embeddings.rows != static_cast<std::size_t>(adj.num_nodes))
    throw std::invalid_argument("bound report: embedding row count mismatch");
  const int n = adj.num_nodes;
  if (n == 0) throw std::invalid_argument("bound report: empty graph");

  std::vector<double> d(n);
  std::vector<std::uint8_t> agree(n);
  for (int u = 0; u < n; ++u) {
    const std::vector<double> o1 = g1(embeddings.row_copy(u));
    const std::vector<double> o2 = g2(embeddings.row_copy(u));
    if (o1.size() != o2.size()) throw std::invalid_argument("bound report: head output dims differ");
    double acc = 0;
    for (std::size_t j = 0; j < o1.size(); ++j) acc += (o1[j] - o2[j]) * (o1[j] - o2[j]);
    d[u] = std::sqrt(acc);
    agree[u] = argmax_row(o1.data(), o1.size()) == argmax_row(o2.data(), o2.size()) ? 1 : 0;
  }

  const std::vector<std::pair<int, int>> edges = adj.undirected_edges();
  BoundReport report;
  report.xi2 = xi2;
  report.xi1 = xi1_estimate(embeddings, edges, Xi1Stat::max);
  const LipschitzEstimate l1 = empirical_lipschitz(g1, embeddings, edges);
  const LipschitzEstimate l2 = empirical_lipschitz(g2, embeddings, edges);
  report.l1 = l1.value;
  report.l2 = l2.value;
  report.l1_degenerate = l1.degenerate;
  report.l2_degenerate = l2.degenerate;

  const std::vector<int> comp = connected_components(adj);
  const int num_comp = comp.empty() ? 0 : *std::max_element(comp.begin(), comp.end()) + 1;
  const double step = (report.l1 + report.l2) * report.xi1;

  std::size_t total_disagree = 0;
  for (int c = 0; c < num_comp; ++c) {
    ComponentBound cb;
    cb.component_id = c;
    cb.anchor = -1;
    for (int u = 0; u < n; ++u) {
      if (comp[u] != c) continue;
      ++cb.size;
      if (!agree[u]) ++total_disagree;
      if (cb.anchor == -1 || d[u] < d[cb.anchor]) cb.anchor = u;
    }
    cb.anchor_disagreement = d[cb.anchor];
    const std::vector<int> hops = bfs_hops(adj, cb.anchor);
    double hop_sum = 0;
    int disagree_in_comp = 0;
    for (int u = 0; u < n; ++u) {
      if (comp[u] != c) continue;
      hop_sum += hops[u];
      if (!agree[u]) ++disagree_in_comp;
      const double bound = d[cb.anchor] + static_cast<double>(hops[u]) * step;
      const double slack = d[u] - bound;  // positive means violated
      ++report.telescope_checked;
      if (slack > 1e-9 * std::max(1.0, bound)) ++report.telescope_violations;
      report.telescope_max_slack = std::max(report.telescope_max_slack, slack);
    }
    cb.k_avg = hop_sum / cb.size;
    cb.lhs_estimate = static_cast<double>(disagree_in_comp) / cb.size;
    cb.rhs_estimate = (cb.anchor_disagreement + cb.k_avg * step) / xi2;
    report.rhs_estimate += (static_cast<double>(cb.size) / n) * cb.rhs_estimate;
    report.components.push_back(cb);
  }
  report.disagreement_rate = static_cast<double>(total_disagree) / n;
  return report;
}

/// Wraps a classifier head as embedding row -> softmax probabilities.
inline HeadFn head_softmax_fn(const Mlp2<double>& head) {
  return [head](const std::vector<double>& x) {
    Tape<double> tape;
    Tensor<double> in(1, x.size());
    in.value() = x;
    Tensor<double> logits = head.forward(tape, in, eval_ctx());
    tape.clear();
    std::vector<double> out = logits.value();
    const double mx = *std::max_element(out.begin(), out.end());
    double denom = 0;
    for (double& v : out) {
      v = std::exp(v - mx);
      denom += v;
    }
    for (double& v : out) v /= denom;
    return out;
  };
}

template <typename T>
Mat<double> encode_frozen(const ModelBundle<T>& bundle, const Graph& g) {
  ModelBundle<double> db = bundle.template cast<double>();
  Tape<double> tape;
  Tensor<double> emb = db.encode(tape, g.adj, g.features, eval_ctx());
  tape.clear();
  return emb.to_mat();
}

template <typename T>
BoundReport bound_report(const ModelBundle<T>& bundle, const Mlp2<double>& g1,
                         const Mlp2<double>& g2, const Graph& target, double xi2) {
  return bound_report_from_embeddings(head_softmax_fn(g1), head_softmax_fn(g2),
                                      encode_frozen(bundle, target), target.adj, xi2);
}

struct HeadFitConfig {
  int epochs = 200;
  double learning_rate = 0.01;
  double weight_decay = 0.0;
  int hidden = 0;  // 0 means reuse the bundle's classifier_hidden
  std::uint32_t seed = 0;
};

/// Trains a fresh 2-layer head on frozen embeddings by full-batch Adam.
inline Mlp2<double> fit_head(const Mat<double>& embeddings, const std::vector<int>& labels,
                             const std::vector<int>& rows, int num_classes, int hidden,
                             const HeadFitConfig& cfg) {
  if (rows.empty()) throw std::invalid_argument("fit_head: no training rows");
  std::mt19937 rng(cfg.seed);
  Mlp2<double> head(embeddings.cols, hidden, num_classes, rng);
  std::vector<Tensor<double>> params;
  head.collect(params);
  Optimizer<double> opt(OptKind::adam, cfg.learning_rate, cfg.weight_decay);
  Tensor<double> x = Tensor<double>::from_mat(embeddings);
  for (int e = 0; e < cfg.epochs; ++e) {
    Tape<double> tape;
    Tensor<double> logits = head.forward(tape, x, eval_ctx());
    Tensor<double> loss = tape.cross_entropy_onehot(logits, labels, rows);
    tape.backward(loss);
    opt.step(params);
  }
  return head;
}

/// Refits the bound's two heads on the frozen encoder: g1 sees only source
/// labels, g2 sees source plus target labels, same budget and architecture.
template <typename T>
std::pair<Mlp2<double>, Mlp2<double>> fit_bound_heads(const ModelBundle<T>& bundle,
                                                      const Graph& source, const Graph& target,
                                                      const HeadFitConfig& cfg) {
  if (target.labels.empty())
    throw std::runtime_error("bound report: target labels required to fit g2");
  const Mat<double> emb_s = encode_frozen(bundle, source);
  const Mat<double> emb_t = encode_frozen(bundle, target);
  std::vector<int> src_rows = source.train_mask.empty()
                                  ? std::vector<int>{}
                                  : detail::mask_rows(source.train_mask);
  if (src_rows.empty()) {
    for (int i = 0; i < source.num_nodes; ++i)
      if (!source.labels.empty() && source.labels[i] != kUnlabeled) src_rows.push_back(i);
  }
  if (src_rows.empty()) throw std::runtime_error("bound report: source has no labeled rows");
  const int hidden = cfg.hidden > 0 ? cfg.hidden : bundle.spec.classifier_hidden;

  Mlp2<double> g1 = fit_head(emb_s, source.labels, src_rows, bundle.spec.num_classes, hidden, cfg);

  Mat<double> stacked(emb_s.rows + emb_t.rows, emb_s.cols);
  std::copy(emb_s.v.begin(), emb_s.v.end(), stacked.v.begin());
  std::copy(emb_t.v.begin(), emb_t.v.end(), stacked.v.begin() + emb_s.v.size());
  std::vector<int> stacked_labels(source.labels.begin(), source.labels.end());
  stacked_labels.insert(stacked_labels.end(), target.labels.begin(), target.labels.end());
  std::vector<int> joint_rows = src_rows;
  for (int i = 0; i < target.num_nodes; ++i)
    if (target.labels[i] != kUnlabeled) joint_rows.push_back(source.num_nodes + i);
  if (joint_rows.size() == src_rows.size())
    throw std::runtime_error("bound report: target labels required to fit g2");
  Mlp2<double> g2 =
      fit_head(stacked, stacked_labels, joint_rows, bundle.spec.num_classes, hidden, cfg);
  return {g1, g2};
}

/// Proxy A-distance: train a logistic discriminator between the two
/// embedding clouds on a 50/50 split and map its held-out error e to
/// 2(1 - 2e), clipped to [0, 2].
inline double proxy_a_distance(const Mat<double>& source_emb, const Mat<double>& target_emb,
                               std::uint32_t seed = 0, int iterations = 300) {
  if (source_emb.cols != target_emb.cols)
    throw std::invalid_argument("proxy_a_distance: embedding dims differ");
  if (source_emb.rows < 2 || target_emb.rows < 2)
    throw std::invalid_argument("proxy_a_distance: need at least 2 rows per domain");
  const std::size_t dim = source_emb.cols;
  std::mt19937 rng(seed);

  auto split = [&rng](std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    return idx;
  };
  const std::vector<std::size_t> si = split(source_emb.rows);
  const std::vector<std::size_t> ti = split(target_emb.rows);
  const std::size_t s_train = source_emb.rows / 2, t_train = target_emb.rows / 2;

  struct Row {
    const double* x;
    int y;
  };
  std::vector<Row> train, held;
  for (std::size_t i = 0; i < source_emb.rows; ++i)
    (i < s_train ? train : held).push_back({source_emb.v.data() + si[i] * dim, 0});
  for (std::size_t i = 0; i < target_emb.rows; ++i)
    (i < t_train ? train : held).push_back({target_emb.v.data() + ti[i] * dim, 1});

  std::vector<double> mean(dim, 0), sdev(dim, 0);
  for (const Row& r : train)
    for (std::size_t j = 0; j < dim; ++j) mean[j] += r.x[j];
  for (std::size_t j = 0; j < dim; ++j) mean[j] /= static_cast<double>(train.size());
  for (const Row& r : train)
    for (std::size_t j = 0; j < dim; ++j) sdev[j] += (r.x[j] - mean[j]) * (r.x[j] - mean[j]);
  for (std::size_t j = 0; j < dim; ++j)
    sdev[j] = std::max(std::sqrt(sdev[j] / static_cast<double>(train.size())), 1e-12);

  std::vector<double> w(dim, 0), mw(dim, 0), vw(dim, 0);
  double b = 0, mb = 0, vb = 0;
  const double lr = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  auto margin = [&](const Row& r) {
    double z = b;
    for (std::size_t j = 0; j < dim; ++j) z += w[j] * (r.x[j] - mean[j]) / sdev[j];
    return z;
  };
  for (int it = 1; it <= iterations; ++it) {
    std::vector<double> gw(dim, 0);
    double gb = 0;
    for (const Row& r : train) {
      const double z = margin(r);
      const double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
      const double g = (p - r.y) / static_cast<double>(train.size());
      for (std::size_t j = 0; j < dim; ++j) gw[j] += g * (r.x[j] - mean[j]) / sdev[j];
      gb += g;
    }
    const double c1 = 1.0 - std::pow(b1, it), c2 = 1.0 - std::pow(b2, it);
    for (std::size_t j = 0; j < dim; ++j) {
      mw[j] = b1 * mw[j] + (1 - b1) * gw[j];
      vw[j] = b2 * vw[j] + (1 - b2) * gw[j] * gw[j];
      w[j] -= lr * (mw[j] / c1) / (std::sqrt(vw[j] / c2) + eps);
    }
    mb = b1 * mb + (1 - b1) * gb;
    vb = b2 * vb + (1 - b2) * gb * gb;
    b -= lr * (mb / c1) / (std::sqrt(vb / c2) + eps);
  }

  std::size_t wrong = 0;
  for (const Row& r : held)
    if ((margin(r) >= 0 ? 1 : 0) != r.y) ++wrong;
  const double err = static_cast<double>(wrong) / static_cast<double>(held.size());
  return std::clamp(2.0 * (1.0 - 2.0 * err), 0.0, 2.0);
}

struct Pca2 {
  std::vector<double> mean;  // column means
  Mat<double> components;    // dim x 2, orthonormal columns
  Mat<double> projected;     // n x 2
};

/// Top-2 principal directions by power iteration with deflation. Degenerate
/// spectra fall back to canonical basis vectors; columns are re-orthonormalized
/// explicitly before projecting.
inline Pca2 pca_2d(const Mat<double>& x) {
  const std::size_t n = x.rows, dim = x.cols;
  if (n == 0 || dim == 0) throw std::invalid_argument("pca_2d: empty input");
  Pca2 out;
  out.mean.assign(dim, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j) out.mean[j] += x(i, j);
  for (double& m : out.mean) m /= static_cast<double>(n);

  Mat<double> cov(dim, dim);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < dim; ++a) {
      const double xa = x(i, a) - out.mean[a];
      for (std::size_t c = 0; c < dim; ++c) cov(a, c) += xa * (x(i, c) - out.mean[c]);
    }

  auto matvec = [&](const std::vector<double>& v) {
    std::vector<double> r(dim, 0);
    for (std::size_t a = 0; a < dim; ++a)
      for (std::size_t c = 0; c < dim; ++c) r[a] += cov(a, c) * v[c];
    return r;
  };
  auto norm = [](const std::vector<double>& v) {
    double s = 0;
    for (double e : v) s += e * e;
    return std::sqrt(s);
  };
  auto canonical = [dim](std::size_t k) {
    std::vector<double> v(dim, 0);
    v[k % dim] = 1;
    return v;
  };

  std::mt19937 rng(1234567u);
  std::vector<std::vector<double>> basis;
  for (std::size_t comp = 0; comp < 2; ++comp) {
    std::vector<double> v(dim);
    if (dim == 1) {
      v = {1.0};
    } else {
      std::normal_distribution<double> gauss(0.0, 1.0);
      for (double& e : v) e = gauss(rng);
    }
    for (int it = 0; it < 300; ++it) {
      for (const auto& u : basis) {
        double dot = 0;
        for (std::size_t j = 0; j < dim; ++j) dot += u[j] * v[j];
        for (std::size_t j = 0; j < dim; ++j) v[j] -= dot * u[j];
      }
      std::vector<double> w = matvec(v);
      const double wn = norm(w);
      if (wn < 1e-300) break;
      for (std::size_t j = 0; j < dim; ++j) v[j] = w[j] / wn;
    }
    for (const auto& u : basis) {
      double dot = 0;
      for (std::size_t j = 0; j < dim; ++j) dot += u[j] * v[j];
      for (std::size_t j = 0; j < dim; ++j) v[j] -= dot * u[j];
    }
    double vn = norm(v);
    if (vn < 1e-12) {
      for (std::size_t k = 0; k < dim + 2; ++k) {
        v = canonical(comp + k);
        for (const auto& u : basis) {
          double dot = 0;
          for (std::size_t j = 0; j < dim; ++j) dot += u[j] * v[j];
          for (std::size_t j = 0; j < dim; ++j) v[j] -= dot * u[j];
        }
        vn = norm(v);
        if (vn >= 1e-12) break;
      }
    }
    if (vn >= 1e-12)
      for (double& e : v) e /= vn;
    else
      v.assign(dim, 0);  // dim == 1 second component
    basis.push_back(v);
  }

  out.components = Mat<double>(dim, 2);
  for (std::size_t j = 0; j < dim; ++j) {
    out.components(j, 0) = basis[0][j];
    out.components(j, 1) = basis[1][j];
  }
  out.projected = Mat<double>(n, 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < 2; ++c) {
      double acc = 0;
      for (std::size_t j = 0; j < dim; ++j) acc += (x(i, j) - out.mean[j]) * out.components(j, c);
      out.projected(i, c) = acc;
    }
  return out;
}

struct EmbeddingDump {
  Mat<double> embeddings;
  std::vector<int> labels;
  Mat<double> projected;   // n x 2
  Mat<double> components;  // dim x 2
};

template <typename T>
EmbeddingDump export_embeddings(const ModelBundle<T>& bundle, const Graph& g,
                                const std::string& path) {
  EmbeddingDump dump;
  dump.embeddings = encode_frozen(bundle, g);
  dump.labels.assign(g.num_nodes, kUnlabeled);
  if (!g.labels.empty()) dump.labels = g.labels;
  Pca2 pca = pca_2d(dump.embeddings);
  dump.projected = pca.projected;
  dump.components = pca.components;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "node,label,pc1,pc2";
  for (std::size_t j = 0; j < dump.embeddings.cols; ++j) out << ",e" << j;
  out << '\n';
  for (int i = 0; i < g.num_nodes; ++i) {
    out << i << ',' << dump.labels[i] << ',' << detail::format_double(dump.projected(i, 0)) << ','
        << detail::format_double(dump.projected(i, 1));
    for (std::size_t j = 0; j < dump.embeddings.cols; ++j)
      out << ',' << detail::format_double(dump.embeddings(i, j));
    out << '\n';
  }
  return dump;
}

}  // namespace gda
