#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gda/graph.hpp"
#include "gda/graph_io.hpp"
#include "gda/models.hpp"
#include "gda/optim.hpp"
#include "gda/sampling.hpp"
#include "gda/tensor.hpp"

namespace gda {

enum class EdgeTask { det, gae, linkpred, none };
enum class NegativesMode { resample_each_epoch, fixed };
enum class TrainMode { two_graph, transductive };

inline EdgeTask parse_edge_task(const std::string& s) {
  if (s == "det") return EdgeTask::det;
  if (s == "gae") return EdgeTask::gae;
  if (s == "linkpred") return EdgeTask::linkpred;
  if (s == "none") return EdgeTask::none;
  throw std::invalid_argument("unknown edge task: " + s);
}

inline const char* edge_task_name(EdgeTask t) {
  switch (t) {
    case EdgeTask::det: return "det";
    case EdgeTask::gae: return "gae";
    case EdgeTask::linkpred: return "linkpred";
    default: return "none";
  }
}

struct TrainConfig {
  ModelSpec model;
  int epochs = 200;
  double learning_rate = 0.01;
  double weight_decay = 5e-4;
  double dropout_p = 0.0;
  EdgeTask edge_task = EdgeTask::det;
  double edge_loss_weight = 1.0;
  NegativesMode negatives_per_epoch = NegativesMode::resample_each_epoch;
  double linkpred_holdout_fraction = 0.1;
  OptKind optimizer = OptKind::adam;
  std::uint32_t seed = 0;
  TrainMode mode = TrainMode::two_graph;
  int eval_every = 0;  // 0 disables validation logging
};

inline void validate_train_config(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw std::invalid_argument("train config: epochs must be at least 1");
  if (cfg.learning_rate <= 0) throw std::invalid_argument("train config: learning rate must be positive");
  if (cfg.weight_decay < 0) throw std::invalid_argument("train config: weight decay must be nonnegative");
  if (cfg.dropout_p < 0 || cfg.dropout_p >= 1)
    throw std::invalid_argument("train config: dropout must lie in [0,1)");
  if (cfg.edge_loss_weight < 0)
    throw std::invalid_argument("train config: edge loss weight must be nonnegative");
  if (cfg.edge_task == EdgeTask::linkpred &&
      (cfg.linkpred_holdout_fraction <= 0 || cfg.linkpred_holdout_fraction >= 1))
    throw std::invalid_argument("train config: linkpred holdout fraction must lie in (0,1)");
  if (cfg.eval_every < 0) throw std::invalid_argument("train config: eval_every must be nonnegative");
}

struct EpochRecord {
  double cls_loss = 0;
  double edge_loss = 0;
  double total_loss = 0;
  std::optional<double> val_acc;
  double seconds = 0;  // wall clock, kept out of the deterministic CSV
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
};

inline void write_history_csv(const TrainHistory& h, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "epoch,cls_loss,edge_loss,total_loss,val_acc\n";
  for (std::size_t i = 0; i < h.epochs.size(); ++i) {
    const auto& e = h.epochs[i];
    out << i << ',' << detail::format_double(e.cls_loss) << ',' << detail::format_double(e.edge_loss)
        << ',' << detail::format_double(e.total_loss) << ',';
    if (e.val_acc) out << detail::format_double(*e.val_acc);
    out << '\n';
  }
}

/// Edge-denoising loss: encode the target on the merged noisy adjacency,
/// then classify true edges (1) against the injected ones (0).
template <typename T>
Tensor<T> det_edge_loss(Tape<T>& tape, const ModelBundle<T>& bundle, const Graph& target,
                        const EdgeSet& negatives, const ForwardCtx& ctx) {
  NoisyGraph noisy = inject_edges(target, negatives);
  Tensor<T> emb = bundle.encode(tape, noisy.merged, target.features.template cast<T>(), ctx);
  std::vector<std::pair<int, int>> pairs = target.adj.undirected_edges();
  std::vector<int> labels(pairs.size(), 1);
  pairs.insert(pairs.end(), negatives.pairs.begin(), negatives.pairs.end());
  labels.resize(pairs.size(), 0);
  return tape.bce_from_scores(edge_scores(tape, bundle, emb, pairs, ctx), labels);
}

/// Autoencoder-style reconstruction: encode on the clean adjacency, score
/// true edges against sampled non-edges.
template <typename T>
Tensor<T> gae_edge_loss(Tape<T>& tape, const ModelBundle<T>& bundle, const Graph& target,
                        const EdgeSet& negatives, const ForwardCtx& ctx) {
  validate_edge_set(negatives, target.num_nodes);
  for (const auto& [u, v] : negatives.pairs)
    if (target.adj.has_edge(u, v))
      throw std::invalid_argument("negative edge overlaps existing edge");
  Tensor<T> emb = bundle.encode(tape, target.adj, target.features.template cast<T>(), ctx);
  std::vector<std::pair<int, int>> pairs = target.adj.undirected_edges();
  std::vector<int> labels(pairs.size(), 1);
  pairs.insert(pairs.end(), negatives.pairs.begin(), negatives.pairs.end());
  labels.resize(pairs.size(), 0);
  return tape.bce_from_scores(edge_scores(tape, bundle, emb, pairs, ctx), labels);
}

/// Removes a random fraction of edges from the message-passing graph and
/// predicts them against an equal count of sampled non-edges. The split is
/// drawn from `rng`, so it changes every call.
template <typename T>
Tensor<T> linkpred_edge_loss(Tape<T>& tape, const ModelBundle<T>& bundle, const Graph& target,
                             double holdout_fraction, std::mt19937& rng, const ForwardCtx& ctx) {
  if (holdout_fraction <= 0 || holdout_fraction >= 1)
    throw std::invalid_argument("linkpred: holdout fraction must lie in (0,1)");
  std::vector<std::pair<int, int>> edges = target.adj.undirected_edges();
  const std::size_t holdout =
      static_cast<std::size_t>(std::llround(holdout_fraction * static_cast<double>(edges.size())));
  if (holdout == 0) throw std::runtime_error("linkpred: holdout produced an empty positive set");
  std::shuffle(edges.begin(), edges.end(), rng);
  std::vector<std::pair<int, int>> held(edges.begin(), edges.begin() + holdout);
  std::vector<std::pair<int, int>> kept(edges.begin() + holdout, edges.end());
  Csr message_adj = build_csr(target.num_nodes, kept);
  Tensor<T> emb = bundle.encode(tape, message_adj, target.features.template cast<T>(), ctx);
  EdgeSet negatives = sample_negative_edges(target, holdout, rng());
  std::vector<std::pair<int, int>> pairs = held;
  std::vector<int> labels(pairs.size(), 1);
  pairs.insert(pairs.end(), negatives.pairs.begin(), negatives.pairs.end());
  labels.resize(pairs.size(), 0);
  return tape.bce_from_scores(edge_scores(tape, bundle, emb, pairs, ctx), labels);
}

namespace detail {

inline std::vector<int> mask_rows(const std::vector<std::uint8_t>& mask) {
  std::vector<int> rows;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) rows.push_back(static_cast<int>(i));
  return rows;
}

}  // namespace detail

template <typename T>
std::vector<int> predict_labels(const ModelBundle<T>& bundle, const Graph& g) {
  Tape<T> tape;
  ForwardCtx ctx = eval_ctx();
  Tensor<T> emb = bundle.encode(tape, g.adj, g.features.template cast<T>(), ctx);
  Tensor<T> logits = classify(tape, bundle, emb, ctx);
  tape.clear();
  std::vector<int> preds(g.num_nodes);
  for (int i = 0; i < g.num_nodes; ++i)
    preds[i] = argmax_row(logits.value().data() + static_cast<std::size_t>(i) * logits.cols(),
                          logits.cols());
  return preds;
}

/// Accuracy over the given rows, skipping unlabeled nodes and nodes whose
/// true label equals exclude_class (-1 disables exclusion).
template <typename T>
double accuracy_over_rows(const ModelBundle<T>& bundle, const Graph& g,
                          const std::vector<int>& rows, int exclude_class = -1) {
  std::vector<int> preds = predict_labels(bundle, g);
  std::size_t correct = 0, counted = 0;
  for (int r : rows) {
    if (r < 0 || r >= g.num_nodes) throw std::invalid_argument("evaluation row out of range");
    if (g.labels[r] == kUnlabeled || g.labels[r] == exclude_class) continue;
    ++counted;
    if (preds[r] == g.labels[r]) ++correct;
  }
  if (counted == 0) throw std::runtime_error("empty evaluation set");
  return static_cast<double>(correct) / static_cast<double>(counted);
}

template <typename T>
double evaluate_during_training(const ModelBundle<T>& bundle, const Graph& g,
                                const std::vector<std::uint8_t>& mask, int exclude_class = -1) {
  if (mask.size() != static_cast<std::size_t>(g.num_nodes))
    throw std::invalid_argument("evaluation mask length mismatch");
  std::vector<int> rows = detail::mask_rows(mask);
  if (rows.empty()) throw std::runtime_error("empty evaluation set");
  return accuracy_over_rows(bundle, g, rows, exclude_class);
}

/// Joint loop: every epoch builds the auxiliary edge loss on the target,
/// then the classification loss on the clean source adjacency, and takes a
/// single optimizer step on cls + lambda * edge. With edge_task none the
/// loop is plain ERM and consumes no edge-related randomness, so it matches
/// a reference ERM loop draw for draw at equal seed.
template <typename T = float>
std::pair<ModelBundle<T>, TrainHistory> train(const Graph& source, const Graph& target,
                                              const TrainConfig& cfg) {
  validate_train_config(cfg);
  validate_graph(source);
  validate_graph(target);
  if (source.train_mask.empty()) throw std::invalid_argument("train: source has no train mask");
  std::vector<int> train_rows = detail::mask_rows(source.train_mask);
  if (train_rows.empty()) throw std::invalid_argument("train: empty train mask");
  for (int r : train_rows)
    if (source.labels.empty() || source.labels[r] == kUnlabeled)
      throw std::invalid_argument("train: unlabeled node under train mask");
  if (cfg.mode == TrainMode::transductive) {
    if (&source != &target)
      throw std::invalid_argument("train: transductive mode requires source and target to be the same graph");
    if (!source.test_mask.empty())
      for (int i = 0; i < source.num_nodes; ++i)
        if (source.train_mask[i] && source.test_mask[i])
          throw std::invalid_argument("train: transductive masks overlap");
  }

  ModelSpec spec = cfg.model;
  if (spec.in_dim == 0) spec.in_dim = source.feature_dim();
  if (spec.num_classes == 0) spec.num_classes = source.num_classes;
  if (spec.in_dim != source.feature_dim())
    throw std::invalid_argument("train: model in_dim does not match source features");
  if (target.feature_dim() != spec.in_dim)
    throw std::invalid_argument("train: target feature dimension differs from source");
  if (spec.num_classes != source.num_classes)
    throw std::invalid_argument("train: model num_classes does not match source");

  std::mt19937 rng(cfg.seed);
  ModelBundle<T> bundle(spec, rng);
  std::vector<Tensor<T>> params = bundle.parameters();
  Optimizer<T> opt(cfg.optimizer, static_cast<T>(cfg.learning_rate),
                   static_cast<T>(cfg.weight_decay));

  const bool has_edge = cfg.edge_task != EdgeTask::none;
  const std::size_t num_negatives = target.adj.num_undirected_edges();
  if (has_edge && cfg.edge_task != EdgeTask::linkpred && num_negatives == 0)
    throw std::invalid_argument("train: target graph has no edges for the edge task");
  EdgeSet fixed_negatives;
  if (has_edge && cfg.edge_task != EdgeTask::linkpred &&
      cfg.negatives_per_epoch == NegativesMode::fixed)
    fixed_negatives = sample_negative_edges(target, num_negatives, rng());

  TrainHistory history;
  history.epochs.reserve(cfg.epochs);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Tape<T> tape;
    ForwardCtx ctx{true, cfg.dropout_p, &rng};
    Tensor<T> edge_loss;
    if (cfg.edge_task == EdgeTask::det || cfg.edge_task == EdgeTask::gae) {
      EdgeSet negatives = cfg.negatives_per_epoch == NegativesMode::fixed
                              ? fixed_negatives
                              : sample_negative_edges(target, num_negatives, rng());
      edge_loss = cfg.edge_task == EdgeTask::det
                      ? det_edge_loss(tape, bundle, target, negatives, ctx)
                      : gae_edge_loss(tape, bundle, target, negatives, ctx);
    } else if (cfg.edge_task == EdgeTask::linkpred) {
      edge_loss = linkpred_edge_loss(tape, bundle, target, cfg.linkpred_holdout_fraction, rng, ctx);
    }
    Tensor<T> emb = bundle.encode(tape, source.adj, source.features.template cast<T>(), ctx);
    Tensor<T> logits = classify(tape, bundle, emb, ctx);
    Tensor<T> cls_loss = tape.cross_entropy_onehot(logits, source.labels, train_rows);
    Tensor<T> total =
        has_edge ? tape.add(cls_loss, tape.scale(edge_loss, static_cast<T>(cfg.edge_loss_weight)))
                 : cls_loss;
    tape.backward(total);
    opt.step(params);

    EpochRecord rec;
    rec.cls_loss = static_cast<double>(cls_loss.scalar());
    rec.edge_loss = has_edge ? static_cast<double>(edge_loss.scalar()) : 0.0;
    rec.total_loss = static_cast<double>(total.scalar());
    if (cfg.eval_every > 0 && (epoch + 1) % cfg.eval_every == 0 && !source.val_mask.empty()) {
      std::vector<int> val_rows = detail::mask_rows(source.val_mask);
      if (!val_rows.empty()) rec.val_acc = accuracy_over_rows(bundle, source, val_rows);
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    history.epochs.push_back(rec);
  }
  return {bundle, history};
}

}  // namespace gda
