#pragma once

#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "gda/checkpoint.hpp"
#include "gda/config.hpp"
#include "gda/diagnostics.hpp"
#include "gda/gradcheck.hpp"
#include "gda/graph_io.hpp"
#include "gda/sbm.hpp"
#include "gda/trainer.hpp"

namespace gda {

struct GraphStats {
  std::string name;
  int nodes = 0;
  std::size_t edges = 0;
  double avg_degree = 0;
  double dummy_fraction = 0;
  Mat<double> label_connectivity;
};

inline GraphStats graph_stats(const std::string& name, const Graph& g, int exclude_class) {
  GraphStats s;
  s.name = name;
  s.nodes = g.num_nodes;
  s.edges = g.num_edges();
  s.avg_degree = g.num_nodes ? 2.0 * static_cast<double>(s.edges) / g.num_nodes : 0.0;
  if (exclude_class >= 0 && g.has_labels()) {
    int dummy = 0;
    for (int y : g.labels)
      if (y == exclude_class) ++dummy;
    s.dummy_fraction = static_cast<double>(dummy) / g.num_nodes;
  }
  bool fully_labeled = g.has_labels();
  for (int y : g.labels)
    if (y == kUnlabeled) fully_labeled = false;
  if (fully_labeled) s.label_connectivity = label_connectivity_matrix(g);
  return s;
}

inline void print_stats(std::ostream& out, const std::vector<GraphStats>& stats) {
  out << "graph      nodes   edges   avg_degree  dummy_fraction\n";
  for (const auto& s : stats) {
    out << std::left << std::setw(10) << s.name << ' ' << std::setw(7) << s.nodes << ' '
        << std::setw(7) << s.edges << ' ' << std::setw(11) << std::setprecision(4) << s.avg_degree
        << ' ' << std::setprecision(4) << s.dummy_fraction << '\n';
  }
  for (const auto& s : stats) {
    if (s.label_connectivity.rows == 0) continue;
    out << "label connectivity (" << s.name << "), row-normalized edge mass:\n";
    for (std::size_t r = 0; r < s.label_connectivity.rows; ++r) {
      out << " ";
      for (std::size_t c = 0; c < s.label_connectivity.cols; ++c)
        out << ' ' << std::setw(8) << std::setprecision(4) << s.label_connectivity(r, c);
      out << '\n';
    }
  }
  out.copyfmt(std::ios(nullptr));
}

struct GenerateResult {
  std::vector<std::string> paths;
  std::vector<GraphStats> stats;
};

inline GenerateResult cmd_generate(const RunConfig& cfg, const std::string& out_dir,
                                   std::ostream& log) {
  std::filesystem::create_directories(out_dir);
  GenerateResult res;
  if (cfg.dataset == "sbm") {
    SbmSpec spec;
    spec.block_sizes = cfg.block_sizes;
    spec.block_probs = cfg.block_probs;
    spec.feature_means = cfg.feature_means;
    spec.feature_noise_sigma = cfg.noise_sigma;
    spec.seed = cfg.data_seed;
    const Graph g = generate_sbm(spec);
    const std::string path = (std::filesystem::path(out_dir) / "graph.graph").string();
    save_graph(g, path);
    res.paths.push_back(path);
    res.stats.push_back(graph_stats("graph", g, cfg.exclude_class));
  } else {
    const auto [source, target] = make_dataset(cfg);
    const std::string sp = (std::filesystem::path(out_dir) / "source.graph").string();
    const std::string tp = (std::filesystem::path(out_dir) / "target.graph").string();
    save_graph(source, sp);
    save_graph(target, tp);
    res.paths = {sp, tp};
    res.stats.push_back(graph_stats("source", source, cfg.exclude_class));
    res.stats.push_back(graph_stats("target", target, cfg.exclude_class));
  }
  print_stats(log, res.stats);
  for (const auto& p : res.paths) log << "wrote " << p << '\n';
  return res;
}

struct TrainSummary {
  std::vector<double> per_seed_accuracy;
  double mean_accuracy = 0;
  double std_accuracy = 0;
  std::string run_dir;
};

namespace detail {

inline nlohmann::json json_exclude(int exclude_class) {
  return exclude_class >= 0 ? nlohmann::json(exclude_class) : nlohmann::json(nullptr);
}

}  // namespace detail

/// Runs one training per seed into <out>/<run_name>/seed_<k>/ and writes
/// summary.json only after every seed finished, so an interrupted run is
/// recognizable by the missing summary.
inline TrainSummary cmd_train(const RunConfig& cfg, const std::string& out_dir, int threads,
                              std::ostream& log) {
  if (threads < 1) throw std::invalid_argument("threads must be at least 1");
  const auto dataset = make_dataset(cfg);
  const Graph& source = dataset.first;
  const Graph& target = cfg.train.mode == TrainMode::transductive ? dataset.first : dataset.second;

  const std::filesystem::path run_dir = std::filesystem::path(out_dir) / cfg.run_name;
  std::filesystem::create_directories(run_dir);

  std::vector<double> accs(cfg.seeds.size(), 0.0);
  std::vector<std::exception_ptr> errors(cfg.seeds.size());

  auto run_seed = [&](std::size_t i) {
    try {
      TrainConfig tc = cfg.train;
      tc.seed = cfg.seeds[i];
      const std::filesystem::path seed_dir = run_dir / ("seed_" + std::to_string(cfg.seeds[i]));
      std::filesystem::create_directories(seed_dir);
      auto [bundle, history] = train<float>(source, target, tc);
      const double acc = target_accuracy(bundle, target, cfg.exclude_class);
      accs[i] = acc;
      write_history_csv(history, (seed_dir / "history.csv").string());
      save_checkpoint(bundle, (seed_dir / "model.ckpt").string());
      nlohmann::json metrics = {{"seed", cfg.seeds[i]},
                                {"accuracy", acc},
                                {"excluded_class", detail::json_exclude(cfg.exclude_class)},
                                {"final_cls_loss", history.epochs.back().cls_loss},
                                {"final_edge_loss", history.epochs.back().edge_loss},
                                {"final_total_loss", history.epochs.back().total_loss}};
      std::ofstream mo(seed_dir / "metrics.json", std::ios::binary);
      mo << metrics.dump(2) << '\n';
      double secs = 0;
      for (const auto& e : history.epochs) secs += e.seconds;
      std::ofstream lo(seed_dir / "train.log", std::ios::binary);
      lo << "epochs=" << history.epochs.size() << " wall_seconds=" << secs << '\n';
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  for (std::size_t base = 0; base < cfg.seeds.size(); base += threads) {
    std::vector<std::thread> pool;
    for (std::size_t i = base; i < std::min(base + threads, cfg.seeds.size()); ++i)
      pool.emplace_back(run_seed, i);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  TrainSummary summary;
  summary.per_seed_accuracy = accs;
  summary.run_dir = run_dir.string();
  for (double a : accs) summary.mean_accuracy += a;
  summary.mean_accuracy /= static_cast<double>(accs.size());
  if (accs.size() > 1) {
    double ss = 0;
    for (double a : accs) ss += (a - summary.mean_accuracy) * (a - summary.mean_accuracy);
    summary.std_accuracy = std::sqrt(ss / static_cast<double>(accs.size() - 1));
  }

  nlohmann::json sj = {{"run_name", cfg.run_name},
                       {"seeds", cfg.seeds},
                       {"per_seed_accuracy", summary.per_seed_accuracy},
                       {"mean_accuracy", summary.mean_accuracy},
                       {"std_accuracy", summary.std_accuracy},
                       {"excluded_class", detail::json_exclude(cfg.exclude_class)},
                       {"config_echo", cfg.echo}};
  std::ofstream so(run_dir / "summary.json", std::ios::binary);
  so << sj.dump(2) << '\n';

  log << "run " << cfg.run_name << ": mean_accuracy=" << summary.mean_accuracy
      << " std=" << summary.std_accuracy << " over " << accs.size() << " seeds\n";
  return summary;
}

inline double cmd_eval(const std::string& ckpt_path, const std::string& graph_path,
                       int exclude_class, const std::string& out_dir, std::ostream& log) {
  const ModelBundle<double> bundle = load_checkpoint<double>(ckpt_path);
  const Graph g = load_graph(graph_path);
  const double acc = target_accuracy(bundle, g, exclude_class);
  nlohmann::json metrics = {{"accuracy", acc},
                            {"excluded_class", detail::json_exclude(exclude_class)},
                            {"checkpoint", ckpt_path},
                            {"graph", graph_path}};
  log << metrics.dump(2) << '\n';
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream mo(std::filesystem::path(out_dir) / "eval_metrics.json", std::ios::binary);
    mo << metrics.dump(2) << '\n';
  }
  return acc;
}

inline nlohmann::json bound_report_to_json(const BoundReport& r) {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : r.components)
    comps.push_back({{"component_id", c.component_id},
                     {"size", c.size},
                     {"anchor", c.anchor},
                     {"anchor_disagreement", c.anchor_disagreement},
                     {"k_avg", c.k_avg},
                     {"lhs_estimate", c.lhs_estimate},
                     {"rhs_estimate", c.rhs_estimate}});
  return {{"xi1", r.xi1},
          {"xi2", r.xi2},
          {"l1", r.l1},
          {"l2", r.l2},
          {"l1_degenerate", r.l1_degenerate},
          {"l2_degenerate", r.l2_degenerate},
          {"disagreement_rate", r.disagreement_rate},
          {"rhs_estimate", r.rhs_estimate},
          {"telescope_checked", r.telescope_checked},
          {"telescope_violations", r.telescope_violations},
          {"telescope_max_slack", r.telescope_max_slack},
          {"components", comps}};
}

/// Loads a trained bundle, obtains the two heads (from a second checkpoint
/// when given, otherwise refit on the frozen encoder), and writes the bound
/// report plus a target embedding dump.
inline BoundReport cmd_diagnose(const RunConfig& cfg, const std::string& ckpt_path,
                                const std::string& g2_ckpt_path, const std::string& out_dir,
                                std::ostream& log) {
  const ModelBundle<double> bundle = load_checkpoint<double>(ckpt_path);
  const auto dataset = make_dataset(cfg);
  const Graph& source = dataset.first;
  const Graph& target = cfg.train.mode == TrainMode::transductive ? dataset.first : dataset.second;

  Mlp2<double> g1, g2;
  if (!g2_ckpt_path.empty()) {
    g1 = bundle.classifier;
    g2 = load_checkpoint<double>(g2_ckpt_path).classifier;
  } else {
    HeadFitConfig fit;
    fit.epochs = cfg.head_fit_epochs;
    fit.learning_rate = cfg.head_fit_lr;
    std::tie(g1, g2) = fit_bound_heads(bundle, source, target, fit);
  }
  const BoundReport report = bound_report(bundle, g1, g2, target, cfg.xi2);

  std::filesystem::create_directories(out_dir);
  nlohmann::json rj = bound_report_to_json(report);
  rj["proxy_a_distance"] =
      proxy_a_distance(encode_frozen(bundle, source), encode_frozen(bundle, target), 0);
  std::ofstream ro(std::filesystem::path(out_dir) / "bound_report.json", std::ios::binary);
  ro << rj.dump(2) << '\n';
  export_embeddings(bundle, target, (std::filesystem::path(out_dir) / "embeddings.csv").string());

  log << "bound report: lhs=" << report.disagreement_rate << " rhs=" << report.rhs_estimate
      << " xi1=" << report.xi1 << " telescope_violations=" << report.telescope_violations << '\n';
  return report;
}

struct GradCheckOutcome {
  GradCheckReport report;
  double tolerance = 0;
  bool passed = false;
};

/// Presets build a deterministic fp64 objective (no dropout, fixed
/// negatives) and compare analytic gradients with central differences.
inline GradCheckOutcome cmd_gradcheck(const std::string& preset, double tolerance,
                                      std::ostream& log) {
  std::mt19937 rng(42);

  auto small_graph = [&rng](int blocks, int per_block, double p_in, double p_out,
                            std::uint32_t seed) {
    SbmSpec spec;
    spec.block_sizes.assign(blocks, per_block);
    spec.block_probs = Mat<double>(blocks, blocks, p_out);
    for (int b = 0; b < blocks; ++b) spec.block_probs(b, b) = p_in;
    spec.feature_means = Mat<double>(blocks, 6);
    for (int b = 0; b < blocks; ++b)
      for (int j = 0; j < 6; ++j) spec.feature_means(b, j) = (b == j % blocks) ? 1.0 : 0.0;
    spec.feature_noise_sigma = 0.4;
    spec.seed = seed;
    Graph g = generate_sbm(spec);
    g.train_mask.assign(g.num_nodes, 1);
    return g;
  };

  GradCheckOutcome outcome;
  double default_tol = 1e-5;

  if (preset == "mlp") {
    default_tol = 1e-6;
    Mlp2<double> mlp(8, 16, 4, rng);
    Mat<double> x(12, 8);
    for (auto& v : x.v) v = 2.0 * uniform01(rng) - 1.0;
    std::vector<int> labels(12);
    for (auto& y : labels) y = uniform_below(rng, 4);
    std::vector<int> all_rows(12);
    std::iota(all_rows.begin(), all_rows.end(), 0);
    std::vector<Tensor<double>> params;
    mlp.collect(params);
    auto forward = [mlp, x, labels, all_rows](Tape<double>& tape) {
      Tensor<double> logits = mlp.forward(tape, Tensor<double>::from_mat(x), eval_ctx());
      return tape.cross_entropy_onehot(logits, labels, all_rows);
    };
    outcome.report = finite_difference_check(params, forward);
  } else if (preset == "sage") {
    const Graph g = small_graph(3, 10, 0.5, 0.1, 11);
    ModelSpec spec;
    spec.encoder = EncoderKind::sage;
    spec.in_dim = g.feature_dim();
    spec.hidden_dim = 12;
    spec.num_layers = 3;
    spec.num_classes = g.num_classes;
    spec.classifier_hidden = 10;
    spec.link_hidden = 10;
    ModelBundle<double> bundle(spec, rng);
    std::vector<int> rows = detail::mask_rows(g.train_mask);
    std::vector<Tensor<double>> params = bundle.parameters();
    auto forward = [bundle, &g, rows](Tape<double>& tape) {
      Tensor<double> emb = bundle.encode(tape, g.adj, g.features, eval_ctx());
      Tensor<double> logits = classify(tape, bundle, emb, eval_ctx());
      return tape.cross_entropy_onehot(logits, g.labels, rows);
    };
    outcome.report = finite_difference_check(params, forward);
  } else if (preset == "full") {
    const Graph src = small_graph(2, 10, 0.5, 0.15, 21);
    const Graph tgt = small_graph(2, 10, 0.4, 0.2, 22);
    ModelSpec spec;
    spec.encoder = EncoderKind::sage;
    spec.in_dim = src.feature_dim();
    spec.hidden_dim = 10;
    spec.num_layers = 3;
    spec.num_classes = src.num_classes;
    spec.classifier_hidden = 10;
    spec.link_hidden = 8;
    ModelBundle<double> bundle(spec, rng);
    const EdgeSet negatives =
        sample_negative_edges(tgt, tgt.adj.num_undirected_edges(), 123u);
    std::vector<int> rows = detail::mask_rows(src.train_mask);
    std::vector<Tensor<double>> params = bundle.parameters();
    auto forward = [bundle, &src, &tgt, negatives, rows](Tape<double>& tape) {
      Tensor<double> edge = det_edge_loss(tape, bundle, tgt, negatives, eval_ctx());
      Tensor<double> emb = bundle.encode(tape, src.adj, src.features, eval_ctx());
      Tensor<double> logits = classify(tape, bundle, emb, eval_ctx());
      Tensor<double> cls = tape.cross_entropy_onehot(logits, src.labels, rows);
      return tape.add(cls, edge);
    };
    outcome.report = finite_difference_check(params, forward);
  } else {
    throw std::invalid_argument("unknown gradcheck preset: " + preset +
                                " (expected mlp, sage, or full)");
  }

  outcome.tolerance = tolerance > 0 ? tolerance : default_tol;
  outcome.passed = outcome.report.max_rel_error < outcome.tolerance;
  log << "gradcheck " << preset << ": max_rel_error=" << outcome.report.max_rel_error << " over "
      << outcome.report.coords_checked << " coords, tolerance=" << outcome.tolerance << " -> "
      << (outcome.passed ? "pass" : "FAIL") << '\n';
  return outcome;
}

}  // namespace gda
