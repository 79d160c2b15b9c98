#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gda/graph_io.hpp"
#include "gda/sbm.hpp"
#include "gda/trainer.hpp"

namespace gda {

/// One flat JSON document drives every subcommand. Unknown keys are hard
/// errors so a misspelled hyperparameter cannot silently fall back to a
/// default.
struct RunConfig {
  std::string run_name = "run";
  std::string dataset = "threeclass";  // threeclass | sbm | files

  // threeclass generator
  double delta = 0.5;
  std::array<int, 3> class_sizes{300, 300, 300};
  double p_in = 0.05;
  double p_12_target = 0.05;
  int feature_dim = 8;
  double noise_sigma = 0.3;
  std::uint32_t data_seed = 7;

  // single-graph sbm generator
  std::vector<int> block_sizes;
  Mat<double> block_probs;
  Mat<double> feature_means;

  // pre-generated files
  std::string source_path;
  std::string target_path;

  TrainConfig train;
  std::vector<std::uint32_t> seeds{0, 1, 2};
  int exclude_class = -1;
  double xi2 = 0.1;
  int head_fit_epochs = 300;
  double head_fit_lr = 0.01;

  nlohmann::json echo;  // the document this config was parsed from
};

namespace detail {

inline Mat<double> mat_from_json(const nlohmann::json& j, const std::string& key) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw std::invalid_argument("config: " + key + " must be a 2-d array");
  Mat<double> m(j.size(), j[0].size());
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (j[r].size() != m.cols) throw std::invalid_argument("config: ragged rows in " + key);
    for (std::size_t c = 0; c < m.cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "run_name",        "dataset",
      "delta",           "class_sizes",
      "p_in",            "p_12_target",
      "feature_dim",     "noise_sigma",
      "data_seed",       "block_sizes",
      "block_probs",     "feature_means",
      "source_path",     "target_path",
      "encoder",         "hidden_dim",
      "num_layers",      "sign_hops",
      "classifier_hidden", "link_hidden",
      "epochs",          "learning_rate",
      "weight_decay",    "dropout",
      "edge_task",       "edge_loss_weight",
      "negatives",       "linkpred_holdout_fraction",
      "optimizer",       "mode",
      "eval_every",      "repeat",
      "seeds",           "exclude_class",
      "xi2",             "head_fit_epochs",
      "head_fit_lr"};
  if (!j.is_object()) throw std::invalid_argument("config: top level must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw std::invalid_argument("config: unknown key \"" + key + "\"");

  RunConfig cfg;
  cfg.echo = j;
  auto get = [&j](const char* key, auto fallback) {
    using V = decltype(fallback);
    return j.contains(key) ? j.at(key).get<V>() : fallback;
  };

  cfg.run_name = get("run_name", cfg.run_name);
  cfg.dataset = get("dataset", cfg.dataset);
  if (cfg.dataset != "threeclass" && cfg.dataset != "sbm" && cfg.dataset != "files")
    throw std::invalid_argument("config: dataset must be threeclass, sbm, or files");

  cfg.delta = get("delta", cfg.delta);
  if (j.contains("class_sizes")) {
    const auto sizes = j.at("class_sizes").get<std::vector<int>>();
    if (sizes.size() != 3) throw std::invalid_argument("config: class_sizes needs 3 entries");
    std::copy(sizes.begin(), sizes.end(), cfg.class_sizes.begin());
  }
  cfg.p_in = get("p_in", cfg.p_in);
  cfg.p_12_target = get("p_12_target", cfg.p_12_target);
  cfg.feature_dim = get("feature_dim", cfg.feature_dim);
  cfg.noise_sigma = get("noise_sigma", cfg.noise_sigma);
  cfg.data_seed = get("data_seed", cfg.data_seed);

  if (j.contains("block_sizes")) cfg.block_sizes = j.at("block_sizes").get<std::vector<int>>();
  if (j.contains("block_probs")) cfg.block_probs = detail::mat_from_json(j.at("block_probs"), "block_probs");
  if (j.contains("feature_means"))
    cfg.feature_means = detail::mat_from_json(j.at("feature_means"), "feature_means");
  if (cfg.dataset == "sbm" && cfg.block_sizes.empty())
    throw std::invalid_argument("config: dataset sbm requires block_sizes/block_probs/feature_means");

  cfg.source_path = get("source_path", cfg.source_path);
  cfg.target_path = get("target_path", cfg.target_path);
  if (cfg.dataset == "files") {
    if (cfg.source_path.empty() || cfg.target_path.empty())
      throw std::invalid_argument("config: dataset files requires source_path and target_path");
    for (const std::string& p : {cfg.source_path, cfg.target_path})
      if (!std::filesystem::exists(p))
        throw std::invalid_argument("config: referenced path does not exist: " + p);
  }

  if (j.contains("encoder")) cfg.train.model.encoder = parse_encoder_kind(j.at("encoder").get<std::string>());
  cfg.train.model.hidden_dim = get("hidden_dim", cfg.train.model.hidden_dim);
  cfg.train.model.num_layers = get("num_layers", cfg.train.model.num_layers);
  cfg.train.model.sign_hops = get("sign_hops", cfg.train.model.sign_hops);
  cfg.train.model.classifier_hidden = get("classifier_hidden", cfg.train.model.classifier_hidden);
  cfg.train.model.link_hidden = get("link_hidden", cfg.train.model.link_hidden);

  cfg.train.epochs = get("epochs", cfg.train.epochs);
  cfg.train.learning_rate = get("learning_rate", cfg.train.learning_rate);
  cfg.train.weight_decay = get("weight_decay", cfg.train.weight_decay);
  cfg.train.dropout_p = get("dropout", cfg.train.dropout_p);
  if (j.contains("edge_task")) cfg.train.edge_task = parse_edge_task(j.at("edge_task").get<std::string>());
  cfg.train.edge_loss_weight = get("edge_loss_weight", cfg.train.edge_loss_weight);
  if (j.contains("negatives")) {
    const std::string neg = j.at("negatives").get<std::string>();
    if (neg == "resample")
      cfg.train.negatives_per_epoch = NegativesMode::resample_each_epoch;
    else if (neg == "fixed")
      cfg.train.negatives_per_epoch = NegativesMode::fixed;
    else
      throw std::invalid_argument("config: negatives must be resample or fixed");
  }
  cfg.train.linkpred_holdout_fraction = get("linkpred_holdout_fraction", cfg.train.linkpred_holdout_fraction);
  if (j.contains("optimizer")) cfg.train.optimizer = parse_opt_kind(j.at("optimizer").get<std::string>());
  if (j.contains("mode")) {
    const std::string m = j.at("mode").get<std::string>();
    if (m == "two_graph")
      cfg.train.mode = TrainMode::two_graph;
    else if (m == "transductive")
      cfg.train.mode = TrainMode::transductive;
    else
      throw std::invalid_argument("config: mode must be two_graph or transductive");
  }
  cfg.train.eval_every = get("eval_every", cfg.train.eval_every);

  if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint32_t>>();
  if (j.contains("repeat")) {
    const int repeat = j.at("repeat").get<int>();
    if (repeat < 1) throw std::invalid_argument("config: repeat must be at least 1");
    if (j.contains("seeds")) {
      if (static_cast<int>(cfg.seeds.size()) != repeat)
        throw std::invalid_argument("config: seed list length must equal repeat");
    } else {
      cfg.seeds.resize(repeat);
      for (int i = 0; i < repeat; ++i) cfg.seeds[i] = static_cast<std::uint32_t>(i);
    }
  }
  if (cfg.seeds.empty()) throw std::invalid_argument("config: seed list must be nonempty");

  cfg.exclude_class = get("exclude_class", cfg.exclude_class);
  cfg.xi2 = get("xi2", cfg.xi2);
  if (cfg.xi2 <= 0) throw std::invalid_argument("config: xi2 must be positive");
  cfg.head_fit_epochs = get("head_fit_epochs", cfg.head_fit_epochs);
  cfg.head_fit_lr = get("head_fit_lr", cfg.head_fit_lr);

  validate_train_config(cfg.train);
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config parse error in " + path + ": " + e.what());
  }
  return parse_run_config(j);
}

/// Materializes the configured dataset as a (source, target) pair.
inline std::pair<Graph, Graph> make_dataset(const RunConfig& cfg) {
  if (cfg.dataset == "threeclass")
    return generate_threeclass_shift(cfg.delta, cfg.class_sizes, cfg.p_in, cfg.p_12_target,
                                     cfg.data_seed, cfg.feature_dim, cfg.noise_sigma);
  if (cfg.dataset == "files") return {load_graph(cfg.source_path), load_graph(cfg.target_path)};
  throw std::invalid_argument("config: dataset " + cfg.dataset +
                              " cannot be used here (generate-only)");
}

}  // namespace gda
