#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gda/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"graph domain adaptation trainer and diagnostics"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", ckpt_path, g2_ckpt_path, graph_path;
  std::string preset = "full";
  int threads = 1;
  long long seed_override = -1;
  int exclude_class = -1;
  double tolerance = 0;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* c = cmd->add_option("--config", config_path, "JSON config file");
    if (needs_config) c->required();
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--seed", seed_override, "override the config seed list with one seed");
    cmd->add_option("--threads", threads, "parallel seed workers")->check(CLI::PositiveNumber);
  };

  CLI::App* generate = app.add_subcommand("generate", "write dataset files");
  add_common(generate, true);

  CLI::App* train = app.add_subcommand("train", "run seeded trainings");
  add_common(train, true);

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a graph file");
  add_common(eval, false);
  eval->add_option("--ckpt", ckpt_path, "model checkpoint")->required();
  eval->add_option("--graph", graph_path, "graph file")->required();
  eval->add_option("--exclude-class", exclude_class, "class excluded from accuracy");

  CLI::App* diagnose = app.add_subcommand("diagnose", "bound report and embedding dump");
  add_common(diagnose, true);
  diagnose->add_option("--ckpt", ckpt_path, "trained model checkpoint")->required();
  diagnose->add_option("--g2-ckpt", g2_ckpt_path,
                       "second checkpoint whose classifier serves as g2 (default: refit heads)");

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
  gradcheck->add_option("--preset", preset, "mlp, sage, or full");
  gradcheck->add_option("--tol", tolerance, "max relative error to accept");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gradcheck->parsed()) {
      const gda::GradCheckOutcome outcome = gda::cmd_gradcheck(preset, tolerance, std::cout);
      return outcome.passed ? 0 : 1;
    }

    gda::RunConfig cfg;
    if (!config_path.empty()) cfg = gda::load_run_config(config_path);
    if (seed_override >= 0) cfg.seeds = {static_cast<std::uint32_t>(seed_override)};

    if (generate->parsed()) {
      gda::cmd_generate(cfg, out_dir, std::cout);
    } else if (train->parsed()) {
      gda::cmd_train(cfg, out_dir, threads, std::cout);
    } else if (eval->parsed()) {
      gda::cmd_eval(ckpt_path, graph_path, exclude_class, out_dir, std::cout);
    } else if (diagnose->parsed()) {
      gda::cmd_diagnose(cfg, ckpt_path, g2_ckpt_path, out_dir, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
