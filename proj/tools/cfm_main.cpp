#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"cfm - first-order solvers for smoothed conic duals of sparse recovery problems"};
  app.require_subcommand(1);

  cfm::cli::Overrides ov;
  std::string config_path;
  std::string figure_id;
  std::vector<std::string> variants;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", ov.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--seed", [&ov](const std::vector<std::string>& v) {
      ov.seed = std::stoull(v.front());
      return true;
    }, "override the config seed");
  };

  CLI::App* solve = app.add_subcommand("solve", "solve a problem file");
  solve->add_option("--config", config_path, "problem JSON file")->required();
  solve->add_option("--variant", [&ov](const std::vector<std::string>& v) {
    ov.variant = v.front();
    return true;
  }, "first-order variant (GRA, N83, TS, AT, LLM, N07)");
  solve->add_option("--mu", [&ov](const std::vector<std::string>& v) {
    ov.mu = std::stod(v.front());
    return true;
  }, "smoothing parameter override");
  solve->add_option("--tol", [&ov](const std::vector<std::string>& v) {
    ov.tol = std::stod(v.front());
    return true;
  }, "stop tolerance override");
  add_common(solve);

  CLI::App* bench = app.add_subcommand("bench", "compare first-order variants on one problem");
  bench->add_option("--config", config_path, "problem JSON file")->required();
  bench->add_option("--variants", variants, "variants to run")->delimiter(',');
  bench->add_option("--mu", [&ov](const std::vector<std::string>& v) {
    ov.mu = std::stod(v.front());
    return true;
  }, "smoothing parameter override");
  bench->add_option("--tol", [&ov](const std::vector<std::string>& v) {
    ov.tol = std::stod(v.front());
    return true;
  }, "stop tolerance override");
  add_common(bench);

  CLI::App* testgen = app.add_subcommand("testgen", "generate an exactly solved instance");
  testgen->add_option("--config", config_path, "generator JSON config")->required();
  add_common(testgen);

  CLI::App* reproduce = app.add_subcommand("reproduce", "emit the data behind a desk-scale figure");
  reproduce->add_option("figure", figure_id, "fig2, fig4, fig5, fig6, fig7 or mc_small")
      ->required();
  add_common(reproduce);

  CLI11_PARSE(app, argc, argv);

  if (solve->parsed()) return cfm::cli::cmd_solve(config_path, ov);
  if (bench->parsed()) return cfm::cli::cmd_bench(config_path, ov, variants);
  if (testgen->parsed()) return cfm::cli::cmd_testgen(config_path, ov);
  if (reproduce->parsed()) return cfm::cli::cmd_reproduce(figure_id, ov);
  return 2;
}
