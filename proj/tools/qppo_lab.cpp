#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qppo/experiment.hpp"

namespace fs = std::filesystem;

namespace {

fs::path output_root(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("QPPO_OUTPUT_ROOT")) return env;
  return "runs";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QPPO experiment runner: train, compare and sweep PPO agents with "
               "quantum-circuit or MLP actors"};
  app.require_subcommand(1);

  std::string root_flag;
  app.add_option("--output-root", root_flag,
                 "Root directory for run artifacts (default: $QPPO_OUTPUT_ROOT or ./runs)");
  int jobs = 1;
  app.add_option("-j,--jobs", jobs, "Seeds trained in parallel")->check(CLI::PositiveNumber);

  std::string run_config;
  auto* run_cmd = app.add_subcommand("run", "Train every seed of one experiment config");
  run_cmd->add_option("config", run_config, "Experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);

  std::vector<std::string> compare_dirs;
  std::string compare_out;
  auto* compare_cmd = app.add_subcommand("compare", "Overlay completed runs of one environment");
  compare_cmd->add_option("runs", compare_dirs, "Run directories (>= 2)")->required();
  compare_cmd->add_option("-o,--out", compare_out, "Output directory (default: <root>/compare)");

  std::string sweep_config, sweep_param;
  std::vector<std::string> sweep_values;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run one config over a list of parameter values");
  sweep_cmd->add_option("config", sweep_config, "Experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  sweep_cmd->add_option("--param", sweep_param, "Dotted parameter path, e.g. schedule.lr_start")
      ->required();
  sweep_cmd->add_option("--values", sweep_values, "Values to sweep")->required()->delimiter(',');

  CLI11_PARSE(app, argc, argv);
  const fs::path root = output_root(root_flag);

  try {
    if (*run_cmd) {
      const auto config = qppo::lab::ExperimentConfig::from_file(run_config);
      const auto artifacts = qppo::lab::run(config, root, jobs);
      std::cout << "run complete: " << artifacts.run_dir.string() << "\n";
      for (const auto& csv : artifacts.seed_csvs) std::cout << "  " << csv.string() << "\n";
      std::cout << "  " << artifacts.aggregate_csv.string() << "\n"
                << "  " << artifacts.plot_svg.string() << "\n";
      for (const auto& failure : artifacts.failures) {
        std::cerr << "seed failure: " << failure << "\n";
      }
      return artifacts.failures.empty() ? 0 : 2;
    }
    if (*compare_cmd) {
      std::vector<fs::path> dirs(compare_dirs.begin(), compare_dirs.end());
      const fs::path out = compare_out.empty() ? root / "compare" : fs::path(compare_out);
      const auto artifacts = qppo::lab::compare(dirs, out);
      std::cout << "compare complete:\n  " << artifacts.plot_svg.string() << "\n  "
                << artifacts.summary_csv.string() << "\n";
      return 0;
    }
    if (*sweep_cmd) {
      std::ifstream in(sweep_config);
      nlohmann::json base;
      in >> base;
      const auto dirs = qppo::lab::sweep(base, sweep_param, sweep_values, root, jobs);
      std::cout << "sweep complete:\n";
      for (const auto& dir : dirs) std::cout << "  " << dir.string() << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
