#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "qppo/ppo.hpp"

namespace qppo::lab {

// One file = one reproducible experiment: environment, actor, hyperparameters,
// schedule and seeds. Unspecified fields resolve to the per-environment
// defaults, and the fully resolved config is echoed into the output directory.
struct ExperimentConfig {
  std::string name;
  ppo::TrainSpec base;  // seed field is overwritten per run
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  double ewma_alpha = 0.3;
  std::string output_dir;

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig from_file(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  int actor_params() const { return ppo::actor_parameter_count(base.actor, base.env); }
};

// y_0 = x_0; y_t = alpha * x_t + (1 - alpha) * y_{t-1}. alpha in (0, 1].
std::vector<double> ewma(std::span<const double> series, double alpha);

struct RunArtifacts {
  std::filesystem::path run_dir;
  std::vector<std::filesystem::path> seed_csvs;
  std::filesystem::path aggregate_csv;
  std::filesystem::path plot_svg;
  std::filesystem::path config_echo;
  std::vector<std::string> failures;  // per-seed abort diagnostics, empty when clean
};

// Trains every seed (optionally in parallel), writes one CSV per seed, the
// cross-seed aggregate, the smoothed mean +/- std plot and the config echo.
RunArtifacts run(const ExperimentConfig& config, const std::filesystem::path& output_root,
                 int jobs = 1);

// Overlay plot + summary table for two or more completed runs of the same
// environment. Throws std::invalid_argument on fewer than two runs or on an
// environment mismatch.
struct CompareArtifacts {
  std::filesystem::path plot_svg;
  std::filesystem::path summary_csv;
};
CompareArtifacts compare(std::span<const std::filesystem::path> run_dirs,
                         const std::filesystem::path& out_dir);

// Sets a dotted path ("schedule.lr_start") in a raw config JSON.
void set_json_path(nlohmann::json& j, const std::string& dotted_path,
                   const nlohmann::json& value);

// Runs the base config once per value of the swept parameter and emits a
// combined comparison; returns the individual run directories.
std::vector<std::filesystem::path> sweep(const nlohmann::json& base_config,
                                         const std::string& param,
                                         std::span<const std::string> values,
                                         const std::filesystem::path& output_root,
                                         int jobs = 1);

// Fixed CSV schema shared by per-seed logs.
inline constexpr const char* kCsvHeader =
    "timestep,raw_return,smoothed_return,policy_loss,value_loss,entropy,"
    "lr_actor,lr_scaling,beta";

void write_seed_csv(const std::filesystem::path& path, const ppo::TrainingLog& log,
                    double alpha);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;
};
CsvTable read_csv(const std::filesystem::path& path);

// Mean AUC of the raw_return column (mean over records), used for
// learning-curve comparisons.
double learning_curve_auc(const ppo::TrainingLog& log);

}  // namespace qppo::lab
