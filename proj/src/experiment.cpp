#include "qppo/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace qppo::lab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// --- enum <-> string --------------------------------------------------------

const std::map<std::string, circuits::Architecture> kArchNames = {
    {"standard", circuits::Architecture::Standard},
    {"koelle", circuits::Architecture::Koelle},
    {"jerbi", circuits::Architecture::Jerbi},
};
const std::map<std::string, circuits::ScalingMode> kScalingNames = {
    {"none", circuits::ScalingMode::None},
    {"global", circuits::ScalingMode::Global},
    {"local", circuits::ScalingMode::Local},
};
const std::map<std::string, nn::InitStrategy> kInitNames = {
    {"standard", nn::InitStrategy::Standard},
    {"small", nn::InitStrategy::Small},
    {"medium", nn::InitStrategy::Medium},
    {"large", nn::InitStrategy::Large},
    {"gaussian", nn::InitStrategy::Gaussian},
    {"clipped_gaussian", nn::InitStrategy::ClippedGaussian},
};

template <typename T>
T lookup(const std::map<std::string, T>& names, const std::string& key,
         const std::string& what) {
  const auto it = names.find(key);
  if (it == names.end()) {
    throw std::invalid_argument("unknown " + what + " '" + key + "'");
  }
  return it->second;
}

template <typename T>
std::string reverse_lookup(const std::map<std::string, T>& names, T value) {
  for (const auto& [k, v] : names) {
    if (v == value) return k;
  }
  return "?";
}

// Per-environment defaults (actor/scaling learning rates, schedule constants,
// smoothing, run length).
struct EnvDefaults {
  double vqc_fixed_lr, mlp_lr, exp_lr_start, exp_lr_end, half_life;
  double global_scaling_lr, local_scaling_lr;
  nn::InitStrategy init;
  long total_timesteps;
  double ewma_alpha;
  std::vector<int> mlp_hidden;
};

EnvDefaults defaults_for(envs::EnvId env) {
  if (env == envs::EnvId::FrozenLake) {
    return {2.5e-3, 1e-2,  1e-2, 1e-4, 25000,
            5e-3,   2.5e-2, nn::InitStrategy::Standard, 150000, 0.3, {3}};
  }
  return {5e-4, 1e-4,  2.5e-3, 1e-4, 100000,
          2e-4, 2e-4, nn::InitStrategy::Small, 500000, 0.015, {5, 5}};
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig config;
  config.name = j.value("name", std::string{"experiment"});

  const std::string env_name = j.value("environment", std::string{"frozen_lake"});
  config.base.env = envs::env_from_name(env_name);
  const EnvDefaults def = defaults_for(config.base.env);

  const json actor = j.value("actor", json::object());
  const std::string kind = actor.value("kind", std::string{"vqc"});
  bool is_vqc = kind == "vqc";
  if (!is_vqc && kind != "mlp") {
    throw std::invalid_argument("actor.kind must be 'vqc' or 'mlp'");
  }

  if (is_vqc) {
    ppo::VqcActorSpec spec;
    const auto arch = lookup(kArchNames, actor.value("architecture", std::string{"standard"}),
                             "architecture");
    const auto in_scale =
        lookup(kScalingNames, actor.value("input_scaling", std::string{"none"}), "scaling mode");
    const auto out_scale = lookup(kScalingNames, actor.value("output_scaling", std::string{"none"}),
                                  "scaling mode");
    if (config.base.env == envs::EnvId::FrozenLake) {
      spec.config = circuits::CircuitConfig::frozen_lake(arch, out_scale);
    } else {
      spec.config = circuits::CircuitConfig::cart_pole(in_scale, out_scale);
    }
    spec.config.input_scaling = in_scale;
    if (actor.contains("n_layers")) spec.config.n_layers = actor.at("n_layers").get<int>();
    spec.config.data_reuploading = actor.value("data_reuploading", true);
    if (actor.contains("final_entanglement")) {
      const std::string fe = actor.at("final_entanglement").get<std::string>();
      if (fe != "full" && fe != "partial") {
        throw std::invalid_argument("final_entanglement must be 'full' or 'partial'");
      }
      spec.config.final_entanglement = fe == "full" ? circuits::FinalEntanglement::Full
                                                    : circuits::FinalEntanglement::Partial;
    }
    spec.init = j.contains("init") ? lookup(kInitNames, j.at("init").get<std::string>(), "init")
                                   : def.init;
    spec.config.validate();
    config.base.actor = spec;
  } else {
    ppo::MlpActorSpec spec;
    spec.hidden = actor.value("hidden", def.mlp_hidden);
    config.base.actor = spec;
  }

  // schedule: fixed at the environment's actor default unless configured
  ppo::LrSchedule schedule;
  schedule.lr_start = is_vqc ? def.vqc_fixed_lr : def.mlp_lr;
  if (j.contains("schedule")) {
    const json& s = j.at("schedule");
    const std::string mode = s.value("mode", std::string{"fixed"});
    if (mode == "exp_decay") {
      schedule.mode = ppo::ScheduleMode::ExpDecay;
      schedule.lr_start = s.value("lr_start", def.exp_lr_start);
      schedule.lr_end = s.value("lr_end", def.exp_lr_end);
      schedule.half_life = s.value("half_life", def.half_life);
    } else if (mode == "fixed") {
      schedule.lr_start = s.value("lr_start", schedule.lr_start);
    } else {
      throw std::invalid_argument("schedule.mode must be 'fixed' or 'exp_decay'");
    }
  }
  config.base.schedule = schedule;

  ppo::HyperParams hp;
  {
    double scaling_lr = def.global_scaling_lr;
    if (is_vqc) {
      const auto& vqc = std::get<ppo::VqcActorSpec>(config.base.actor);
      if (vqc.config.output_scaling == circuits::ScalingMode::Local) {
        scaling_lr = def.local_scaling_lr;
      }
    }
    hp.output_scaling_lr = scaling_lr;
  }
  if (j.contains("hyperparams")) {
    const json& h = j.at("hyperparams");
    hp.gamma = h.value("gamma", hp.gamma);
    hp.gae_lambda = h.value("gae_lambda", hp.gae_lambda);
    hp.clip = h.value("clip", hp.clip);
    hp.value_coef = h.value("value_coef", hp.value_coef);
    hp.entropy_coef = h.value("entropy_coef", hp.entropy_coef);
    hp.max_grad_norm = h.value("max_grad_norm", hp.max_grad_norm);
    hp.adam_eps = h.value("adam_eps", hp.adam_eps);
    hp.epochs = h.value("epochs", hp.epochs);
    hp.minibatches = h.value("minibatches", hp.minibatches);
    hp.n_envs = h.value("n_envs", hp.n_envs);
    hp.rollout_steps = h.value("rollout_steps", hp.rollout_steps);
    hp.critic_lr = h.value("critic_lr", hp.critic_lr);
    hp.output_scaling_lr = h.value("output_scaling_lr", hp.output_scaling_lr);
  }
  config.base.hp = hp;

  config.base.total_timesteps = j.value("total_timesteps", def.total_timesteps);
  config.ewma_alpha = j.value("ewma_alpha", def.ewma_alpha);
  if (config.ewma_alpha <= 0.0 || config.ewma_alpha > 1.0) {
    throw std::invalid_argument("ewma_alpha must be in (0, 1]");
  }
  if (j.contains("seeds")) {
    config.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  }
  if (config.seeds.empty()) throw std::invalid_argument("seeds must not be empty");
  config.output_dir = j.value("output_dir", config.name);
  return config;
}

ExperimentConfig ExperimentConfig::from_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path.string());
  json j;
  in >> j;
  return from_json(j);
}

json ExperimentConfig::to_json() const {
  json j;
  j["name"] = name;
  j["environment"] = envs::env_name(base.env);
  json actor;
  if (const auto* vqc = std::get_if<ppo::VqcActorSpec>(&base.actor)) {
    actor["kind"] = "vqc";
    actor["architecture"] = reverse_lookup(kArchNames, vqc->config.architecture);
    actor["n_layers"] = vqc->config.n_layers;
    actor["input_scaling"] = reverse_lookup(kScalingNames, vqc->config.input_scaling);
    actor["output_scaling"] = reverse_lookup(kScalingNames, vqc->config.output_scaling);
    actor["data_reuploading"] = vqc->config.data_reuploading;
    actor["final_entanglement"] =
        vqc->config.final_entanglement == circuits::FinalEntanglement::Full ? "full" : "partial";
    j["init"] = reverse_lookup(kInitNames, vqc->init);
  } else {
    actor["kind"] = "mlp";
    actor["hidden"] = std::get<ppo::MlpActorSpec>(base.actor).hidden;
  }
  j["actor"] = actor;
  json schedule;
  schedule["mode"] = base.schedule.mode == ppo::ScheduleMode::Fixed ? "fixed" : "exp_decay";
  schedule["lr_start"] = base.schedule.lr_start;
  if (base.schedule.mode == ppo::ScheduleMode::ExpDecay) {
    schedule["lr_end"] = base.schedule.lr_end;
    schedule["half_life"] = base.schedule.half_life;
  }
  j["schedule"] = schedule;
  json h;
  h["gamma"] = base.hp.gamma;
  h["gae_lambda"] = base.hp.gae_lambda;
  h["clip"] = base.hp.clip;
  h["value_coef"] = base.hp.value_coef;
  h["entropy_coef"] = base.hp.entropy_coef;
  h["max_grad_norm"] = base.hp.max_grad_norm;
  h["adam_eps"] = base.hp.adam_eps;
  h["epochs"] = base.hp.epochs;
  h["minibatches"] = base.hp.minibatches;
  h["n_envs"] = base.hp.n_envs;
  h["rollout_steps"] = base.hp.rollout_steps;
  h["critic_lr"] = base.hp.critic_lr;
  h["output_scaling_lr"] = base.hp.output_scaling_lr;
  j["hyperparams"] = h;
  j["seeds"] = seeds;
  j["total_timesteps"] = base.total_timesteps;
  j["ewma_alpha"] = ewma_alpha;
  j["output_dir"] = output_dir;
  j["actor_params"] = actor_params();
  return j;
}

std::vector<double> ewma(std::span<const double> series, double alpha) {
  if (series.empty()) throw std::invalid_argument("ewma: empty series");
  if (alpha <= 0.0 || alpha > 1.0) throw std::invalid_argument("ewma: alpha must be in (0, 1]");
  std::vector<double> out(series.size());
  out[0] = series[0];
  for (std::size_t i = 1; i < series.size(); ++i) {
    out[i] = alpha * series[i] + (1.0 - alpha) * out[i - 1];
  }
  return out;
}

void write_seed_csv(const fs::path& path, const ppo::TrainingLog& log, double alpha) {
  std::vector<double> raw;
  raw.reserve(log.records.size());
  for (const auto& r : log.records) raw.push_back(r.raw_return);
  const auto smoothed = ewma(raw, alpha);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kCsvHeader << "\n";
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    const auto& r = log.records[i];
    out << r.timestep << ',' << fmt(r.raw_return) << ',' << fmt(smoothed[i]) << ','
        << fmt(r.policy_loss) << ',' << fmt(r.value_loss) << ',' << fmt(r.entropy) << ','
        << fmt(r.lr_actor) << ',' << fmt(r.lr_scaling) << ',' << fmt(r.beta) << "\n";
  }
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv " + path.string());
  std::stringstream header(line);
  std::string cell;
  while (std::getline(header, cell, ',')) table.columns.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::vector<double> values;
    while (std::getline(row, cell, ',')) values.push_back(std::stod(cell));
    table.rows.push_back(std::move(values));
  }
  return table;
}

int CsvTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw std::invalid_argument("csv column '" + name + "' missing");
  return static_cast<int>(it - columns.begin());
}

double learning_curve_auc(const ppo::TrainingLog& log) {
  if (log.records.empty()) return 0.0;
  double total = 0.0;
  for (const auto& r : log.records) total += r.raw_return;
  return total / static_cast<double>(log.records.size());
}

// --- SVG plotting -----------------------------------------------------------

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

struct PlotSeries {
  std::string label;
  std::vector<double> x, y, band;  // band may be empty
};

void write_svg_plot(const fs::path& path, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel,
                    std::span<const PlotSeries> series) {
  const double width = 960, height = 560;
  const double ml = 80, mr = 25, mt = 45, mb = 55;

  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double lo = s.band.empty() ? s.y[i] : s.y[i] - s.band[i];
      const double hi = s.band.empty() ? s.y[i] : s.y[i] + s.band[i];
      if (first) {
        xmin = xmax = s.x[i];
        ymin = lo;
        ymax = hi;
        first = false;
      } else {
        xmin = std::min(xmin, s.x[i]);
        xmax = std::max(xmax, s.x[i]);
        ymin = std::min(ymin, lo);
        ymax = std::max(ymax, hi);
      }
    }
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr); };
  auto sy = [&](double y) { return height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb); };

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"25\" text-anchor=\"middle\" font-size=\"16\" "
      << "font-family=\"sans-serif\">" << title << "</text>\n";

  const int n_ticks = 5;
  for (int i = 0; i <= n_ticks; ++i) {
    const double fx = xmin + (xmax - xmin) * i / n_ticks;
    const double fy = ymin + (ymax - ymin) * i / n_ticks;
    out << "<line x1=\"" << fmt(sx(fx)) << "\" y1=\"" << fmt(height - mb) << "\" x2=\""
        << fmt(sx(fx)) << "\" y2=\"" << fmt(height - mb + 5) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << fmt(sx(fx)) << "\" y=\"" << fmt(height - mb + 20)
        << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
        << fmt(fx) << "</text>\n";
    out << "<line x1=\"" << fmt(ml) << "\" y1=\"" << fmt(sy(fy)) << "\" x2=\""
        << fmt(width - mr) << "\" y2=\"" << fmt(sy(fy))
        << "\" stroke=\"#dddddd\" stroke-width=\"0.7\"/>\n";
    out << "<text x=\"" << fmt(ml - 8) << "\" y=\"" << fmt(sy(fy) + 4)
        << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << fmt(fy)
        << "</text>\n";
  }
  out << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr
      << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
      << height - mb << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">" << xlabel
      << "</text>\n";
  out << "<text x=\"18\" y=\"" << height / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" "
      << "transform=\"rotate(-90 18 " << height / 2 << ")\">" << ylabel << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % std::size(kPalette)];
    const auto& ser = series[s];
    if (!ser.band.empty()) {
      out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < ser.x.size(); ++i) {
        out << fmt(sx(ser.x[i])) << ',' << fmt(sy(ser.y[i] + ser.band[i])) << ' ';
      }
      for (std::size_t i = ser.x.size(); i-- > 0;) {
        out << fmt(sx(ser.x[i])) << ',' << fmt(sy(ser.y[i] - ser.band[i])) << ' ';
      }
      out << "\"/>\n";
    }
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\" points=\"";
    for (std::size_t i = 0; i < ser.x.size(); ++i) {
      out << fmt(sx(ser.x[i])) << ',' << fmt(sy(ser.y[i])) << ' ';
    }
    out << "\"/>\n";
    const double ly = mt + 16 + 18 * static_cast<double>(s);
    out << "<line x1=\"" << fmt(width - mr - 190) << "\" y1=\"" << fmt(ly) << "\" x2=\""
        << fmt(width - mr - 160) << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << fmt(width - mr - 152) << "\" y=\"" << fmt(ly + 4)
        << "\" font-size=\"12\" font-family=\"sans-serif\">" << ser.label << "</text>\n";
  }
  out << "</svg>\n";
}

struct Aggregate {
  std::vector<double> timesteps, raw_mean, raw_std, smoothed_mean, smoothed_std;
};

Aggregate aggregate_logs(std::span<const ppo::TrainingLog> logs, double alpha) {
  Aggregate agg;
  if (logs.empty()) return agg;
  const std::size_t rows = logs.front().records.size();
  std::vector<std::vector<double>> smoothed;
  for (const auto& log : logs) {
    std::vector<double> raw;
    raw.reserve(log.records.size());
    for (const auto& r : log.records) raw.push_back(r.raw_return);
    smoothed.push_back(ewma(raw, alpha));
  }
  for (std::size_t i = 0; i < rows; ++i) {
    agg.timesteps.push_back(static_cast<double>(logs.front().records[i].timestep));
    double rm = 0, sm = 0;
    for (std::size_t k = 0; k < logs.size(); ++k) {
      rm += logs[k].records[i].raw_return;
      sm += smoothed[k][i];
    }
    rm /= static_cast<double>(logs.size());
    sm /= static_cast<double>(logs.size());
    double rv = 0, sv = 0;
    for (std::size_t k = 0; k < logs.size(); ++k) {
      rv += (logs[k].records[i].raw_return - rm) * (logs[k].records[i].raw_return - rm);
      sv += (smoothed[k][i] - sm) * (smoothed[k][i] - sm);
    }
    agg.raw_mean.push_back(rm);
    agg.raw_std.push_back(std::sqrt(rv / static_cast<double>(logs.size())));
    agg.smoothed_mean.push_back(sm);
    agg.smoothed_std.push_back(std::sqrt(sv / static_cast<double>(logs.size())));
  }
  return agg;
}

void write_aggregate_csv(const fs::path& path, const Aggregate& agg) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "timestep,raw_mean,raw_std,smoothed_mean,smoothed_std\n";
  for (std::size_t i = 0; i < agg.timesteps.size(); ++i) {
    out << static_cast<long>(agg.timesteps[i]) << ',' << fmt(agg.raw_mean[i]) << ','
        << fmt(agg.raw_std[i]) << ',' << fmt(agg.smoothed_mean[i]) << ','
        << fmt(agg.smoothed_std[i]) << "\n";
  }
}

std::string sanitize(const std::string& raw) {
  std::string out;
  for (char c : raw) {
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  }
  return out;
}

}  // namespace

RunArtifacts run(const ExperimentConfig& config, const fs::path& output_root, int jobs) {
  RunArtifacts artifacts;
  artifacts.run_dir = output_root / config.output_dir;
  fs::create_directories(artifacts.run_dir);

  artifacts.config_echo = artifacts.run_dir / "config.json";
  {
    std::ofstream out(artifacts.config_echo);
    out << config.to_json().dump(2) << "\n";
  }

  const std::size_t n_seeds = config.seeds.size();
  std::vector<std::optional<ppo::TrainingLog>> logs(n_seeds);
  std::vector<std::string> failures(n_seeds);

  auto run_seed = [&](std::size_t k) {
    ppo::TrainSpec spec = config.base;
    spec.seed = config.seeds[k];
    try {
      ppo::TrainingLog log = ppo::train(spec);
      if (log.abort_reason) {
        failures[k] = "seed " + std::to_string(config.seeds[k]) + ": " + *log.abort_reason;
      }
      logs[k] = std::move(log);
    } catch (const std::exception& e) {
      failures[k] = "seed " + std::to_string(config.seeds[k]) + ": " + e.what();
    }
  };

  if (jobs <= 1) {
    for (std::size_t k = 0; k < n_seeds; ++k) run_seed(k);
  } else {
    std::vector<std::thread> pool;
    std::size_t next = 0;
    std::mutex m;
    const int workers = std::min<std::size_t>(jobs, n_seeds);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        for (;;) {
          std::size_t k;
          {
            std::lock_guard<std::mutex> lock(m);
            if (next >= n_seeds) return;
            k = next++;
          }
          run_seed(k);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  std::vector<ppo::TrainingLog> complete;
  for (std::size_t k = 0; k < n_seeds; ++k) {
    if (!failures[k].empty()) {
      artifacts.failures.push_back(failures[k]);
    }
    if (logs[k] && !logs[k]->abort_reason) {
      const fs::path csv =
          artifacts.run_dir / ("seed_" + std::to_string(config.seeds[k]) + ".csv");
      write_seed_csv(csv, *logs[k], config.ewma_alpha);
      artifacts.seed_csvs.push_back(csv);
      complete.push_back(std::move(*logs[k]));
    }
  }

  if (!artifacts.failures.empty()) {
    std::ofstream out(artifacts.run_dir / "failures.txt");
    for (const auto& f : artifacts.failures) out << f << "\n";
  }
  if (complete.empty()) {
    throw std::runtime_error("experiment '" + config.name + "': every seed failed");
  }

  const Aggregate agg = aggregate_logs(complete, config.ewma_alpha);
  artifacts.aggregate_csv = artifacts.run_dir / "aggregate.csv";
  write_aggregate_csv(artifacts.aggregate_csv, agg);

  PlotSeries series;
  series.label = config.name + " (" + std::to_string(config.actor_params()) + ")";
  series.x = agg.timesteps;
  series.y = agg.smoothed_mean;
  series.band = agg.smoothed_std;
  artifacts.plot_svg = artifacts.run_dir / "plot.svg";
  write_svg_plot(artifacts.plot_svg, config.name, "timesteps", "smoothed return",
                 std::vector<PlotSeries>{series});
  return artifacts;
}

CompareArtifacts compare(std::span<const fs::path> run_dirs, const fs::path& out_dir) {
  if (run_dirs.size() < 2) {
    throw std::invalid_argument("compare needs at least two completed runs");
  }
  std::vector<PlotSeries> series;
  std::string environment;
  std::ostringstream summary;
  summary << "name,environment,actor_params,final_smoothed_mean,best_smoothed_mean,auc_raw_mean\n";

  for (const auto& dir : run_dirs) {
    std::ifstream in(dir / "config.json");
    if (!in) throw std::invalid_argument("missing config.json in " + dir.string());
    json j;
    in >> j;
    const std::string env = j.at("environment").get<std::string>();
    if (environment.empty()) {
      environment = env;
    } else if (environment != env) {
      throw std::invalid_argument("cannot compare runs from different environments (" +
                                  environment + " vs " + env + ")");
    }
    const CsvTable agg = read_csv(dir / "aggregate.csv");
    const int ct = agg.column("timestep");
    const int cm = agg.column("smoothed_mean");
    const int cs = agg.column("smoothed_std");
    const int cr = agg.column("raw_mean");

    PlotSeries s;
    s.label = j.at("name").get<std::string>() + " (" +
              std::to_string(j.at("actor_params").get<int>()) + ")";
    double best = 0, auc = 0;
    for (std::size_t r = 0; r < agg.rows.size(); ++r) {
      s.x.push_back(agg.rows[r][ct]);
      s.y.push_back(agg.rows[r][cm]);
      s.band.push_back(agg.rows[r][cs]);
      best = r == 0 ? agg.rows[r][cm] : std::max(best, agg.rows[r][cm]);
      auc += agg.rows[r][cr];
    }
    if (!agg.rows.empty()) auc /= static_cast<double>(agg.rows.size());
    summary << j.at("name").get<std::string>() << ',' << env << ','
            << j.at("actor_params").get<int>() << ',' << fmt(s.y.empty() ? 0.0 : s.y.back())
            << ',' << fmt(best) << ',' << fmt(auc) << "\n";
    series.push_back(std::move(s));
  }

  fs::create_directories(out_dir);
  CompareArtifacts artifacts;
  artifacts.plot_svg = out_dir / "compare.svg";
  write_svg_plot(artifacts.plot_svg, "comparison (" + environment + ")", "timesteps",
                 "smoothed return", series);
  artifacts.summary_csv = out_dir / "summary.csv";
  std::ofstream out(artifacts.summary_csv);
  out << summary.str();
  return artifacts;
}

void set_json_path(json& j, const std::string& dotted_path, const json& value) {
  json* node = &j;
  std::size_t begin = 0;
  for (;;) {
    const std::size_t dot = dotted_path.find('.', begin);
    const std::string key = dotted_path.substr(begin, dot - begin);
    if (key.empty()) throw std::invalid_argument("empty segment in parameter path");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    begin = dot + 1;
  }
}

std::vector<fs::path> sweep(const json& base_config, const std::string& param,
                            std::span<const std::string> values, const fs::path& output_root,
                            int jobs) {
  if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
  std::vector<fs::path> run_dirs;
  const std::string base_name = base_config.value("name", std::string{"experiment"});
  for (const auto& value : values) {
    json j = base_config;
    // hyperparameter sweeps smooth with alpha = 0.05 unless configured
    if (!j.contains("ewma_alpha")) j["ewma_alpha"] = 0.05;
    set_json_path(j, param, json::parse(value, nullptr, false).is_discarded()
                                ? json(value)
                                : json::parse(value));
    const std::string suffix = sanitize(param) + "_" + sanitize(value);
    j["name"] = base_name + "_" + suffix;
    j["output_dir"] = j.value("output_dir", base_name) + "_" + suffix;
    const ExperimentConfig config = ExperimentConfig::from_json(j);
    run_dirs.push_back(run(config, output_root, jobs).run_dir);
  }
  if (run_dirs.size() >= 2) {
    compare(run_dirs, output_root / (base_name + "_sweep_" + sanitize(param)));
  }
  return run_dirs;
}

}  // namespace qppo::lab
