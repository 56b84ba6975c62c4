// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. --skip-long skips the Cart Pole long-run (criterion 7) for quick
// local iterations; ctest runs everything.

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>
#include <vector>

#include "loss_gate.hpp"
#include "oracles.hpp"
#include "qppo/circuits.hpp"
#include "qppo/envs.hpp"
#include "qppo/experiment.hpp"
#include "qppo/nn.hpp"
#include "qppo/ppo.hpp"
#include "qppo/qsim.hpp"
#include "qppo/rng.hpp"

using namespace qppo;
namespace fs = std::filesystem;

namespace {

int g_jobs = 2;

struct Outcome {
  bool passed = true;
  std::string details;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void report(int id, const std::string& name, const Outcome& outcome, double seconds) {
  std::ostringstream line;
  line << "criterion " << id << " [" << (outcome.passed ? "PASS" : "FAIL") << "] " << name;
  if (!outcome.details.empty()) line << ": " << outcome.details;
  line.precision(1);
  line << std::fixed << " (" << seconds << " s)";
  std::cout << line.str() << std::endl;
}

// --- shared helpers ---------------------------------------------------------

std::vector<ppo::TrainingLog> train_seeds(const ppo::TrainSpec& base,
                                          const std::vector<std::uint64_t>& seeds) {
  std::vector<ppo::TrainingLog> logs(seeds.size());
  std::mutex m;
  std::size_t next = 0;
  auto worker = [&]() {
    for (;;) {
      std::size_t k;
      {
        std::lock_guard<std::mutex> lock(m);
        if (next >= seeds.size()) return;
        k = next++;
      }
      ppo::TrainSpec spec = base;
      spec.seed = seeds[k];
      logs[k] = ppo::train(spec);
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < std::min<int>(g_jobs, static_cast<int>(seeds.size())); ++w) {
    pool.emplace_back(worker);
  }
  for (auto& t : pool) t.join();
  return logs;
}

// first timestep at which the smoothed return reaches the threshold, or -1
long first_crossing(const ppo::TrainingLog& log, double alpha, double threshold) {
  std::vector<double> raw;
  for (const auto& r : log.records) raw.push_back(r.raw_return);
  const auto smoothed = lab::ewma(raw, alpha);
  for (std::size_t i = 0; i < smoothed.size(); ++i) {
    if (smoothed[i] >= threshold) return log.records[i].timestep;
  }
  return -1;
}

int seeds_reaching(const std::vector<ppo::TrainingLog>& logs, double alpha, double threshold,
                   long within) {
  int count = 0;
  for (const auto& log : logs) {
    const long t = first_crossing(log, alpha, threshold);
    if (t >= 0 && t <= within) ++count;
  }
  return count;
}

double mean_auc(const std::vector<ppo::TrainingLog>& logs) {
  double total = 0.0;
  for (const auto& log : logs) total += lab::learning_curve_auc(log);
  return total / static_cast<double>(logs.size());
}

ppo::TrainSpec fl_qppo_spec(bool reuploading, circuits::ScalingMode output_scaling,
                            double scaling_lr, ppo::LrSchedule schedule, long timesteps) {
  ppo::TrainSpec spec;
  spec.env = envs::EnvId::FrozenLake;
  ppo::VqcActorSpec actor;
  actor.config = circuits::CircuitConfig::frozen_lake(circuits::Architecture::Standard,
                                                      output_scaling);
  actor.config.data_reuploading = reuploading;
  actor.init = nn::InitStrategy::Standard;
  spec.actor = actor;
  spec.schedule = schedule;
  spec.hp.output_scaling_lr = scaling_lr;
  spec.total_timesteps = timesteps;
  return spec;
}

const ppo::LrSchedule kFlExpDecay{ppo::ScheduleMode::ExpDecay, 1e-2, 1e-4, 25000};
const std::vector<std::uint64_t> kSeeds = {1, 2, 3};

// --- criteria ---------------------------------------------------------------

Outcome criterion1_gradient_gate() {
  struct Draw {
    loss_gate::Setup setup;
    std::uint64_t seed;
  };
  std::vector<Draw> draws;

  auto vqc_setup = [](circuits::Architecture arch, int variant) {
    loss_gate::Setup setup;
    ppo::VqcActorSpec actor;
    if (arch == circuits::Architecture::Standard && variant % 3 == 2) {
      // cover angle encoding and input scaling through the standard ansatz
      actor.config = circuits::CircuitConfig::cart_pole(circuits::ScalingMode::Local,
                                                        circuits::ScalingMode::Global);
      setup.env = envs::EnvId::CartPole;
    } else {
      const auto out_scaling = variant % 3 == 0 ? circuits::ScalingMode::Global
                              : variant % 3 == 1 ? circuits::ScalingMode::Local
                                                 : circuits::ScalingMode::None;
      actor.config = circuits::CircuitConfig::frozen_lake(arch, out_scaling);
      setup.env = envs::EnvId::FrozenLake;
    }
    setup.actor = actor;
    // two draws per kind run the full-size critic, the rest a thin one
    const bool full_critic = variant < 2;
    const int in = setup.env == envs::EnvId::FrozenLake ? 16 : 4;
    setup.critic_sizes = full_critic ? std::vector<int>{in, 64, 64, 1}
                                     : std::vector<int>{in, 16, 1};
    return setup;
  };

  std::uint64_t seed = 90001;
  for (const auto arch : {circuits::Architecture::Standard, circuits::Architecture::Koelle,
                          circuits::Architecture::Jerbi}) {
    for (int variant = 0; variant < 20; ++variant) {
      draws.push_back({vqc_setup(arch, variant), seed++});
    }
  }
  for (int variant = 0; variant < 20; ++variant) {
    loss_gate::Setup setup;
    if (variant % 2 == 0) {
      setup.actor = ppo::MlpActorSpec{{3}};
      setup.env = envs::EnvId::FrozenLake;
      setup.critic_sizes = variant < 2 ? std::vector<int>{16, 64, 64, 1}
                                       : std::vector<int>{16, 16, 1};
    } else {
      setup.actor = ppo::MlpActorSpec{{5, 5}};
      setup.env = envs::EnvId::CartPole;
      setup.critic_sizes = variant < 2 ? std::vector<int>{4, 64, 64, 1}
                                       : std::vector<int>{4, 16, 1};
    }
    draws.push_back({setup, seed++});
  }

  std::vector<double> errors(draws.size(), 0.0);
  std::mutex m;
  std::size_t next = 0;
  auto worker = [&]() {
    for (;;) {
      std::size_t k;
      {
        std::lock_guard<std::mutex> lock(m);
        if (next >= draws.size()) return;
        k = next++;
      }
      Rng rng(draws[k].seed);
      errors[k] = loss_gate::gate_once(draws[k].setup, 4, rng);
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < g_jobs; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  double worst = 0.0;
  for (double e : errors) worst = std::max(worst, e);
  Outcome outcome;
  outcome.passed = worst < 1e-4;
  std::ostringstream details;
  details << draws.size() << " draws, max relative error " << worst;
  outcome.details = details.str();
  return outcome;
}

Outcome criterion2_simulator_oracle() {
  Rng rng(424242);
  const std::vector<int> all = {0, 1, 2, 3};
  double worst_expval = 0.0, worst_norm = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n_gates = 20 + rng.uniform_int(61);
    const auto gates = oracles::random_circuit(4, n_gates, rng);
    const auto fast = qsim::run_circuit(gates, 4, all);
    const auto dense = oracles::dense_run(gates, 4, all);
    for (int m = 0; m < 4; ++m) {
      worst_expval = std::max(worst_expval, std::abs(fast[m] - dense.expvals[m]));
    }
    qsim::StateVector state = qsim::new_state(4);
    for (const auto& g : gates) qsim::apply_gate_in_place(state, g);
    worst_norm = std::max(worst_norm, std::abs(qsim::norm_sq(state) - 1.0));
  }
  Outcome outcome;
  outcome.passed = worst_expval < 1e-10 && worst_norm < 1e-10;
  std::ostringstream details;
  details << "1000 circuits, max |expval error| " << worst_expval << ", max |norm - 1| "
          << worst_norm;
  outcome.details = details.str();
  return outcome;
}

Outcome criterion3_paper_constants() {
  Outcome outcome;
  std::ostringstream details;

  const std::vector<double> expvals = {-1.0, 1.0};
  const std::vector<double> beta1 = {1.0};
  const std::vector<double> beta2 = {2.0};
  const auto p1 = circuits::probs_softmax(expvals, beta1);
  const auto p2 = circuits::probs_softmax(expvals, beta2);
  const bool softmax_ok = std::abs(p1[0] - 0.119) < 0.001 && std::abs(p1[1] - 0.881) < 0.001 &&
                          std::abs(p2[0] - 0.018) < 0.001 && std::abs(p2[1] - 0.982) < 0.001;

  const int count4 = circuits::count_parameters(
      circuits::CircuitConfig::cart_pole(circuits::ScalingMode::Local,
                                         circuits::ScalingMode::Global, 4));
  const int count5 = circuits::count_parameters(
      circuits::CircuitConfig::cart_pole(circuits::ScalingMode::Local,
                                         circuits::ScalingMode::Global, 5));
  const bool counts_ok = count4 == 65 && count5 == 81;

  envs::FrozenLake lake;
  lake.reset(0);
  double optimal = 0.0;
  for (int action : {envs::FrozenLake::Down, envs::FrozenLake::Down, envs::FrozenLake::Right,
                     envs::FrozenLake::Down, envs::FrozenLake::Right, envs::FrozenLake::Right}) {
    optimal += lake.step(action).reward;
  }
  envs::FrozenLake hole;
  hole.reset(0);
  double fall = hole.step(envs::FrozenLake::Down).reward;
  fall += hole.step(envs::FrozenLake::Right).reward;
  const bool env_ok = std::abs(optimal - 0.95) < 1e-9 && std::abs(fall + 0.22) < 1e-9;

  outcome.passed = softmax_ok && counts_ok && env_ok;
  details << "softmax (" << p1[0] << ", " << p1[1] << ") / (" << p2[0] << ", " << p2[1]
          << "), params " << count4 << "/" << count5 << ", returns " << optimal << "/" << fall;
  outcome.details = details.str();
  return outcome;
}

struct FlProducts {
  std::vector<ppo::TrainingLog> qppo_expdecay;  // reused by criteria 5 and 6
};

Outcome criterion4_fl_learning(FlProducts& products) {
  ppo::TrainSpec classical;
  classical.env = envs::EnvId::FrozenLake;
  classical.actor = ppo::MlpActorSpec{{3}};  // 67 parameters
  classical.schedule = ppo::LrSchedule{ppo::ScheduleMode::Fixed, 1e-2, 0, 1};
  classical.total_timesteps = 30208;
  const auto classical_logs = train_seeds(classical, kSeeds);
  const int classical_hits = seeds_reaching(classical_logs, 0.3, 0.9, 30000);

  const auto qppo = fl_qppo_spec(true, circuits::ScalingMode::Global, 5e-3, kFlExpDecay, 75264);
  products.qppo_expdecay = train_seeds(qppo, kSeeds);
  const int qppo_hits = seeds_reaching(products.qppo_expdecay, 0.3, 0.9, 75000);

  Outcome outcome;
  outcome.passed = classical_hits >= 2 && qppo_hits >= 2;
  std::ostringstream details;
  details << "classical " << classical_hits << "/3 seeds within 30k, qppo " << qppo_hits
          << "/3 seeds within 75k";
  outcome.details = details.str();
  return outcome;
}

Outcome criterion5_ablation_ordering(const FlProducts& products) {
  const auto no_reup =
      fl_qppo_spec(false, circuits::ScalingMode::Global, 1e-3, kFlExpDecay, 75264);
  const auto no_reup_logs = train_seeds(no_reup, kSeeds);

  const auto no_scale =
      fl_qppo_spec(true, circuits::ScalingMode::None, 5e-3, kFlExpDecay, 75264);
  const auto no_scale_logs = train_seeds(no_scale, kSeeds);

  const double auc_full = mean_auc(products.qppo_expdecay);
  const double auc_no_reup = mean_auc(no_reup_logs);
  const double auc_no_scale = mean_auc(no_scale_logs);

  Outcome outcome;
  outcome.passed = auc_full > auc_no_reup && auc_full > auc_no_scale;
  std::ostringstream details;
  details << "auc full " << auc_full << " vs no-reuploading " << auc_no_reup
          << " vs no-output-scaling " << auc_no_scale;
  outcome.details = details.str();
  return outcome;
}

Outcome criterion6_lr_schedule(const FlProducts& products) {
  const double auc_decay = mean_auc(products.qppo_expdecay);
  double best_fixed = -1e9;
  double best_rate = 0.0;
  for (const double lr : {1e-2, 2.5e-3, 1e-4}) {
    const auto spec = fl_qppo_spec(true, circuits::ScalingMode::Global, 5e-3,
                                   ppo::LrSchedule{ppo::ScheduleMode::Fixed, lr, 0, 1}, 75264);
    const double auc = mean_auc(train_seeds(spec, kSeeds));
    if (auc > best_fixed) {
      best_fixed = auc;
      best_rate = lr;
    }
  }
  Outcome outcome;
  outcome.passed = auc_decay >= best_fixed;
  std::ostringstream details;
  details << "exp-decay auc " << auc_decay << " vs best fixed " << best_fixed << " (lr "
          << best_rate << ")";
  outcome.details = details.str();
  return outcome;
}

Outcome criterion7_cart_pole() {
  ppo::TrainSpec qppo;
  qppo.env = envs::EnvId::CartPole;
  ppo::VqcActorSpec actor;
  actor.config =
      circuits::CircuitConfig::cart_pole(circuits::ScalingMode::None,
                                         circuits::ScalingMode::Global);
  actor.init = nn::InitStrategy::Small;
  qppo.actor = actor;
  qppo.schedule = ppo::LrSchedule{ppo::ScheduleMode::ExpDecay, 2.5e-3, 1e-4, 100000};
  qppo.hp.output_scaling_lr = 2e-4;
  qppo.total_timesteps = 500224;
  const auto qppo_logs = train_seeds(qppo, kSeeds);
  const int qppo_hits = seeds_reaching(qppo_logs, 0.015, 400.0, 500224);

  ppo::TrainSpec classical;
  classical.env = envs::EnvId::CartPole;
  classical.actor = ppo::MlpActorSpec{{6, 6}};  // 86 parameters
  classical.schedule = ppo::LrSchedule{ppo::ScheduleMode::Fixed, 1e-4, 0, 1};
  classical.total_timesteps = 500224;
  const auto classical_logs = train_seeds(classical, kSeeds);
  const int classical_hits = seeds_reaching(classical_logs, 0.015, 475.0, 500224);

  Outcome outcome;
  outcome.passed = qppo_hits >= 2 && classical_hits >= 2;
  std::ostringstream details;
  details << "qppo " << qppo_hits << "/3 seeds >= 400, classical " << classical_hits
          << "/3 seeds >= 475";
  outcome.details = details.str();
  return outcome;
}

Outcome criterion8_determinism() {
  const nlohmann::json config_json = {
      {"name", "determinism_probe"},
      {"environment", "frozen_lake"},
      {"actor", {{"kind", "vqc"}, {"output_scaling", "global"}, {"n_layers", 2}}},
      {"schedule", {{"mode", "exp_decay"}}},
      {"seeds", {7, 8}},
      {"total_timesteps", 1024},
      {"output_dir", "determinism_probe"},
  };
  const auto config = lab::ExperimentConfig::from_json(config_json);
  const fs::path root =
      fs::temp_directory_path() / ("qppo_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const auto first = lab::run(config, root / "a", g_jobs);
  const auto second = lab::run(config, root / "b", g_jobs);

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
  };
  bool identical = first.seed_csvs.size() == second.seed_csvs.size();
  for (std::size_t i = 0; identical && i < first.seed_csvs.size(); ++i) {
    identical = slurp(first.seed_csvs[i]) == slurp(second.seed_csvs[i]);
  }
  identical = identical && slurp(first.aggregate_csv) == slurp(second.aggregate_csv);
  fs::remove_all(root);

  Outcome outcome;
  outcome.passed = identical;
  outcome.details = identical ? "reruns byte-identical" : "rerun CSVs differ";
  return outcome;
}

Outcome criterion9_invariants() {
  Rng rng(777);
  std::vector<std::string> failures;

  // simplex outputs for both heads
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> expvals(4);
    for (double& c : expvals) c = rng.uniform(-1.0, 1.0);
    for (const auto& probs :
         {circuits::probs_plain(expvals),
          circuits::probs_softmax(expvals, std::vector<double>{rng.uniform(-2.0, 3.0)})}) {
      double sum = 0.0;
      for (double p : probs) {
        if (p < 0.0) failures.push_back("negative probability");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-12) failures.push_back("probs do not sum to 1");
    }
  }
  // softmax argmax invariance for beta > 0
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> expvals(4);
    for (double& c : expvals) c = rng.uniform(-1.0, 1.0);
    const auto probs = circuits::probs_softmax(expvals, std::vector<double>{rng.uniform(0.01, 5.0)});
    if (std::max_element(expvals.begin(), expvals.end()) - expvals.begin() !=
        std::max_element(probs.begin(), probs.end()) - probs.begin()) {
      failures.push_back("softmax argmax changed");
    }
  }
  // remap range
  for (int trial = 0; trial < 1000; ++trial) {
    const double angle = circuits::remap_weight(rng.uniform(-80.0, 80.0));
    if (angle <= -std::numbers::pi || angle >= std::numbers::pi) {
      failures.push_back("remap out of range");
    }
  }
  // encoding 2pi-periodicity of expvals
  {
    const auto config = circuits::CircuitConfig::frozen_lake();
    circuits::CircuitParams params;
    params.theta = nn::init_params(circuits::theta_count(config), nn::InitStrategy::Standard, rng);
    const Obs obs = {13, 0, 0, 0};
    const auto base = circuits::build_actor_circuit(
        config, params, circuits::encoded_angles(config, params, obs));
    const auto reference = qsim::run_circuit(base.gates, 4, config.measured_wires);
    for (std::size_t g = 0; g < base.gates.size(); ++g) {
      if (base.sources[g].role != circuits::AngleRole::Encoding) continue;
      auto shifted = base.gates;
      shifted[g].angle += 2.0 * std::numbers::pi;
      const auto moved = qsim::run_circuit(shifted, 4, config.measured_wires);
      for (int m = 0; m < 4; ++m) {
        if (std::abs(moved[m] - reference[m]) > 1e-10) failures.push_back("2pi periodicity");
      }
    }
  }
  // GAE gamma = 0 reduction
  {
    const int steps = 16, envs_n = 4;
    std::vector<double> rewards(steps * envs_n), values(steps * envs_n), next_values(envs_n);
    std::vector<std::uint8_t> dones(steps * envs_n);
    for (auto& r : rewards) r = rng.uniform(-1, 1);
    for (auto& v : values) v = rng.uniform(-1, 1);
    for (auto& n : next_values) n = rng.uniform(-1, 1);
    for (auto& d : dones) d = rng.uniform() < 0.2;
    const auto out = ppo::compute_gae(rewards, dones, values, next_values, steps, envs_n, 0.0, 0.95);
    for (int i = 0; i < steps * envs_n; ++i) {
      if (std::abs(out.advantages[i] - (rewards[i] - values[i])) > 1e-12) {
        failures.push_back("gae gamma=0");
      }
    }
  }
  // minibatch partition completeness
  for (int trial = 0; trial < 5; ++trial) {
    auto perm = ppo::shuffled_indices(512, rng);
    std::sort(perm.begin(), perm.end());
    for (int i = 0; i < 512; ++i) {
      if (perm[i] != i) failures.push_back("partition incomplete");
    }
  }
  // EWMA identities
  {
    const std::vector<double> series = {0.0, 1.0};
    if (lab::ewma(series, 0.3)[1] != 0.3) failures.push_back("ewma recursion");
    const std::vector<double> constant(16, 0.4);
    for (double v : lab::ewma(constant, 0.7)) {
      if (std::abs(v - 0.4) > 1e-12) failures.push_back("ewma constant");
    }
    std::vector<double> x(32);
    for (double& v : x) v = rng.uniform(-2, 2);
    const auto identity = lab::ewma(x, 1.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (identity[i] != x[i]) failures.push_back("ewma alpha=1");
    }
  }

  Outcome outcome;
  outcome.passed = failures.empty();
  if (failures.empty()) {
    outcome.details = "simplex, argmax, remap range, periodicity, gae, partition, ewma";
  } else {
    outcome.details = failures.front() + " (+" + std::to_string(failures.size() - 1) + " more)";
  }
  return outcome;
}

}  // namespace

int main(int argc, char** argv) {
  bool skip_long = false;
  g_jobs = std::max(2u, std::thread::hardware_concurrency());
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--skip-long") == 0) skip_long = true;
    if (std::strcmp(argv[i], "--jobs") == 0 && i + 1 < argc) g_jobs = std::atoi(argv[++i]);
  }

  int failures = 0;
  auto run_criterion = [&](int id, const std::string& name, auto&& fn) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = fn();
    } catch (const std::exception& e) {
      outcome.passed = false;
      outcome.details = std::string("exception: ") + e.what();
    }
    report(id, name, outcome, seconds_since(start));
    if (!outcome.passed) ++failures;
  };

  FlProducts products;
  run_criterion(1, "combined-loss gradients vs finite differences", criterion1_gradient_gate);
  run_criterion(2, "statevector simulator vs dense Kronecker oracle",
                criterion2_simulator_oracle);
  run_criterion(3, "published constants (softmax, parameter counts, returns)",
                criterion3_paper_constants);
  run_criterion(4, "frozen lake learning thresholds",
                [&]() { return criterion4_fl_learning(products); });
  run_criterion(5, "ablation ordering by learning-curve AUC",
                [&]() { return criterion5_ablation_ordering(products); });
  run_criterion(6, "exponential decay vs fixed learning rates",
                [&]() { return criterion6_lr_schedule(products); });
  if (skip_long) {
    std::cout << "criterion 7 [SKIP] cart pole long-run (--skip-long)" << std::endl;
  } else {
    run_criterion(7, "cart pole learning thresholds", criterion7_cart_pole);
  }
  run_criterion(8, "byte-identical reruns", criterion8_determinism);
  run_criterion(9, "invariant suite", criterion9_invariants);

  std::cout << (failures == 0 ? "acceptance: all criteria passed"
                              : "acceptance: " + std::to_string(failures) + " criteria FAILED")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
