#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qppo/autograd.hpp"
#include "qppo/circuits.hpp"
#include "qppo/envs.hpp"
#include "qppo/nn.hpp"

namespace qppo::ppo {

enum class ScheduleMode { Fixed, ExpDecay };

// lr_t = (lr_start - lr_end) / 2^(t / half_life) + lr_end
struct LrSchedule {
  ScheduleMode mode = ScheduleMode::Fixed;
  double lr_start = 2.5e-3;
  double lr_end = 0.0;
  double half_life = 1.0;  // timesteps
};

double lr_at(const LrSchedule& schedule, double t);

struct HyperParams {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double max_grad_norm = 0.5;
  double adam_eps = 1e-5;
  int epochs = 4;
  int minibatches = 4;
  int n_envs = 4;
  int rollout_steps = 128;
  double critic_lr = 2.5e-4;
  // Group learning rates; the actor rate is replaced per update when the
  // schedule decays. Local input scaling is tied to the actor rate, global
  // input scaling uses the output-scaling rate.
  double output_scaling_lr = 5e-3;

  int batch_size() const { return n_envs * rollout_steps; }
  int minibatch_size() const { return batch_size() / minibatches; }
};

// Backward GAE recursion with bootstrap masked across dones;
// returns[t] = advantages[t] + values[t]. Arrays are [steps][envs] row-major,
// next_values holds the bootstrap value per environment.
struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};
GaeResult compute_gae(std::span<const double> rewards, std::span<const std::uint8_t> dones,
                      std::span<const double> values, std::span<const double> next_values,
                      int steps, int envs, double gamma, double gae_lambda);

// One minibatch of flattened rollout data viewed by index.
struct MinibatchView {
  std::span<const double> advantages;  // raw, normalized inside the loss
  std::span<const double> old_logprobs;
  std::span<const double> old_values;
  std::span<const double> returns;
};

struct LossParts {
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double combined = 0.0;
};

// Normalizes advantages over the minibatch (population std + 1e-8 guard).
std::vector<double> normalize_advantages(std::span<const double> advantages);

// Per-sample clipped-surrogate term and its derivative w.r.t. new_logp.
struct PolicySample {
  double loss;
  double d_new_logp;
};
PolicySample policy_sample(double adv_norm, double old_logp, double new_logp, double clip);

// Per-sample clipped value-loss term (0.5 * max of squared errors) and its
// derivative w.r.t. the new value.
struct ValueSample {
  double loss;
  double d_new_value;
};
ValueSample value_sample(double old_value, double new_value, double ret, double clip);

// Combined loss for a minibatch given fresh policy evaluations. Throws
// std::domain_error when the result is non-finite.
LossParts ppo_loss(const MinibatchView& minibatch, std::span<const double> new_logprobs,
                   std::span<const double> entropies, std::span<const double> new_values,
                   const HyperParams& hp);

struct ActionSample {
  int action;
  double logprob;
  double entropy;
};
// Categorical draw by inverse CDF; entropy uses 0*log(0) = 0.
ActionSample sample_action(std::span<const double> probs, Rng& rng);
double categorical_entropy(std::span<const double> probs);

// log(max(p, 1e-12)); the floor keeps plain-head zeros finite.
double safe_logprob(double p);

// dLoss_sample/dprobs for the policy + entropy terms of the combined loss,
// given d_new_logp from policy_sample. Shared by the trainer and the
// gradient-gate tests.
std::vector<double> policy_entropy_upstream(std::span<const double> probs, int action,
                                            double d_new_logp, double entropy_coef);

// --- training -------------------------------------------------------------

struct VqcActorSpec {
  circuits::CircuitConfig config;
  nn::InitStrategy init = nn::InitStrategy::Standard;
};

struct MlpActorSpec {
  std::vector<int> hidden = {3};
};

using ActorSpec = std::variant<VqcActorSpec, MlpActorSpec>;

struct TrainSpec {
  envs::EnvId env = envs::EnvId::FrozenLake;
  ActorSpec actor = VqcActorSpec{};
  HyperParams hp;
  LrSchedule schedule;
  long total_timesteps = 150000;
  std::uint64_t seed = 1;
};

struct TrainRecord {
  long timestep = 0;
  double raw_return = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double lr_actor = 0.0;
  double lr_scaling = 0.0;
  double beta = 0.0;  // mean over beta entries, 0 when output scaling is off
};

struct TrainingLog {
  std::vector<TrainRecord> records;  // records[0] is the pre-training row at t=0
  std::optional<std::string> abort_reason;  // set when a numeric failure stopped training
};

// Fisher-Yates permutation of [0, n); each epoch's minibatches partition it.
std::vector<int> shuffled_indices(int n, Rng& rng);

int actor_parameter_count(const ActorSpec& spec, envs::EnvId env);

TrainingLog train(const TrainSpec& spec);

}  // namespace qppo::ppo
