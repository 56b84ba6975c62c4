#include "qppo/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>

namespace qppo::ppo {

namespace {

constexpr double kTinyProb = 1e-12;

double safe_log(double p) { return std::log(std::max(p, kTinyProb)); }

}  // namespace

double lr_at(const LrSchedule& schedule, double t) {
  if (t < 0) throw std::invalid_argument("lr_at: negative timestep");
  if (schedule.mode == ScheduleMode::Fixed) return schedule.lr_start;
  return (schedule.lr_start - schedule.lr_end) / std::exp2(t / schedule.half_life) +
         schedule.lr_end;
}

GaeResult compute_gae(std::span<const double> rewards, std::span<const std::uint8_t> dones,
                      std::span<const double> values, std::span<const double> next_values,
                      int steps, int envs, double gamma, double gae_lambda) {
  const std::size_t n = static_cast<std::size_t>(steps) * envs;
  if (rewards.size() != n || dones.size() != n || values.size() != n ||
      next_values.size() != static_cast<std::size_t>(envs)) {
    throw std::invalid_argument("compute_gae: array shapes do not match steps x envs");
  }
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  for (int e = 0; e < envs; ++e) {
    double last_gae = 0.0;
    for (int t = steps - 1; t >= 0; --t) {
      const std::size_t i = static_cast<std::size_t>(t) * envs + e;
      const double not_done = dones[i] ? 0.0 : 1.0;
      const double next_value =
          t + 1 < steps ? values[static_cast<std::size_t>(t + 1) * envs + e] : next_values[e];
      const double delta = rewards[i] + gamma * next_value * not_done - values[i];
      last_gae = delta + gamma * gae_lambda * not_done * last_gae;
      out.advantages[i] = last_gae;
      out.returns[i] = last_gae + values[i];
    }
  }
  return out;
}

std::vector<double> normalize_advantages(std::span<const double> advantages) {
  const double n = static_cast<double>(advantages.size());
  double mean = 0.0;
  for (double a : advantages) mean += a;
  mean /= n;
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  const double std_dev = std::sqrt(var / n);
  std::vector<double> out(advantages.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (advantages[i] - mean) / (std_dev + 1e-8);
  }
  return out;
}

PolicySample policy_sample(double adv_norm, double old_logp, double new_logp, double clip) {
  const double ratio = std::exp(new_logp - old_logp);
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
  const double l_unclipped = -adv_norm * ratio;
  const double l_clipped = -adv_norm * clipped;
  PolicySample out{};
  if (l_unclipped >= l_clipped) {
    out.loss = l_unclipped;
    out.d_new_logp = -adv_norm * ratio;
  } else {
    out.loss = l_clipped;
    out.d_new_logp = (ratio > 1.0 - clip && ratio < 1.0 + clip) ? -adv_norm * ratio : 0.0;
  }
  return out;
}

ValueSample value_sample(double old_value, double new_value, double ret, double clip) {
  const double v_clipped = old_value + std::clamp(new_value - old_value, -clip, clip);
  const double err = new_value - ret;
  const double err_clipped = v_clipped - ret;
  ValueSample out{};
  if (err * err >= err_clipped * err_clipped) {
    out.loss = 0.5 * err * err;
    out.d_new_value = err;
  } else {
    out.loss = 0.5 * err_clipped * err_clipped;
    out.d_new_value =
        (new_value - old_value > -clip && new_value - old_value < clip) ? err_clipped : 0.0;
  }
  return out;
}

LossParts ppo_loss(const MinibatchView& minibatch, std::span<const double> new_logprobs,
                   std::span<const double> entropies, std::span<const double> new_values,
                   const HyperParams& hp) {
  const std::size_t n = minibatch.advantages.size();
  if (minibatch.old_logprobs.size() != n || minibatch.old_values.size() != n ||
      minibatch.returns.size() != n || new_logprobs.size() != n || entropies.size() != n ||
      new_values.size() != n) {
    throw std::invalid_argument("ppo_loss: minibatch arrays must share one length");
  }
  const auto adv = normalize_advantages(minibatch.advantages);

  LossParts parts;
  for (std::size_t i = 0; i < n; ++i) {
    parts.policy += policy_sample(adv[i], minibatch.old_logprobs[i], new_logprobs[i], hp.clip).loss;
    parts.value +=
        value_sample(minibatch.old_values[i], new_values[i], minibatch.returns[i], hp.clip).loss;
    parts.entropy += entropies[i];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  parts.policy *= inv_n;
  parts.value *= inv_n;
  parts.entropy *= inv_n;
  parts.combined =
      parts.policy + hp.value_coef * parts.value - hp.entropy_coef * parts.entropy;
  if (!std::isfinite(parts.combined)) {
    throw std::domain_error("ppo_loss: non-finite combined loss");
  }
  return parts;
}

double categorical_entropy(std::span<const double> probs) {
  double entropy = 0.0;
  for (double p : probs) {
    if (p > 0.0) entropy -= p * std::log(p);
  }
  return entropy;
}

ActionSample sample_action(std::span<const double> probs, Rng& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  int action = static_cast<int>(probs.size()) - 1;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cumulative += probs[i];
    if (u < cumulative) {
      action = static_cast<int>(i);
      break;
    }
  }
  return {action, safe_log(probs[action]), categorical_entropy(probs)};
}

double safe_logprob(double p) { return safe_log(p); }

std::vector<double> policy_entropy_upstream(std::span<const double> probs, int action,
                                            double d_new_logp, double entropy_coef) {
  std::vector<double> d_probs(probs.size(), 0.0);
  for (std::size_t j = 0; j < probs.size(); ++j) {
    const double d_entropy = -(safe_log(probs[j]) + 1.0);
    d_probs[j] = -entropy_coef * d_entropy;
  }
  d_probs[action] += d_new_logp / std::max(probs[action], kTinyProb);
  return d_probs;
}

std::vector<int> shuffled_indices(int n, Rng& rng) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  // Fisher-Yates; std::shuffle is implementation-defined.
  for (int i = n - 1; i > 0; --i) {
    std::swap(idx[i], idx[rng.uniform_int(i + 1)]);
  }
  return idx;
}

// --- training internals -----------------------------------------------------

namespace {

std::vector<double> env_features(envs::EnvId env, const Obs& obs, int feature_dim) {
  if (env == envs::EnvId::FrozenLake) {
    std::vector<double> one_hot(feature_dim, 0.0);
    one_hot[static_cast<std::size_t>(std::lround(obs[0]))] = 1.0;
    return one_hot;
  }
  return {obs.begin(), obs.end()};
}

enum class GroupRole { Critic, Actor, InputScaling, OutputScaling };

struct Group {
  GroupRole role;
  std::span<double> values;
  std::span<double> grad;
  nn::AdamState adam;
  double lr = 0.0;
};

struct ActorEval {
  std::vector<double> probs;
  circuits::ActorOutput vqc;   // VQC forward cache
  nn::Mlp::Trace trace;        // MLP forward cache
};

class ActorModel {
 public:
  virtual ~ActorModel() = default;
  virtual ActorEval eval(const Obs& obs) = 0;
  virtual void accumulate(const Obs& obs, const ActorEval& eval,
                          std::span<const double> d_probs, double scale) = 0;
  virtual void append_groups(std::vector<Group>& groups, double adam_eps) = 0;
  virtual double beta_mean() const { return 0.0; }
};

class VqcActor final : public ActorModel {
 public:
  VqcActor(const VqcActorSpec& spec, Rng& rng) : config_(spec.config) {
    config_.validate();
    params_.theta = nn::init_params(circuits::theta_count(config_), spec.init, rng);
    params_.lambda.assign(circuits::lambda_count(config_), 1.0);
    if (!params_.lambda.empty() && config_.encoding == circuits::EncodingMode::AngleCP) {
      // matches the manual rescaling divisors per encoded dimension
      const std::array<double, 4> lambda0 = {1.0 / 4.8, 1.0, 1.0 / 0.418, 1.0};
      for (std::size_t i = 0; i < params_.lambda.size(); ++i) {
        params_.lambda[i] = lambda0[i % 4];
      }
    }
    params_.beta.assign(circuits::beta_count(config_), 1.0);
    grad_ = autograd::VqcGrad::zeros(config_);
  }

  ActorEval eval(const Obs& obs) override {
    ActorEval out;
    out.vqc = circuits::actor_forward(config_, params_, obs);
    out.probs = out.vqc.probs;
    return out;
  }

  void accumulate(const Obs& obs, const ActorEval& eval, std::span<const double> d_probs,
                  double scale) override {
    autograd::accumulate_actor_grad(config_, params_, obs, eval.vqc, d_probs, scale, grad_);
  }

  void append_groups(std::vector<Group>& groups, double adam_eps) override {
    auto add = [&](GroupRole role, std::vector<double>& values, std::vector<double>& grad) {
      if (values.empty()) return;
      Group g{role, values, grad, {}, 0.0};
      g.adam.eps = adam_eps;
      groups.push_back(std::move(g));
    };
    add(GroupRole::Actor, params_.theta, grad_.theta);
    add(GroupRole::InputScaling, params_.lambda, grad_.lambda);
    add(GroupRole::OutputScaling, params_.beta, grad_.beta);
  }

  double beta_mean() const override {
    if (params_.beta.empty()) return 0.0;
    double sum = 0.0;
    for (double b : params_.beta) sum += b;
    return sum / static_cast<double>(params_.beta.size());
  }

  const circuits::CircuitConfig& config() const { return config_; }

 private:
  circuits::CircuitConfig config_;
  circuits::CircuitParams params_;
  autograd::VqcGrad grad_;
};

class MlpActor final : public ActorModel {
 public:
  MlpActor(const MlpActorSpec& spec, int feature_dim, int n_actions, envs::EnvId env,
           Rng& rng)
      : env_(env), feature_dim_(feature_dim) {
    std::vector<int> sizes;
    sizes.push_back(feature_dim);
    sizes.insert(sizes.end(), spec.hidden.begin(), spec.hidden.end());
    sizes.push_back(n_actions);
    net_ = nn::Mlp::make(sizes);
    net_.init_orthogonal(rng, std::sqrt(2.0), 0.01);
    grad_.assign(net_.params.size(), 0.0);
  }

  ActorEval eval(const Obs& obs) override {
    ActorEval out;
    const auto features = env_features(env_, obs, feature_dim_);
    const auto logits = net_.forward(features, out.trace);
    out.probs = softmax(logits);
    return out;
  }

  void accumulate(const Obs& /*obs*/, const ActorEval& eval,
                  std::span<const double> d_probs, double scale) override {
    // chain through the softmax that turned logits into probs
    const auto& p = eval.probs;
    double mix = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) mix += d_probs[i] * p[i];
    std::vector<double> d_logits(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) d_logits[i] = p[i] * (d_probs[i] - mix);
    net_.backward(eval.trace, d_logits, grad_, scale);
  }

  void append_groups(std::vector<Group>& groups, double adam_eps) override {
    Group g{GroupRole::Actor, net_.params, grad_, {}, 0.0};
    g.adam.eps = adam_eps;
    groups.push_back(std::move(g));
  }

 private:
  static std::vector<double> softmax(std::span<const double> logits) {
    const double zmax = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = std::exp(logits[i] - zmax);
      sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
  }

  envs::EnvId env_;
  int feature_dim_;
  nn::Mlp net_;
  std::vector<double> grad_;
};

}  // namespace

int actor_parameter_count(const ActorSpec& spec, envs::EnvId env) {
  if (const auto* vqc = std::get_if<VqcActorSpec>(&spec)) {
    return circuits::count_parameters(vqc->config);
  }
  const auto& mlp = std::get<MlpActorSpec>(spec);
  const int feature_dim = env == envs::EnvId::FrozenLake ? 16 : 4;
  const int n_actions = env == envs::EnvId::FrozenLake ? 4 : 2;
  std::vector<int> sizes;
  sizes.push_back(feature_dim);
  sizes.insert(sizes.end(), mlp.hidden.begin(), mlp.hidden.end());
  sizes.push_back(n_actions);
  int total = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    total += sizes[l + 1] * sizes[l] + sizes[l + 1];
  }
  return total;
}

TrainingLog train(const TrainSpec& spec) {
  const HyperParams& hp = spec.hp;
  if (hp.batch_size() % hp.minibatches != 0) {
    throw std::invalid_argument("batch size must divide evenly into minibatches");
  }

  envs::VecEnv venv(spec.env, hp.n_envs, derive_seed(spec.seed, 0));
  Rng init_rng(derive_seed(spec.seed, 1));
  Rng critic_rng(derive_seed(spec.seed, 2));
  Rng sample_rng(derive_seed(spec.seed, 3));
  Rng shuffle_rng(derive_seed(spec.seed, 4));

  std::unique_ptr<ActorModel> actor;
  bool local_input_scaling = false;
  if (const auto* vqc_spec = std::get_if<VqcActorSpec>(&spec.actor)) {
    actor = std::make_unique<VqcActor>(*vqc_spec, init_rng);
    local_input_scaling = vqc_spec->config.input_scaling == circuits::ScalingMode::Local;
  } else {
    actor = std::make_unique<MlpActor>(std::get<MlpActorSpec>(spec.actor),
                                       venv.feature_dim(), venv.action_count(), spec.env,
                                       init_rng);
  }

  nn::Mlp critic = nn::Mlp::make({venv.feature_dim(), 64, 64, 1});
  critic.init_orthogonal(critic_rng, std::sqrt(2.0), 1.0);
  std::vector<double> critic_grad(critic.params.size(), 0.0);

  std::vector<Group> groups;
  {
    Group g{GroupRole::Critic, critic.params, critic_grad, {}, hp.critic_lr};
    g.adam.eps = hp.adam_eps;
    groups.push_back(std::move(g));
  }
  actor->append_groups(groups, hp.adam_eps);

  const int batch = hp.batch_size();
  const int steps = hp.rollout_steps;
  const int n_envs = hp.n_envs;
  const long n_updates = spec.total_timesteps / batch;

  auto set_group_lrs = [&](double actor_lr) {
    for (auto& g : groups) {
      switch (g.role) {
        case GroupRole::Critic:
          g.lr = hp.critic_lr;
          break;
        case GroupRole::Actor:
          g.lr = actor_lr;
          break;
        case GroupRole::InputScaling:
          g.lr = local_input_scaling ? actor_lr : hp.output_scaling_lr;
          break;
        case GroupRole::OutputScaling:
          g.lr = hp.output_scaling_lr;
          break;
      }
    }
  };
  auto scaling_lr_for_log = [&]() {
    for (const auto& g : groups) {
      if (g.role == GroupRole::OutputScaling) return g.lr;
    }
    for (const auto& g : groups) {
      if (g.role == GroupRole::InputScaling) return g.lr;
    }
    return 0.0;
  };

  TrainingLog log;
  {
    set_group_lrs(lr_at(spec.schedule, 0.0));
    TrainRecord first{};
    first.timestep = 0;
    first.lr_actor = lr_at(spec.schedule, 0.0);
    first.lr_scaling = scaling_lr_for_log();
    first.beta = actor->beta_mean();
    log.records.push_back(first);
  }

  std::vector<Obs> obs = venv.reset(derive_seed(spec.seed, 0));

  const std::size_t n = static_cast<std::size_t>(batch);
  std::vector<Obs> batch_states(n);
  std::vector<int> batch_actions(n);
  std::vector<double> batch_logprobs(n), batch_rewards(n), batch_values(n);
  std::vector<std::uint8_t> batch_dones(n);
  std::vector<double> next_values(n_envs);
  double last_raw_return = 0.0;

  for (long update = 1; update <= n_updates; ++update) {
    const double t_sched = static_cast<double>((update - 1)) * batch;
    const double actor_lr = lr_at(spec.schedule, t_sched);
    set_group_lrs(actor_lr);

    // rollout
    std::vector<int> actions(n_envs);
    for (int t = 0; t < steps; ++t) {
      for (int e = 0; e < n_envs; ++e) {
        const std::size_t i = static_cast<std::size_t>(t) * n_envs + e;
        batch_states[i] = obs[e];
        const auto eval = actor->eval(obs[e]);
        const auto sample = sample_action(eval.probs, sample_rng);
        batch_actions[i] = sample.action;
        batch_logprobs[i] = sample.logprob;
        const auto features = env_features(spec.env, obs[e], venv.feature_dim());
        batch_values[i] = critic.forward(features)[0];
        actions[e] = sample.action;
      }
      const auto result = venv.step(actions);
      for (int e = 0; e < n_envs; ++e) {
        const std::size_t i = static_cast<std::size_t>(t) * n_envs + e;
        batch_rewards[i] = result.rewards[e];
        batch_dones[i] = result.dones[e];
      }
      obs = result.obs;
    }
    for (int e = 0; e < n_envs; ++e) {
      const auto features = env_features(spec.env, obs[e], venv.feature_dim());
      next_values[e] = critic.forward(features)[0];
    }

    const GaeResult gae = compute_gae(batch_rewards, batch_dones, batch_values, next_values,
                                      steps, n_envs, hp.gamma, hp.gae_lambda);

    // optimize
    LossParts mean_loss;
    int loss_count = 0;
    const int mb_size = hp.minibatch_size();
    const double inv_m = 1.0 / static_cast<double>(mb_size);
    bool aborted = false;

    for (int epoch = 0; epoch < hp.epochs && !aborted; ++epoch) {
      const auto perm = shuffled_indices(batch, shuffle_rng);
      for (int mb = 0; mb < hp.minibatches && !aborted; ++mb) {
        const int* idx = perm.data() + static_cast<std::size_t>(mb) * mb_size;

        std::vector<double> adv_raw(mb_size);
        for (int k = 0; k < mb_size; ++k) adv_raw[k] = gae.advantages[idx[k]];
        const auto adv = normalize_advantages(adv_raw);

        for (auto& g : groups) std::fill(g.grad.begin(), g.grad.end(), 0.0);

        LossParts parts;
        for (int k = 0; k < mb_size; ++k) {
          const std::size_t i = static_cast<std::size_t>(idx[k]);
          const Obs& state = batch_states[i];
          const int action = batch_actions[i];

          const auto eval = actor->eval(state);
          const auto& probs = eval.probs;
          const double new_logp = safe_log(probs[action]);
          const double entropy = categorical_entropy(probs);

          const auto pol = policy_sample(adv[k], batch_logprobs[i], new_logp, hp.clip);

          const auto features = env_features(spec.env, state, venv.feature_dim());
          nn::Mlp::Trace trace;
          const double new_value = critic.forward(features, trace)[0];
          const auto val =
              value_sample(batch_values[i], new_value, gae.returns[i], hp.clip);

          parts.policy += pol.loss;
          parts.value += val.loss;
          parts.entropy += entropy;

          const auto d_probs =
              policy_entropy_upstream(probs, action, pol.d_new_logp, hp.entropy_coef);
          actor->accumulate(state, eval, d_probs, inv_m);

          const double d_value = inv_m * hp.value_coef * val.d_new_value;
          critic.backward(trace, std::span<const double>(&d_value, 1), critic_grad);
        }

        parts.policy *= inv_m;
        parts.value *= inv_m;
        parts.entropy *= inv_m;
        parts.combined =
            parts.policy + hp.value_coef * parts.value - hp.entropy_coef * parts.entropy;
        if (!std::isfinite(parts.combined)) {
          log.abort_reason = "non-finite loss at update " + std::to_string(update) +
                             ", epoch " + std::to_string(epoch) + ", minibatch " +
                             std::to_string(mb);
          aborted = true;
          break;
        }

        std::vector<std::span<double>> grad_spans;
        grad_spans.reserve(groups.size());
        for (auto& g : groups) grad_spans.push_back(g.grad);
        nn::clip_grad_norm(grad_spans, hp.max_grad_norm);

        for (auto& g : groups) nn::adam_step(g.values, g.grad, g.adam, g.lr);

        mean_loss.policy += parts.policy;
        mean_loss.value += parts.value;
        mean_loss.entropy += parts.entropy;
        ++loss_count;
      }
    }
    if (aborted) break;

    const auto finished = venv.take_finished_returns();
    if (!finished.empty()) {
      double total = 0.0;
      for (double r : finished) total += r;
      last_raw_return = total / static_cast<double>(finished.size());
    }

    TrainRecord record{};
    record.timestep = update * batch;
    record.raw_return = last_raw_return;
    if (loss_count > 0) {
      record.policy_loss = mean_loss.policy / loss_count;
      record.value_loss = mean_loss.value / loss_count;
      record.entropy = mean_loss.entropy / loss_count;
    }
    record.lr_actor = actor_lr;
    record.lr_scaling = scaling_lr_for_log();
    record.beta = actor->beta_mean();
    log.records.push_back(record);
  }

  return log;
}

}  // namespace qppo::ppo
