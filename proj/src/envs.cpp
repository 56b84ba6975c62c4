#include "qppo/envs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qppo::envs {

namespace {

// Row-major 4x4 map: S start, F frozen, H hole, G goal.
constexpr char kMap[17] = "SFFFFHFHFFFHHFFG";

}  // namespace

EnvId env_from_name(const std::string& name) {
  if (name == "frozen_lake") return EnvId::FrozenLake;
  if (name == "cart_pole") return EnvId::CartPole;
  throw std::invalid_argument("unknown environment '" + name + "'");
}

std::string env_name(EnvId id) {
  return id == EnvId::FrozenLake ? "frozen_lake" : "cart_pole";
}

bool FrozenLake::is_hole(int cell) { return kMap[cell] == 'H'; }

Obs FrozenLake::reset(std::uint64_t /*seed*/) { return reset_continue(); }

Obs FrozenLake::reset_continue() {
  position_ = 0;
  step_count_ = 0;
  done_ = false;
  return {0.0, 0.0, 0.0, 0.0};
}

StepResult FrozenLake::step(int action) {
  if (done_) throw std::logic_error("FrozenLake::step called on a finished episode");
  if (action < 0 || action > 3) throw std::invalid_argument("FrozenLake action out of range");

  int row = position_ / 4;
  int col = position_ % 4;
  switch (action) {
    case Left:
      col = std::max(col - 1, 0);
      break;
    case Down:
      row = std::min(row + 1, 3);
      break;
    case Right:
      col = std::min(col + 1, 3);
      break;
    case Up:
      row = std::max(row - 1, 0);
      break;
  }
  position_ = row * 4 + col;
  ++step_count_;

  double reward;
  if (position_ == kGoal) {
    reward = 1.0;
    done_ = true;
  } else if (is_hole(position_)) {
    reward = -0.01 - 0.2;
    done_ = true;
  } else {
    reward = -0.01;
    if (step_count_ >= kMaxSteps) done_ = true;
  }
  return {{static_cast<double>(position_), 0.0, 0.0, 0.0}, reward, done_};
}

Obs cartpole_physics_step(const Obs& state, double force) {
  const double total_mass = CartPole::kMassCart + CartPole::kMassPole;
  const double pole_mass_length = CartPole::kMassPole * CartPole::kPoleHalfLength;

  const double x = state[0], x_dot = state[1], theta = state[2], theta_dot = state[3];
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);

  const double temp = (force + pole_mass_length * theta_dot * theta_dot * sin_t) / total_mass;
  const double theta_acc =
      (CartPole::kGravity * sin_t - cos_t * temp) /
      (CartPole::kPoleHalfLength * (4.0 / 3.0 - CartPole::kMassPole * cos_t * cos_t / total_mass));
  const double x_acc = temp - pole_mass_length * theta_acc * cos_t / total_mass;

  // semi-implicit Euler: velocities first, then positions
  const double new_x_dot = x_dot + CartPole::kTau * x_acc;
  const double new_theta_dot = theta_dot + CartPole::kTau * theta_acc;
  return {x + CartPole::kTau * new_x_dot, new_x_dot, theta + CartPole::kTau * new_theta_dot,
          new_theta_dot};
}

Obs CartPole::reset(std::uint64_t seed) {
  rng_ = Rng(seed);
  return reset_continue();
}

Obs CartPole::reset_continue() {
  for (double& v : state_) v = rng_.uniform(-0.05, 0.05);
  step_count_ = 0;
  done_ = false;
  return state_;
}

StepResult CartPole::step(int action) {
  if (done_) throw std::logic_error("CartPole::step called on a finished episode");
  if (action != Left && action != Right) {
    throw std::invalid_argument("CartPole action out of range");
  }

  state_ = cartpole_physics_step(state_, action == Right ? kForceMag : -kForceMag);
  ++step_count_;

  done_ = std::abs(state_[0]) > kXThreshold || std::abs(state_[2]) > kThetaThreshold ||
          step_count_ >= kMaxSteps;
  return {state_, 1.0, done_};
}

std::unique_ptr<Env> make_env(EnvId id) {
  if (id == EnvId::FrozenLake) return std::make_unique<FrozenLake>();
  return std::make_unique<CartPole>();
}

VecEnv::VecEnv(EnvId id, int n_envs, std::uint64_t seed) {
  if (n_envs < 1) throw std::invalid_argument("VecEnv needs at least one environment");
  for (int i = 0; i < n_envs; ++i) envs_.push_back(make_env(id));
  episode_returns_.assign(n_envs, 0.0);
  reset(seed);
}

std::vector<Obs> VecEnv::reset(std::uint64_t seed) {
  std::vector<Obs> obs;
  obs.reserve(envs_.size());
  for (std::size_t i = 0; i < envs_.size(); ++i) {
    obs.push_back(envs_[i]->reset(derive_seed(seed, i)));
    episode_returns_[i] = 0.0;
  }
  finished_returns_.clear();
  total_steps_ = 0;
  return obs;
}

VecEnv::VecStep VecEnv::step(std::span<const int> actions) {
  if (actions.size() != envs_.size()) {
    throw std::invalid_argument("VecEnv::step expects one action per environment");
  }
  VecStep out;
  out.obs.resize(envs_.size());
  out.rewards.resize(envs_.size());
  out.dones.resize(envs_.size());
  for (std::size_t i = 0; i < envs_.size(); ++i) {
    const StepResult r = envs_[i]->step(actions[i]);
    episode_returns_[i] += r.reward;
    out.rewards[i] = r.reward;
    out.dones[i] = r.done ? 1 : 0;
    if (r.done) {
      finished_returns_.push_back(episode_returns_[i]);
      episode_returns_[i] = 0.0;
      out.obs[i] = envs_[i]->reset_continue();
    } else {
      out.obs[i] = r.obs;
    }
  }
  total_steps_ += static_cast<long>(envs_.size());
  return out;
}

std::vector<double> VecEnv::take_finished_returns() {
  std::vector<double> out;
  out.swap(finished_returns_);
  return out;
}

}  // namespace qppo::envs
