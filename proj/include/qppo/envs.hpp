#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qppo/obs.hpp"
#include "qppo/rng.hpp"

namespace qppo::envs {

enum class EnvId { FrozenLake, CartPole };

EnvId env_from_name(const std::string& name);
std::string env_name(EnvId id);

struct StepResult {
  Obs obs;
  double reward = 0.0;
  bool done = false;
};

class Env {
 public:
  virtual ~Env() = default;

  // Reseeds the environment's random stream and starts a fresh episode.
  virtual Obs reset(std::uint64_t seed) = 0;
  // Starts a fresh episode without reseeding (used by auto-reset).
  virtual Obs reset_continue() = 0;
  // Throws std::logic_error when called on a finished episode.
  virtual StepResult step(int action) = 0;

  virtual int action_count() const = 0;
  // Critic/classical-actor input width (16 one-hot for Frozen Lake, 4 raw
  // for Cart Pole).
  virtual int feature_dim() const = 0;
  virtual bool done() const = 0;
};

// Deterministic 4x4 map "SFFF","FHFH","FFFH","HFFG". Rewards: +1 for the
// move that reaches the goal, -0.01 for every other move, with an extra
// -0.2 when the move falls into a hole. The optimal 6-move path returns
// 0.95 and the fastest fall returns -0.22. Episodes are capped at 200 moves.
class FrozenLake final : public Env {
 public:
  static constexpr int kStates = 16;
  static constexpr int kGoal = 15;
  static constexpr int kMaxSteps = 200;
  enum Action { Left = 0, Down = 1, Right = 2, Up = 3 };

  Obs reset(std::uint64_t seed) override;
  Obs reset_continue() override;
  StepResult step(int action) override;
  int action_count() const override { return 4; }
  int feature_dim() const override { return kStates; }
  bool done() const override { return done_; }

  int position() const { return position_; }
  static bool is_hole(int cell);

 private:
  int position_ = 0;
  int step_count_ = 0;
  bool done_ = false;
};

// One semi-implicit Euler step of the cart-pole dynamics under `force`,
// ignoring termination (exposed for direct physics checks).
Obs cartpole_physics_step(const Obs& state, double force);

class CartPole final : public Env {
 public:
  static constexpr double kGravity = 9.8;
  static constexpr double kMassCart = 1.0;
  static constexpr double kMassPole = 0.1;
  static constexpr double kPoleHalfLength = 0.5;
  static constexpr double kForceMag = 10.0;
  static constexpr double kTau = 0.02;
  static constexpr double kXThreshold = 2.4;
  static constexpr double kThetaThreshold = 12.0 * 3.14159265358979323846 / 180.0;
  static constexpr int kMaxSteps = 500;
  enum Action { Left = 0, Right = 1 };

  CartPole() : rng_(0) {}

  Obs reset(std::uint64_t seed) override;
  Obs reset_continue() override;
  StepResult step(int action) override;
  int action_count() const override { return 2; }
  int feature_dim() const override { return 4; }
  bool done() const override { return done_; }

 private:
  Obs state_{};
  int step_count_ = 0;
  bool done_ = false;
  Rng rng_;
};

std::unique_ptr<Env> make_env(EnvId id);

// Synchronous vector of independent environments with auto-reset: a step
// that finishes an episode reports the terminal reward/done but returns the
// fresh initial state of the next episode.
class VecEnv {
 public:
  VecEnv(EnvId id, int n_envs, std::uint64_t seed);

  std::vector<Obs> reset(std::uint64_t seed);

  struct VecStep {
    std::vector<Obs> obs;
    std::vector<double> rewards;
    std::vector<std::uint8_t> dones;
  };
  VecStep step(std::span<const int> actions);

  // Episode returns completed since the last call (for logging).
  std::vector<double> take_finished_returns();

  int size() const { return static_cast<int>(envs_.size()); }
  int action_count() const { return envs_.front()->action_count(); }
  int feature_dim() const { return envs_.front()->feature_dim(); }
  long total_steps() const { return total_steps_; }

 private:
  std::vector<std::unique_ptr<Env>> envs_;
  std::vector<double> episode_returns_;
  std::vector<double> finished_returns_;
  long total_steps_ = 0;
};

}  // namespace qppo::envs
