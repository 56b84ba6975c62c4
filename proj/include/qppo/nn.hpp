#pragma once

#include <span>
#include <vector>

#include "qppo/rng.hpp"

namespace qppo::nn {

// Circuit-parameter initializers. The four uniform interval strategies draw a
// target tanh value and store arctanh of it; the Gaussian variants store the
// draw directly. Orthogonal/ZeroBias apply to MLP layers, not flat vectors.
enum class InitStrategy {
  Standard,         // uniform [-1, 1], arctanh
  Small,            // magnitude uniform [0.01, 0.11], random sign, arctanh
  Medium,           // magnitude uniform [0.25, 0.75], random sign, arctanh
  Large,            // magnitude uniform [0.59, 0.99], random sign, arctanh
  Gaussian,         // N(0, 1), no arctanh
  ClippedGaussian,  // N(0, 1), magnitude clipped to [0.01, 0.99], no arctanh
  Orthogonal,
  ZeroBias,
};

std::vector<double> init_params(int count, InitStrategy strategy, Rng& rng);

// Fully-connected network with tanh hidden activations and a linear output
// layer. Parameters live in one flat vector laid out [W0, b0, W1, b1, ...]
// with row-major (out x in) weight blocks, so optimizer state and gradient
// clipping can treat the whole network as a single group.
struct Mlp {
  std::vector<int> sizes;
  std::vector<double> params;

  static Mlp make(std::vector<int> sizes);

  int layer_count() const { return static_cast<int>(sizes.size()) - 1; }
  int param_count() const { return static_cast<int>(params.size()); }
  int input_dim() const { return sizes.front(); }
  int output_dim() const { return sizes.back(); }

  std::size_t weight_offset(int layer) const;
  std::size_t bias_offset(int layer) const;

  std::vector<double> forward(std::span<const double> input) const;

  // Layer activations cached for backward: post[0] is the input copy,
  // post[k] the output of layer k-1 (tanh-activated except the last).
  struct Trace {
    std::vector<std::vector<double>> post;
  };
  std::vector<double> forward(std::span<const double> input, Trace& trace) const;

  // Accumulates dLoss/dparams into grad (same layout as params), given
  // upstream = dLoss/doutput. scale multiplies the contribution.
  void backward(const Trace& trace, std::span<const double> upstream,
                std::span<double> grad, double scale = 1.0) const;

  // Orthogonal weights (gain per layer), zero biases.
  void init_orthogonal(Rng& rng, double hidden_gain, double output_gain);
};

struct AdamState {
  std::vector<double> m, v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-5;
};

// Standard Adam update with bias correction. Throws std::domain_error on
// non-finite gradients (the update is aborted, parameters untouched).
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr);

// Joint global-norm clip over all groups: if the combined L2 norm exceeds
// max_norm, every gradient is rescaled by max_norm / norm.
void clip_grad_norm(std::span<const std::span<double>> groups, double max_norm);

}  // namespace qppo::nn
