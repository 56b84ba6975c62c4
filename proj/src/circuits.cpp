#include "qppo/circuits.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qppo::circuits {

namespace {

constexpr double kPi = std::numbers::pi;

int rotations_per_qubit(Architecture arch) {
  return arch == Architecture::Jerbi ? 2 : 3;
}

int variational_layers(const CircuitConfig& config) {
  // Jerbi prepends one variational layer before the re-uploading stack.
  return config.architecture == Architecture::Jerbi ? config.n_layers + 1
                                                    : config.n_layers;
}

void check_sizes(const CircuitConfig& config, const CircuitParams& params) {
  if (static_cast<int>(params.theta.size()) != theta_count(config)) {
    throw std::invalid_argument("theta has " + std::to_string(params.theta.size()) +
                                " entries, config needs " +
                                std::to_string(theta_count(config)));
  }
  if (static_cast<int>(params.lambda.size()) != lambda_count(config)) {
    throw std::invalid_argument("lambda has " + std::to_string(params.lambda.size()) +
                                " entries, config needs " +
                                std::to_string(lambda_count(config)));
  }
  if (static_cast<int>(params.beta.size()) != beta_count(config)) {
    throw std::invalid_argument("beta has " + std::to_string(params.beta.size()) +
                                " entries, config needs " +
                                std::to_string(beta_count(config)));
  }
}

}  // namespace

void CircuitConfig::validate() const {
  if (n_qubits < 1 || n_qubits > 10) {
    throw std::invalid_argument("n_qubits must be in [1, 10]");
  }
  if (n_layers < 1) {
    throw std::invalid_argument("n_layers must be at least 1");
  }
  if (measured_wires.empty()) {
    throw std::invalid_argument("measured_wires must not be empty");
  }
  for (int w : measured_wires) {
    if (w < 0 || w >= n_qubits) {
      throw std::invalid_argument("measured wire out of range");
    }
  }
  if (encoding == EncodingMode::BinaryFL) {
    if (n_qubits != 4) {
      throw std::invalid_argument("binary encoding requires 4 qubits");
    }
    if (measured_wires != std::vector<int>{0, 1, 2, 3}) {
      throw std::invalid_argument("binary encoding measures all four wires");
    }
    if (input_scaling != ScalingMode::None) {
      throw std::invalid_argument("input scaling requires angle encoding");
    }
  } else {
    if (n_qubits != 4) {
      throw std::invalid_argument("angle encoding requires 4 qubits");
    }
    if (measured_wires != std::vector<int>{2, 3}) {
      throw std::invalid_argument("angle encoding measures the last two wires");
    }
  }
  if (!data_reuploading && input_scaling == ScalingMode::Local) {
    throw std::invalid_argument("local input scaling needs per-layer encodings (re-uploading)");
  }
}

CircuitConfig CircuitConfig::frozen_lake(Architecture arch, ScalingMode output_scaling) {
  CircuitConfig config;
  config.architecture = arch;
  config.n_layers = arch == Architecture::Jerbi ? 8 : 6;
  config.encoding = EncodingMode::BinaryFL;
  config.output_scaling = output_scaling;
  config.measured_wires = {0, 1, 2, 3};
  return config;
}

CircuitConfig CircuitConfig::cart_pole(ScalingMode input_scaling, ScalingMode output_scaling,
                                       int n_layers) {
  CircuitConfig config;
  config.architecture = Architecture::Standard;
  config.n_layers = n_layers;
  config.encoding = EncodingMode::AngleCP;
  config.input_scaling = input_scaling;
  config.output_scaling = output_scaling;
  config.measured_wires = {2, 3};
  config.final_entanglement = FinalEntanglement::Partial;
  return config;
}

int theta_count(const CircuitConfig& config) {
  return variational_layers(config) * config.n_qubits * rotations_per_qubit(config.architecture);
}

int lambda_count(const CircuitConfig& config) {
  switch (config.input_scaling) {
    case ScalingMode::None:
      return 0;
    case ScalingMode::Global:
      return config.n_qubits;
    case ScalingMode::Local:
      return config.n_qubits * config.n_layers;
  }
  return 0;
}

int beta_count(const CircuitConfig& config) {
  switch (config.output_scaling) {
    case ScalingMode::None:
      return 0;
    case ScalingMode::Global:
      return 1;
    case ScalingMode::Local:
      return config.action_count();
  }
  return 0;
}

int count_parameters(const CircuitConfig& config) {
  return theta_count(config) + lambda_count(config) + beta_count(config);
}

double remap_weight(double theta) {
  if (!std::isfinite(theta)) {
    throw std::domain_error("remap_weight requires a finite parameter");
  }
  // tanh saturates to exactly 1.0 in double precision around |theta| > 19;
  // clamp to keep the angle strictly inside (-pi, pi) as contracted.
  const double limit = std::nextafter(kPi, 0.0);
  return std::clamp(kPi * std::tanh(theta), -limit, limit);
}

double remap_weight_derivative(double theta) {
  if (!std::isfinite(theta)) {
    throw std::domain_error("remap_weight_derivative requires a finite parameter");
  }
  const double t = std::tanh(theta);
  return kPi * (1.0 - t * t);
}

std::array<double, 4> encode_binary(int state_index) {
  if (state_index < 0 || state_index > 15) {
    throw std::invalid_argument("binary encoding expects a state in [0, 15], got " +
                                std::to_string(state_index));
  }
  std::array<double, 4> angles{};
  for (int wire = 0; wire < 4; ++wire) {
    angles[wire] = ((state_index >> (3 - wire)) & 1) ? kPi : 0.0;
  }
  return angles;
}

std::array<double, 4> rescale_cartpole(const Obs& s) {
  for (double v : s) {
    if (!std::isfinite(v)) {
      throw std::domain_error("rescale_cartpole requires finite state values");
    }
  }
  return {kPi * s[0] / 4.8, kPi * std::tanh(s[1]), kPi * s[2] / 0.418,
          kPi * std::tanh(s[3])};
}

std::array<double, 4> input_scale(const Obs& s, std::span<const double> lambda, int layer,
                                  ScalingMode mode) {
  std::size_t offset = 0;
  if (mode == ScalingMode::Global) {
    if (lambda.size() != 4) {
      throw std::invalid_argument("global input scaling needs one lambda per dimension");
    }
  } else if (mode == ScalingMode::Local) {
    if (lambda.size() % 4 != 0 || layer < 0 ||
        static_cast<std::size_t>(layer + 1) * 4 > lambda.size()) {
      throw std::invalid_argument("local input scaling lambda does not cover layer " +
                                  std::to_string(layer));
    }
    offset = static_cast<std::size_t>(layer) * 4;
  } else {
    throw std::invalid_argument("input_scale requires Global or Local mode");
  }

  std::array<double, 4> angles{};
  for (int w = 0; w < 4; ++w) {
    angles[w] = kPi * std::tanh(lambda[offset + w] * s[w]);
  }
  return angles;
}

std::vector<std::array<double, 4>> encoded_angles(const CircuitConfig& config,
                                                  const CircuitParams& params,
                                                  const Obs& obs) {
  std::vector<std::array<double, 4>> layers;
  layers.reserve(config.n_layers);
  if (config.encoding == EncodingMode::BinaryFL) {
    const auto angles = encode_binary(static_cast<int>(std::lround(obs[0])));
    layers.assign(config.n_layers, angles);
    return layers;
  }
  switch (config.input_scaling) {
    case ScalingMode::None:
      layers.assign(config.n_layers, rescale_cartpole(obs));
      break;
    case ScalingMode::Global:
      layers.assign(config.n_layers, input_scale(obs, params.lambda, 0, ScalingMode::Global));
      break;
    case ScalingMode::Local:
      for (int l = 0; l < config.n_layers; ++l) {
        layers.push_back(input_scale(obs, params.lambda, l, ScalingMode::Local));
      }
      break;
  }
  return layers;
}

namespace {

struct Builder {
  const CircuitConfig& config;
  const CircuitParams& params;
  BuiltCircuit out;
  int next_theta = 0;

  void fixed(qsim::Gate gate) {
    out.gates.push_back(gate);
    out.sources.push_back({AngleRole::Fixed, -1, -1, -1, 0.0});
  }

  void encoding(qsim::Gate gate, int layer, int wire) {
    out.gates.push_back(gate);
    out.sources.push_back({AngleRole::Encoding, -1, layer, wire, 0.0});
  }

  void variational(qsim::GateKind kind, int wire) {
    const double raw = params.theta[next_theta];
    out.gates.push_back({kind, remap_weight(raw), wire, -1});
    out.sources.push_back(
        {AngleRole::Theta, next_theta, -1, -1, remap_weight_derivative(raw)});
    ++next_theta;
  }

  void cascade_cnots() {
    for (int w = 0; w + 1 < config.n_qubits; ++w) fixed(qsim::Gate::cnot(w, w + 1));
  }

  void partial_cnots() {
    // Final Cart Pole layer entangles 0->2 and 1->3 only.
    fixed(qsim::Gate::cnot(0, 2));
    fixed(qsim::Gate::cnot(1, 3));
  }

  void circular(qsim::GateKind kind) {
    for (int w = 0; w < config.n_qubits; ++w) {
      const int next = (w + 1) % config.n_qubits;
      fixed(kind == qsim::GateKind::CNOT ? qsim::Gate::cnot(w, next)
                                         : qsim::Gate::cz(w, next));
    }
  }
};

}  // namespace

BuiltCircuit build_actor_circuit(const CircuitConfig& config, const CircuitParams& params,
                                 std::span<const std::array<double, 4>> encoded) {
  config.validate();
  check_sizes(config, params);
  if (static_cast<int>(encoded.size()) != config.n_layers) {
    throw std::invalid_argument("need one encoding angle set per layer");
  }

  Builder b{config, params, {}, 0};
  const int n = config.n_qubits;

  const auto encodes = [&](int layer) { return config.data_reuploading || layer == 0; };

  switch (config.architecture) {
    case Architecture::Standard:
      for (int l = 0; l < config.n_layers; ++l) {
        if (encodes(l))
          for (int w = 0; w < n; ++w) b.encoding(qsim::Gate::ry(w, encoded[l][w]), l, w);
        for (int w = 0; w < n; ++w) {
          b.variational(qsim::GateKind::RX, w);
          b.variational(qsim::GateKind::RY, w);
          b.variational(qsim::GateKind::RZ, w);
        }
        const bool last = l + 1 == config.n_layers;
        if (last && config.final_entanglement == FinalEntanglement::Partial) {
          b.partial_cnots();
        } else {
          b.cascade_cnots();
        }
      }
      break;

    case Architecture::Koelle:
      for (int l = 0; l < config.n_layers; ++l) {
        if (encodes(l))
          for (int w = 0; w < n; ++w) b.encoding(qsim::Gate::rx(w, encoded[l][w]), l, w);
        for (int w = 0; w < n; ++w) {
          b.variational(qsim::GateKind::RZ, w);
          b.variational(qsim::GateKind::RY, w);
          b.variational(qsim::GateKind::RZ, w);
        }
        b.circular(qsim::GateKind::CNOT);
      }
      break;

    case Architecture::Jerbi:
      for (int w = 0; w < n; ++w) b.fixed(qsim::Gate::h(w));
      for (int w = 0; w < n; ++w) {
        b.variational(qsim::GateKind::RZ, w);
        b.variational(qsim::GateKind::RY, w);
      }
      b.circular(qsim::GateKind::CZ);
      for (int l = 0; l < config.n_layers; ++l) {
        // Both encoding rotations receive the same angle.
        if (encodes(l)) {
          for (int w = 0; w < n; ++w) {
            b.encoding(qsim::Gate::ry(w, encoded[l][w]), l, w);
            b.encoding(qsim::Gate::rz(w, encoded[l][w]), l, w);
          }
        }
        for (int w = 0; w < n; ++w) {
          b.variational(qsim::GateKind::RZ, w);
          b.variational(qsim::GateKind::RY, w);
        }
        b.circular(qsim::GateKind::CZ);
      }
      break;
  }

  return b.out;
}

std::vector<double> probs_plain(std::span<const double> expvals) {
  double sum = 0.0;
  for (double c : expvals) sum += c + 1.0;
  const std::size_t n = expvals.size();
  std::vector<double> probs(n);
  if (sum < 1e-12) {
    std::fill(probs.begin(), probs.end(), 1.0 / static_cast<double>(n));
    return probs;
  }
  for (std::size_t i = 0; i < n; ++i) probs[i] = (expvals[i] + 1.0) / sum;
  return probs;
}

std::vector<double> probs_softmax(std::span<const double> expvals,
                                  std::span<const double> beta) {
  const std::size_t n = expvals.size();
  if (beta.size() != 1 && beta.size() != n) {
    throw std::invalid_argument("beta must be scalar or one entry per action");
  }
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = (beta.size() == 1 ? beta[0] : beta[i]) * expvals[i];
  }
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return z;
}

ActorOutput actor_forward(const CircuitConfig& config, const CircuitParams& params,
                          const Obs& obs) {
  const auto encoded = encoded_angles(config, params, obs);
  ActorOutput out;
  out.circuit = build_actor_circuit(config, params, encoded);
  out.expvals = qsim::run_circuit(out.circuit.gates, config.n_qubits, config.measured_wires);
  if (config.output_scaling == ScalingMode::None) {
    out.probs = probs_plain(out.expvals);
  } else {
    out.probs = probs_softmax(out.expvals, params.beta);
  }
  return out;
}

}  // namespace qppo::circuits
