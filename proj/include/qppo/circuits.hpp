#pragma once

#include <array>
#include <span>
#include <vector>

#include "qppo/obs.hpp"
#include "qppo/qsim.hpp"

namespace qppo::circuits {

// Standard: RY encoding, RX/RY/RZ variational rotations, cascading CNOTs.
// Koelle:   RX encoding, RZ/RY/RZ variational rotations, circular CNOTs.
// Jerbi:    Hadamard wall, extra leading variational layer, RY/RZ encoding,
//           RZ/RY variational rotations, circular CZs.
enum class Architecture { Standard, Koelle, Jerbi };

enum class EncodingMode { BinaryFL, AngleCP };
enum class ScalingMode { None, Global, Local };
enum class FinalEntanglement { Full, Partial };

struct CircuitConfig {
  Architecture architecture = Architecture::Standard;
  int n_qubits = 4;
  int n_layers = 6;
  EncodingMode encoding = EncodingMode::BinaryFL;
  ScalingMode input_scaling = ScalingMode::None;
  ScalingMode output_scaling = ScalingMode::None;
  std::vector<int> measured_wires = {0, 1, 2, 3};
  FinalEntanglement final_entanglement = FinalEntanglement::Full;
  // With re-uploading off, only the first layer carries encoding rotations;
  // the variational stack (and parameter count) is unchanged.
  bool data_reuploading = true;

  int action_count() const { return static_cast<int>(measured_wires.size()); }

  // Throws std::invalid_argument when fields are inconsistent (wrong wire
  // sets for the encoding mode, input scaling without angle encoding, ...).
  void validate() const;

  static CircuitConfig frozen_lake(Architecture arch = Architecture::Standard,
                                   ScalingMode output_scaling = ScalingMode::None);
  static CircuitConfig cart_pole(ScalingMode input_scaling = ScalingMode::None,
                                 ScalingMode output_scaling = ScalingMode::None,
                                 int n_layers = 6);
};

// Raw trainable actor parameters. theta is pre-remap (the circuit sees
// pi*tanh(theta)); lambda/beta are empty when the matching scaling is off.
struct CircuitParams {
  std::vector<double> theta;
  std::vector<double> lambda;
  std::vector<double> beta;
};

int theta_count(const CircuitConfig& config);
int lambda_count(const CircuitConfig& config);
int beta_count(const CircuitConfig& config);
// |theta| + |lambda| + |beta|
int count_parameters(const CircuitConfig& config);

// pi * tanh(theta), strictly inside (-pi, pi). Throws std::domain_error on
// non-finite input.
double remap_weight(double theta);
double remap_weight_derivative(double theta);

// Binary encoding of a Frozen Lake state: angle_k = pi * bit_k with the most
// significant bit on wire 0 (3 -> 0011 -> (0, 0, pi, pi)).
std::array<double, 4> encode_binary(int state_index);

// Manual Cart Pole rescaling: pi * (x/4.8, tanh v, phi/0.418, tanh v_pole).
std::array<double, 4> rescale_cartpole(const Obs& s);

// Trainable input scaling: angle_w = pi * tanh(lambda_eff * s_w). Global mode
// uses one lambda per dimension; Local selects the layer's own block of four.
std::array<double, 4> input_scale(const Obs& s, std::span<const double> lambda,
                                  int layer, ScalingMode mode);

// Per-layer encoding angles for the configured mode, including input scaling
// when enabled.
std::vector<std::array<double, 4>> encoded_angles(const CircuitConfig& config,
                                                  const CircuitParams& params,
                                                  const Obs& obs);

// Where a gate's angle comes from, for gradient scatter.
enum class AngleRole {
  Fixed,     // H / CNOT / CZ, no angle
  Theta,     // variational rotation, angle = pi*tanh(theta[param_index])
  Encoding,  // encoding rotation for (layer, wire); trainable iff input scaling is on
};

struct GateSource {
  AngleRole role = AngleRole::Fixed;
  int param_index = -1;          // theta index for Theta
  int layer = -1, wire = -1;     // for Encoding
  double dangle_dtheta = 0.0;    // remap derivative for Theta
};

struct BuiltCircuit {
  std::vector<qsim::Gate> gates;
  std::vector<GateSource> sources;  // parallel to gates
};

// Assembles the full actor circuit from precomputed per-layer encoding
// angles. Throws std::invalid_argument on parameter-count mismatch.
BuiltCircuit build_actor_circuit(const CircuitConfig& config, const CircuitParams& params,
                                 std::span<const std::array<double, 4>> encoded);

// p_i = (C_i + 1) / sum_j (C_j + 1); an all-(-1) input degenerates to the
// uniform distribution.
std::vector<double> probs_plain(std::span<const double> expvals);

// p_i = exp(beta_i C_i) / sum_j exp(beta_j C_j); beta of length 1 is shared
// across actions.
std::vector<double> probs_softmax(std::span<const double> expvals,
                                  std::span<const double> beta);

struct ActorOutput {
  BuiltCircuit circuit;
  std::vector<double> expvals;  // measured wires, ascending
  std::vector<double> probs;
};

ActorOutput actor_forward(const CircuitConfig& config, const CircuitParams& params,
                          const Obs& obs);

}  // namespace qppo::circuits
