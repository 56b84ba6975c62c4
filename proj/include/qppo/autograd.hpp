#pragma once

#include <span>
#include <vector>

#include "qppo/circuits.hpp"
#include "qppo/nn.hpp"
#include "qppo/obs.hpp"

namespace qppo::autograd {

// ParameterShift evaluates the circuit twice per rotation angle at +/- pi/2;
// Adjoint sweeps the circuit once forward and once backward for the whole
// Jacobian. Both are exact for this gate set and must agree to float noise;
// the shift rule is the reference the adjoint path is tested against.
enum class DiffMethod { ParameterShift, Adjoint };

// d expvals / d angle for every rotation-gate position, columns in circuit
// order. Rows follow the measured wires in ascending order.
struct CircuitJacobian {
  std::vector<std::size_t> gate_positions;        // circuit index per column
  std::vector<std::vector<double>> d_expvals;     // [measured][column]
};

CircuitJacobian circuit_jacobian(const circuits::BuiltCircuit& circuit, int n_qubits,
                                 std::span<const int> measured_wires,
                                 DiffMethod method = DiffMethod::Adjoint);

CircuitJacobian circuit_jacobian(const circuits::CircuitConfig& config,
                                 const circuits::CircuitParams& params, const Obs& obs,
                                 DiffMethod method = DiffMethod::Adjoint);

// Gradient of a scalar loss with respect to each actor parameter group,
// aligned index-for-index with CircuitParams.
struct VqcGrad {
  std::vector<double> theta;
  std::vector<double> lambda;
  std::vector<double> beta;

  static VqcGrad zeros(const circuits::CircuitConfig& config);
};

// Chains upstream = dLoss/dprobs through the policy head, output scaling,
// the circuit Jacobian, the tanh weight remap, and input scaling.
VqcGrad actor_grad(const circuits::CircuitConfig& config,
                   const circuits::CircuitParams& params, const Obs& obs,
                   std::span<const double> upstream,
                   DiffMethod method = DiffMethod::Adjoint);

// Same, but reuses a completed forward pass and accumulates scaled
// contributions into an existing gradient (the training hot path).
void accumulate_actor_grad(const circuits::CircuitConfig& config,
                           const circuits::CircuitParams& params, const Obs& obs,
                           const circuits::ActorOutput& forward,
                           std::span<const double> upstream, double scale, VqcGrad& out,
                           DiffMethod method = DiffMethod::Adjoint);

// dLoss/dexpvals for either policy head; also fills dLoss/dbeta when output
// scaling is on (beta_grad must then match the beta length).
void head_backward(const circuits::CircuitConfig& config, std::span<const double> expvals,
                   std::span<const double> beta, std::span<const double> probs,
                   std::span<const double> upstream, std::span<double> expval_grad,
                   std::span<double> beta_grad);

// Reverse-mode gradient of an MLP: dLoss/dparams for upstream = dLoss/doutput.
std::vector<double> mlp_grad(const nn::Mlp& net, std::span<const double> input,
                             std::span<const double> upstream);

}  // namespace qppo::autograd
