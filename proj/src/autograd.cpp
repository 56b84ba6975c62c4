#include "qppo/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qppo/qsim.hpp"

namespace qppo::autograd {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<int> sorted_wires(std::span<const int> measured_wires) {
  std::vector<int> wires(measured_wires.begin(), measured_wires.end());
  std::sort(wires.begin(), wires.end());
  return wires;
}

CircuitJacobian jacobian_shift(const circuits::BuiltCircuit& circuit, int n_qubits,
                               std::span<const int> measured_wires) {
  const auto wires = sorted_wires(measured_wires);
  CircuitJacobian jac;
  jac.d_expvals.assign(wires.size(), {});

  std::vector<qsim::Gate> gates = circuit.gates;
  for (std::size_t g = 0; g < gates.size(); ++g) {
    if (!gates[g].is_rotation()) continue;
    const double angle = gates[g].angle;
    gates[g].angle = angle + kPi / 2.0;
    const auto plus = qsim::run_circuit(gates, n_qubits, wires);
    gates[g].angle = angle - kPi / 2.0;
    const auto minus = qsim::run_circuit(gates, n_qubits, wires);
    gates[g].angle = angle;

    jac.gate_positions.push_back(g);
    for (std::size_t m = 0; m < wires.size(); ++m) {
      jac.d_expvals[m].push_back((plus[m] - minus[m]) / 2.0);
    }
  }
  return jac;
}

// Single forward sweep plus one backward sweep shared by all observables:
// d<Z_m>/dphi_j = 2 Re(<b_m| dG_j/dphi |k_j>) with |k_j> the state before
// gate j and <b_m| the Z_m-projected final state pulled back through the
// later gates. dR/dphi = -(i/2) G R(phi) for R = exp(-i phi G / 2).
CircuitJacobian jacobian_adjoint(const circuits::BuiltCircuit& circuit, int n_qubits,
                                 std::span<const int> measured_wires) {
  const auto wires = sorted_wires(measured_wires);

  qsim::StateVector ket = qsim::new_state(n_qubits);
  for (const auto& gate : circuit.gates) qsim::apply_gate_in_place(ket, gate);

  std::vector<qsim::StateVector> bras;
  bras.reserve(wires.size());
  for (int wire : wires) {
    qsim::StateVector b = ket;
    qsim::apply_pauli_in_place(b, qsim::GateKind::RZ, wire);
    bras.push_back(std::move(b));
  }

  std::vector<std::size_t> rev_positions;
  std::vector<std::vector<double>> rev_cols(wires.size());

  for (std::size_t idx = circuit.gates.size(); idx-- > 0;) {
    const qsim::Gate& gate = circuit.gates[idx];
    qsim::apply_gate_inverse_in_place(ket, gate);
    if (gate.is_rotation()) {
      qsim::StateVector d = ket;
      qsim::apply_gate_in_place(d, gate);
      qsim::apply_pauli_in_place(d, gate.kind, gate.wire);
      rev_positions.push_back(idx);
      for (std::size_t m = 0; m < bras.size(); ++m) {
        // 2 Re(<b| -i/2 |d>) = Im(<b|d>)
        double im = 0.0;
        for (std::size_t a = 0; a < d.amplitudes.size(); ++a) {
          im += std::imag(std::conj(bras[m].amplitudes[a]) * d.amplitudes[a]);
        }
        rev_cols[m].push_back(im);
      }
    }
    for (auto& b : bras) qsim::apply_gate_inverse_in_place(b, gate);
  }

  CircuitJacobian jac;
  jac.gate_positions.assign(rev_positions.rbegin(), rev_positions.rend());
  jac.d_expvals.resize(wires.size());
  for (std::size_t m = 0; m < wires.size(); ++m) {
    jac.d_expvals[m].assign(rev_cols[m].rbegin(), rev_cols[m].rend());
  }
  return jac;
}

}  // namespace

CircuitJacobian circuit_jacobian(const circuits::BuiltCircuit& circuit, int n_qubits,
                                 std::span<const int> measured_wires, DiffMethod method) {
  return method == DiffMethod::ParameterShift
             ? jacobian_shift(circuit, n_qubits, measured_wires)
             : jacobian_adjoint(circuit, n_qubits, measured_wires);
}

CircuitJacobian circuit_jacobian(const circuits::CircuitConfig& config,
                                 const circuits::CircuitParams& params, const Obs& obs,
                                 DiffMethod method) {
  const auto encoded = circuits::encoded_angles(config, params, obs);
  const auto circuit = circuits::build_actor_circuit(config, params, encoded);
  return circuit_jacobian(circuit, config.n_qubits, config.measured_wires, method);
}

VqcGrad VqcGrad::zeros(const circuits::CircuitConfig& config) {
  VqcGrad g;
  g.theta.assign(circuits::theta_count(config), 0.0);
  g.lambda.assign(circuits::lambda_count(config), 0.0);
  g.beta.assign(circuits::beta_count(config), 0.0);
  return g;
}

void head_backward(const circuits::CircuitConfig& config, std::span<const double> expvals,
                   std::span<const double> beta, std::span<const double> probs,
                   std::span<const double> upstream, std::span<double> expval_grad,
                   std::span<double> beta_grad) {
  const std::size_t n = expvals.size();
  if (upstream.size() != n || probs.size() != n || expval_grad.size() != n) {
    throw std::invalid_argument("head_backward size mismatch");
  }

  if (config.output_scaling == circuits::ScalingMode::None) {
    double sum = 0.0;
    for (double c : expvals) sum += c + 1.0;
    if (sum < 1e-12) {
      // degenerate all-(-1) input: the head returned the constant uniform
      std::fill(expval_grad.begin(), expval_grad.end(), 0.0);
      return;
    }
    double mix = 0.0;
    for (std::size_t i = 0; i < n; ++i) mix += upstream[i] * probs[i];
    for (std::size_t j = 0; j < n; ++j) expval_grad[j] = (upstream[j] - mix) / sum;
    return;
  }

  // softmax over z_i = beta_eff_i * C_i
  double mix = 0.0;
  for (std::size_t i = 0; i < n; ++i) mix += upstream[i] * probs[i];
  const bool global = config.output_scaling == circuits::ScalingMode::Global;
  if (beta_grad.size() != beta.size()) {
    throw std::invalid_argument("head_backward beta size mismatch");
  }
  double beta_acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double z_grad = probs[j] * (upstream[j] - mix);
    const double beta_eff = global ? beta[0] : beta[j];
    expval_grad[j] = z_grad * beta_eff;
    if (global) {
      beta_acc += z_grad * expvals[j];
    } else {
      beta_grad[j] = z_grad * expvals[j];
    }
  }
  if (global) beta_grad[0] = beta_acc;
}

void accumulate_actor_grad(const circuits::CircuitConfig& config,
                           const circuits::CircuitParams& params, const Obs& obs,
                           const circuits::ActorOutput& forward,
                           std::span<const double> upstream, double scale, VqcGrad& out,
                           DiffMethod method) {
  const std::size_t n = forward.expvals.size();
  std::vector<double> expval_grad(n, 0.0);
  std::vector<double> beta_grad(params.beta.size(), 0.0);
  head_backward(config, forward.expvals, params.beta, forward.probs, upstream,
                expval_grad, beta_grad);
  for (std::size_t i = 0; i < beta_grad.size(); ++i) out.beta[i] += scale * beta_grad[i];

  const auto jac =
      circuit_jacobian(forward.circuit, config.n_qubits, config.measured_wires, method);

  for (std::size_t c = 0; c < jac.gate_positions.size(); ++c) {
    double d_angle = 0.0;
    for (std::size_t m = 0; m < n; ++m) d_angle += expval_grad[m] * jac.d_expvals[m][c];
    if (d_angle == 0.0) continue;

    const auto& src = forward.circuit.sources[jac.gate_positions[c]];
    switch (src.role) {
      case circuits::AngleRole::Theta:
        out.theta[src.param_index] += scale * d_angle * src.dangle_dtheta;
        break;
      case circuits::AngleRole::Encoding: {
        if (config.input_scaling == circuits::ScalingMode::None) break;
        const int idx = config.input_scaling == circuits::ScalingMode::Local
                            ? src.layer * config.n_qubits + src.wire
                            : src.wire;
        const double s_w = obs[src.wire];
        const double t = std::tanh(params.lambda[idx] * s_w);
        out.lambda[idx] += scale * d_angle * kPi * (1.0 - t * t) * s_w;
        break;
      }
      case circuits::AngleRole::Fixed:
        break;
    }
  }
}

VqcGrad actor_grad(const circuits::CircuitConfig& config,
                   const circuits::CircuitParams& params, const Obs& obs,
                   std::span<const double> upstream, DiffMethod method) {
  for (double u : upstream) {
    if (!std::isfinite(u)) throw std::domain_error("actor_grad: non-finite upstream");
  }
  const auto forward = circuits::actor_forward(config, params, obs);
  VqcGrad out = VqcGrad::zeros(config);
  accumulate_actor_grad(config, params, obs, forward, upstream, 1.0, out, method);
  return out;
}

std::vector<double> mlp_grad(const nn::Mlp& net, std::span<const double> input,
                             std::span<const double> upstream) {
  nn::Mlp::Trace trace;
  net.forward(input, trace);
  std::vector<double> grad(net.params.size(), 0.0);
  net.backward(trace, upstream, grad);
  return grad;
}

}  // namespace qppo::autograd
