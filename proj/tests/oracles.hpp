#pragma once

// Independent reference implementations used only by tests. The dense
// simulator builds explicit 2^n x 2^n matrices from Kronecker products and
// multiplies them onto the state, sharing no code with the production
// statevector path.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "qppo/qsim.hpp"
#include "qppo/rng.hpp"

namespace oracles {

using Complex = std::complex<double>;
using Matrix = std::vector<std::vector<Complex>>;

inline Matrix identity(std::size_t dim) {
  Matrix m(dim, std::vector<Complex>(dim, 0.0));
  for (std::size_t i = 0; i < dim; ++i) m[i][i] = 1.0;
  return m;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  const std::size_t ar = a.size(), ac = a[0].size();
  const std::size_t br = b.size(), bc = b[0].size();
  Matrix m(ar * br, std::vector<Complex>(ac * bc, 0.0));
  for (std::size_t i = 0; i < ar; ++i)
    for (std::size_t j = 0; j < ac; ++j)
      for (std::size_t k = 0; k < br; ++k)
        for (std::size_t l = 0; l < bc; ++l) m[i * br + k][j * bc + l] = a[i][j] * b[k][l];
  return m;
}

inline std::vector<Complex> mat_vec(const Matrix& m, const std::vector<Complex>& v) {
  std::vector<Complex> out(m.size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) out[i] += m[i][j] * v[j];
  return out;
}

inline Matrix single_qubit_matrix(qppo::qsim::GateKind kind, double angle) {
  const Complex I{0.0, 1.0};
  const double h = angle / 2.0;
  switch (kind) {
    case qppo::qsim::GateKind::RX:
      return {{std::cos(h), -I * std::sin(h)}, {-I * std::sin(h), std::cos(h)}};
    case qppo::qsim::GateKind::RY:
      return {{std::cos(h), -std::sin(h)}, {std::sin(h), std::cos(h)}};
    case qppo::qsim::GateKind::RZ:
      return {{std::exp(-I * h), 0.0}, {0.0, std::exp(I * h)}};
    case qppo::qsim::GateKind::H: {
      const double s = 1.0 / std::sqrt(2.0);
      return {{s, s}, {s, -s}};
    }
    default:
      throw std::invalid_argument("not a single-qubit gate");
  }
}

// Embeds a single-qubit matrix on `wire` (wire 0 = most significant bit).
inline Matrix embed_single(const Matrix& u, int wire, int n_qubits) {
  Matrix m = identity(1);
  for (int w = 0; w < n_qubits; ++w) m = kron(m, w == wire ? u : identity(2));
  return m;
}

// CNOT/CZ as P0_c (x) I + P1_c (x) U_t built by Kronecker chains.
inline Matrix embed_controlled(const Matrix& u, int control, int target, int n_qubits) {
  const Matrix p0 = {{1.0, 0.0}, {0.0, 0.0}};
  const Matrix p1 = {{0.0, 0.0}, {0.0, 1.0}};
  Matrix a = identity(1), b = identity(1);
  for (int w = 0; w < n_qubits; ++w) {
    a = kron(a, w == control ? p0 : identity(2));
    b = kron(b, w == control ? p1 : (w == target ? u : identity(2)));
  }
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) a[i][j] += b[i][j];
  return a;
}

inline Matrix gate_matrix(const qppo::qsim::Gate& gate, int n_qubits) {
  using qppo::qsim::GateKind;
  switch (gate.kind) {
    case GateKind::CNOT:
      return embed_controlled({{0.0, 1.0}, {1.0, 0.0}}, gate.wire, gate.wire2, n_qubits);
    case GateKind::CZ:
      return embed_controlled({{1.0, 0.0}, {0.0, -1.0}}, gate.wire, gate.wire2, n_qubits);
    default:
      return embed_single(single_qubit_matrix(gate.kind, gate.angle), gate.wire, n_qubits);
  }
}

struct DenseResult {
  std::vector<Complex> amplitudes;
  std::vector<double> expvals;
};

inline DenseResult dense_run(std::span<const qppo::qsim::Gate> gates, int n_qubits,
                             std::span<const int> measured_wires) {
  const std::size_t dim = std::size_t{1} << n_qubits;
  std::vector<Complex> state(dim, 0.0);
  state[0] = 1.0;
  for (const auto& gate : gates) state = mat_vec(gate_matrix(gate, n_qubits), state);

  std::vector<int> wires(measured_wires.begin(), measured_wires.end());
  std::sort(wires.begin(), wires.end());

  DenseResult result;
  result.amplitudes = state;
  for (int wire : wires) {
    const Matrix z = embed_single({{1.0, 0.0}, {0.0, -1.0}}, wire, n_qubits);
    const auto zs = mat_vec(z, state);
    Complex e = 0.0;
    for (std::size_t i = 0; i < dim; ++i) e += std::conj(state[i]) * zs[i];
    result.expvals.push_back(e.real());
  }
  return result;
}

inline std::vector<qppo::qsim::Gate> random_circuit(int n_qubits, int n_gates,
                                                    qppo::Rng& rng) {
  using qppo::qsim::Gate;
  std::vector<Gate> gates;
  for (int g = 0; g < n_gates; ++g) {
    const int kind = rng.uniform_int(6);
    const int wire = rng.uniform_int(n_qubits);
    const double angle = rng.uniform(-2.0 * std::numbers::pi, 2.0 * std::numbers::pi);
    switch (kind) {
      case 0: gates.push_back(Gate::rx(wire, angle)); break;
      case 1: gates.push_back(Gate::ry(wire, angle)); break;
      case 2: gates.push_back(Gate::rz(wire, angle)); break;
      case 3: gates.push_back(Gate::h(wire)); break;
      default: {
        int other = rng.uniform_int(n_qubits - 1);
        if (other >= wire) ++other;
        gates.push_back(kind == 4 ? Gate::cnot(wire, other) : Gate::cz(wire, other));
        break;
      }
    }
  }
  return gates;
}

// Central finite differences of a scalar function over a parameter vector.
inline std::vector<double> finite_differences(
    const std::function<double(std::span<const double>)>& f, std::vector<double> params,
    double h = 1e-5) {
  std::vector<double> grad(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double plus = f(params);
    params[i] = saved - h;
    const double minus = f(params);
    params[i] = saved;
    grad[i] = (plus - minus) / (2.0 * h);
  }
  return grad;
}

inline double max_rel_error(std::span<const double> analytic, std::span<const double> reference) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max(1.0, std::abs(reference[i]));
    worst = std::max(worst, std::abs(analytic[i] - reference[i]) / denom);
  }
  return worst;
}

// GAE by direct expansion of the telescoped sum: A_t = sum_l (gamma*lambda)^l
// delta_{t+l}, cut at the first done and bootstrapping from next_value.
inline std::vector<double> brute_force_gae(std::span<const double> rewards,
                                           std::span<const std::uint8_t> dones,
                                           std::span<const double> values, double next_value,
                                           double gamma, double lambda) {
  const int n = static_cast<int>(rewards.size());
  auto delta = [&](int t) {
    const double v_next = t + 1 < n ? values[t + 1] : next_value;
    const double mask = dones[t] ? 0.0 : 1.0;
    return rewards[t] + gamma * v_next * mask - values[t];
  };
  std::vector<double> adv(n, 0.0);
  for (int t = 0; t < n; ++t) {
    double weight = 1.0;
    for (int l = t; l < n; ++l) {
      adv[t] += weight * delta(l);
      if (dones[l]) break;
      weight *= gamma * lambda;
    }
  }
  return adv;
}

// Cart-pole dynamics written independently from the physics references:
// theta_acc = (g sin - cos * temp) / (L (4/3 - m cos^2 / M)), then
// semi-implicit Euler at the same step size as the environment.
inline std::array<double, 4> reference_cartpole_step(const std::array<double, 4>& s,
                                                     double force) {
  constexpr double g = 9.8, m_cart = 1.0, m_pole = 0.1, half_len = 0.5, dt = 0.02;
  const double total = m_cart + m_pole;
  const double ml = m_pole * half_len;
  const double sin_t = std::sin(s[2]), cos_t = std::cos(s[2]);
  const double temp = (force + ml * s[3] * s[3] * sin_t) / total;
  const double theta_acc =
      (g * sin_t - cos_t * temp) / (half_len * (4.0 / 3.0 - m_pole * cos_t * cos_t / total));
  const double x_acc = temp - ml * theta_acc * cos_t / total;
  const double v = s[1] + dt * x_acc;
  const double w = s[3] + dt * theta_acc;
  return {s[0] + dt * v, v, s[2] + dt * w, w};
}

}  // namespace oracles
