#include "qppo/qsim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qppo::qsim {

namespace {

constexpr Complex kI{0.0, 1.0};

void check_wire(const StateVector& state, int wire) {
  if (wire < 0 || wire >= state.n_qubits) {
    throw std::invalid_argument("gate wire " + std::to_string(wire) +
                                " out of range for " + std::to_string(state.n_qubits) +
                                " qubits");
  }
}

// Bit of `index` on `wire`, with wire 0 as the most significant bit.
inline int wire_bit(std::size_t index, int wire, int n_qubits) {
  return static_cast<int>((index >> (n_qubits - 1 - wire)) & 1u);
}

inline std::size_t wire_mask(int wire, int n_qubits) {
  return std::size_t{1} << (n_qubits - 1 - wire);
}

// Applies the 2x2 matrix {{m00, m01}, {m10, m11}} on `wire`.
void apply_single(StateVector& state, int wire, Complex m00, Complex m01, Complex m10,
                  Complex m11) {
  const std::size_t mask = wire_mask(wire, state.n_qubits);
  const std::size_t dim = state.dim();
  for (std::size_t i = 0; i < dim; ++i) {
    if ((i & mask) == 0) {
      const std::size_t j = i | mask;
      const Complex a = state.amplitudes[i];
      const Complex b = state.amplitudes[j];
      state.amplitudes[i] = m00 * a + m01 * b;
      state.amplitudes[j] = m10 * a + m11 * b;
    }
  }
}

void apply_gate_impl(StateVector& state, const Gate& gate, double angle) {
  check_wire(state, gate.wire);
  if (gate.is_two_qubit()) {
    check_wire(state, gate.wire2);
    if (gate.wire == gate.wire2) {
      throw std::invalid_argument("two-qubit gate wires must be distinct");
    }
  }

  switch (gate.kind) {
    case GateKind::RX: {
      const double c = std::cos(angle / 2.0);
      const double s = std::sin(angle / 2.0);
      apply_single(state, gate.wire, c, -kI * s, -kI * s, c);
      break;
    }
    case GateKind::RY: {
      const double c = std::cos(angle / 2.0);
      const double s = std::sin(angle / 2.0);
      apply_single(state, gate.wire, c, -s, s, c);
      break;
    }
    case GateKind::RZ: {
      const Complex e_neg = std::exp(-kI * (angle / 2.0));
      const Complex e_pos = std::exp(kI * (angle / 2.0));
      apply_single(state, gate.wire, e_neg, 0.0, 0.0, e_pos);
      break;
    }
    case GateKind::H: {
      const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
      apply_single(state, gate.wire, inv_sqrt2, inv_sqrt2, inv_sqrt2, -inv_sqrt2);
      break;
    }
    case GateKind::CNOT: {
      const std::size_t cmask = wire_mask(gate.wire, state.n_qubits);
      const std::size_t tmask = wire_mask(gate.wire2, state.n_qubits);
      const std::size_t dim = state.dim();
      for (std::size_t i = 0; i < dim; ++i) {
        if ((i & cmask) != 0 && (i & tmask) == 0) {
          std::swap(state.amplitudes[i], state.amplitudes[i | tmask]);
        }
      }
      break;
    }
    case GateKind::CZ: {
      const std::size_t cmask = wire_mask(gate.wire, state.n_qubits);
      const std::size_t tmask = wire_mask(gate.wire2, state.n_qubits);
      const std::size_t dim = state.dim();
      for (std::size_t i = 0; i < dim; ++i) {
        if ((i & cmask) != 0 && (i & tmask) != 0) {
          state.amplitudes[i] = -state.amplitudes[i];
        }
      }
      break;
    }
  }
}

}  // namespace

StateVector new_state(int n_qubits) {
  if (n_qubits < 1 || n_qubits > 10) {
    throw std::invalid_argument("n_qubits must be in [1, 10], got " +
                                std::to_string(n_qubits));
  }
  StateVector state;
  state.n_qubits = n_qubits;
  state.amplitudes.assign(std::size_t{1} << n_qubits, Complex{0.0, 0.0});
  state.amplitudes[0] = Complex{1.0, 0.0};
  return state;
}

void apply_gate_in_place(StateVector& state, const Gate& gate) {
  apply_gate_impl(state, gate, gate.angle);
}

StateVector apply_gate(const StateVector& state, const Gate& gate) {
  StateVector out = state;
  apply_gate_in_place(out, gate);
  return out;
}

void apply_gate_inverse_in_place(StateVector& state, const Gate& gate) {
  if (gate.is_rotation()) {
    apply_gate_impl(state, gate, -gate.angle);
  } else {
    apply_gate_impl(state, gate, gate.angle);
  }
}

void apply_pauli_in_place(StateVector& state, GateKind axis, int wire) {
  switch (axis) {
    case GateKind::RX:
      apply_single(state, wire, 0.0, 1.0, 1.0, 0.0);
      break;
    case GateKind::RY:
      apply_single(state, wire, 0.0, -kI, kI, 0.0);
      break;
    case GateKind::RZ:
      apply_single(state, wire, 1.0, 0.0, 0.0, -1.0);
      break;
    default:
      throw std::invalid_argument("apply_pauli_in_place requires a rotation axis");
  }
}

double expval_z(const StateVector& state, int wire) {
  check_wire(state, wire);
  double value = 0.0;
  const std::size_t dim = state.dim();
  for (std::size_t i = 0; i < dim; ++i) {
    const double p = std::norm(state.amplitudes[i]);
    value += wire_bit(i, wire, state.n_qubits) == 0 ? p : -p;
  }
  return value;
}

double norm_sq(const StateVector& state) {
  double total = 0.0;
  for (const Complex& a : state.amplitudes) total += std::norm(a);
  return total;
}

std::vector<double> run_circuit(std::span<const Gate> gates, int n_qubits,
                                std::span<const int> measured_wires) {
  if (measured_wires.empty()) {
    throw std::invalid_argument("measured_wires must not be empty");
  }
  StateVector state = new_state(n_qubits);
  for (const Gate& gate : gates) apply_gate_in_place(state, gate);

  std::vector<int> wires(measured_wires.begin(), measured_wires.end());
  std::sort(wires.begin(), wires.end());
  wires.erase(std::unique(wires.begin(), wires.end()), wires.end());

  std::vector<double> values;
  values.reserve(wires.size());
  for (int wire : wires) values.push_back(expval_z(state, wire));
  return values;
}

}  // namespace qppo::qsim
