#pragma once

#include <complex>
#include <span>
#include <vector>

namespace qppo::qsim {

using Complex = std::complex<double>;

enum class GateKind { RX, RY, RZ, H, CNOT, CZ };

// Rotations follow the half-angle convention R_G(phi) = exp(-i phi G / 2),
// under which the parameter-shift rule with shift pi/2 is exact.
//
// Wire 0 is the most significant bit of the basis index: |q0 q1 q2 q3>
// corresponds to index (q0<<3)|(q1<<2)|(q2<<1)|q3.
struct Gate {
  GateKind kind;
  double angle = 0.0;  // rotation kinds only
  int wire = 0;        // control wire for CNOT/CZ
  int wire2 = -1;      // target wire for CNOT/CZ, unused otherwise

  static Gate rx(int wire, double angle) { return {GateKind::RX, angle, wire, -1}; }
  static Gate ry(int wire, double angle) { return {GateKind::RY, angle, wire, -1}; }
  static Gate rz(int wire, double angle) { return {GateKind::RZ, angle, wire, -1}; }
  static Gate h(int wire) { return {GateKind::H, 0.0, wire, -1}; }
  static Gate cnot(int control, int target) { return {GateKind::CNOT, 0.0, control, target}; }
  static Gate cz(int control, int target) { return {GateKind::CZ, 0.0, control, target}; }

  bool is_rotation() const {
    return kind == GateKind::RX || kind == GateKind::RY || kind == GateKind::RZ;
  }
  bool is_two_qubit() const { return kind == GateKind::CNOT || kind == GateKind::CZ; }
};

struct StateVector {
  int n_qubits = 0;
  std::vector<Complex> amplitudes;  // length 2^n_qubits

  std::size_t dim() const { return amplitudes.size(); }
};

// |0...0>. Throws std::invalid_argument outside 1 <= n_qubits <= 10.
StateVector new_state(int n_qubits);

void apply_gate_in_place(StateVector& state, const Gate& gate);
StateVector apply_gate(const StateVector& state, const Gate& gate);

// Inverse of the gate's unitary (rotations flip the angle; H/CNOT/CZ are
// self-inverse).
void apply_gate_inverse_in_place(StateVector& state, const Gate& gate);

// Pauli operator of a rotation gate's generator axis, used by adjoint-mode
// differentiation. `axis` must be RX, RY or RZ.
void apply_pauli_in_place(StateVector& state, GateKind axis, int wire);

// <psi| Z_wire |psi>, always in [-1, 1].
double expval_z(const StateVector& state, int wire);

double norm_sq(const StateVector& state);

// Applies the gates in order to |0...0> and returns expval_z for each
// measured wire in ascending wire order. measured_wires must be non-empty.
std::vector<double> run_circuit(std::span<const Gate> gates, int n_qubits,
                                std::span<const int> measured_wires);

}  // namespace qppo::qsim
