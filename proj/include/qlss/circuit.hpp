#pragma once

#include "qlss/types.hpp"

#include <string>
#include <vector>

namespace qlss {

/// One gate: an operator on the listed wires (wires[0] is the most
/// significant bit of the local index). Wire 0 is the top wire of the
/// circuit and the most significant bit of the global index.
struct Gate {
  Matrix op;
  std::vector<int> wires;
  std::string label;
};

struct GateCircuit {
  int total_wires = 0;
  int ancilla_wires = 0;  // always the top wires
  std::vector<Gate> gates;
  std::string name;

  Index dim() const { return Index(1) << total_wires; }
  /// Dense product of the gate list (time order = list order).
  Matrix to_matrix() const;
};

/// Dense assembly is capped here (dimension 2^12); the acceptance suites
/// stay at or below 8 wires.
inline constexpr int kMaxCircuitWires = 12;

struct BlockEncoding {
  Matrix unitary;
  int ancilla_count = 0;
  int system_qubits = 0;
  Matrix encoded;
};

/// Exact one-ancilla unitary dilation of a contraction; A is zero-padded to
/// the next power of two first. Throws NormTooLarge if ||A|| > 1 + 1e-12.
BlockEncoding dilate_block_encoding(const Matrix& a);

/// Unitary with U e_0 = b (deterministic QR-based completion); ||b|| must be 1.
Matrix state_prep_unitary(const Vector& b);

enum class CircuitKind { u_g, u_a_t, u_b_prime, u_g_t, u_bar_a_sigma, padded_u_a };

/// Everything the circuit builders can ask for: u_a is the given
/// block-encoding of the (padded) matrix, u_b the state-preparation unitary
/// on s qubits, m/n the semantic shape, t the augmentation parameter and
/// f_sigma the schedule value f(sigma).
struct CircuitInputs {
  BlockEncoding u_a;
  Matrix u_b;
  Index m = 0;
  Index n = 0;
  double t = 1.0;
  double f_sigma = 1.0;
};

GateCircuit assemble_circuit(CircuitKind kind, const CircuitInputs& in);

/// Multiplies the gates, sandwiches the ancilla-zero block and returns the
/// max entrywise deviation from the (zero-padded) target.
double verify_block_encoding(const GateCircuit& circuit, const Matrix& target,
                             int ancilla_count);

/// Max entrywise deviation of U^dag U from the identity.
double unitarity_error(const Matrix& u);

/// Number of system qubits the encoding convention assigns to an m x n
/// instance: ceil(log2(1 + max(m, n))), one slot spare for augmentation.
int system_qubits_for(Index m, Index n);

Matrix pad_to(const Matrix& a, Index rows, Index cols);
Vector pad_to(const Vector& v, Index len);

}  // namespace qlss
