#include "qlss/circuit.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace qlss {

namespace {

Matrix expand_gate(const Gate& g, int total_wires) {
  const int k = static_cast<int>(g.wires.size());
  const Index dim = Index(1) << total_wires;
  const Index local = Index(1) << k;
  if (g.op.rows() != local || g.op.cols() != local)
    throw ShapeMismatch("gate '" + g.label + "': op size does not match wire count");
  for (int w : g.wires)
    if (w < 0 || w >= total_wires)
      throw ShapeMismatch("gate '" + g.label + "': wire outside circuit");

  // bit position of wire w in the global index (wire 0 = MSB)
  auto bit_of = [&](int w) { return total_wires - 1 - w; };

  Matrix full = Matrix::Zero(dim, dim);
  for (Index col = 0; col < dim; ++col) {
    Index lc = 0;
    for (int i = 0; i < k; ++i)
      lc = (lc << 1) | ((col >> bit_of(g.wires[i])) & 1);
    Index base = col;
    for (int i = 0; i < k; ++i) base &= ~(Index(1) << bit_of(g.wires[i]));
    for (Index lr = 0; lr < local; ++lr) {
      const Complex v = g.op(lr, lc);
      if (v == Complex(0.0, 0.0)) continue;
      Index row = base;
      for (int i = 0; i < k; ++i)
        if ((lr >> (k - 1 - i)) & 1) row |= Index(1) << bit_of(g.wires[i]);
      full(row, col) += v;
    }
  }
  return full;
}

Matrix identity(Index d) { return Matrix::Identity(d, d); }

Matrix pauli_x() {
  Matrix x(2, 2);
  x << 0, 1, 1, 0;
  return x;
}

Matrix hadamard() {
  Matrix h(2, 2);
  const double r = 1.0 / std::sqrt(2.0);
  h << r, r, r, -r;
  return h;
}

// ry(theta)|0> = cos(theta)|0> + sin(theta)|1>
Matrix ry(double theta) {
  Matrix r(2, 2);
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

// op controlled on one wire (prepended) holding `value`
Matrix controlled(const Matrix& op, int value) {
  const Index d = op.rows();
  Matrix c = Matrix::Zero(2 * d, 2 * d);
  if (value == 1) {
    c.topLeftCorner(d, d) = identity(d);
    c.bottomRightCorner(d, d) = op;
  } else {
    c.topLeftCorner(d, d) = op;
    c.bottomRightCorner(d, d) = identity(d);
  }
  return c;
}

// C_Pi NOT: X on the (prepended) target wire when the remaining wires lie in
// the image of the diagonal projector `diag` (entries 0/1)
Matrix cpi_not(const RealVector& diag) {
  const Index d = diag.size();
  Matrix op = Matrix::Zero(2 * d, 2 * d);
  for (Index j = 0; j < d; ++j) {
    if (diag(j) > 0.5) {
      op(j, d + j) = 1.0;
      op(d + j, j) = 1.0;
    } else {
      op(j, j) = 1.0;
      op(d + j, d + j) = 1.0;
    }
  }
  return op;
}

RealVector basis_projector(Index dim, Index j) {
  RealVector p = RealVector::Zero(dim);
  p(j) = 1.0;
  return p;
}

std::vector<int> range_wires(int lo, int hi) {
  std::vector<int> w;
  for (int i = lo; i < hi; ++i) w.push_back(i);
  return w;
}

std::vector<int> prepend(int w, std::vector<int> rest) {
  rest.insert(rest.begin(), w);
  return rest;
}

}  // namespace

int system_qubits_for(Index m, Index n) {
  int s = 0;
  while ((Index(1) << s) < 1 + std::max(m, n)) ++s;
  return s;
}

Matrix pad_to(const Matrix& a, Index rows, Index cols) {
  if (a.rows() > rows || a.cols() > cols) throw ShapeMismatch("pad_to: target smaller than input");
  Matrix p = Matrix::Zero(rows, cols);
  p.topLeftCorner(a.rows(), a.cols()) = a;
  return p;
}

Vector pad_to(const Vector& v, Index len) {
  if (v.size() > len) throw ShapeMismatch("pad_to: target smaller than input");
  Vector p = Vector::Zero(len);
  p.head(v.size()) = v;
  return p;
}

Matrix GateCircuit::to_matrix() const {
  if (total_wires > kMaxCircuitWires)
    throw DomainError("GateCircuit: dense assembly capped at " +
                      std::to_string(kMaxCircuitWires) + " wires");
  Matrix u = identity(dim());
  for (const auto& g : gates) u = expand_gate(g, total_wires) * u;
  return u;
}

double unitarity_error(const Matrix& u) {
  return (u.adjoint() * u - identity(u.rows())).cwiseAbs().maxCoeff();
}

BlockEncoding dilate_block_encoding(const Matrix& a) {
  Index d = 1;
  int s = 0;
  while (d < std::max<Index>({Index(1), a.rows(), a.cols()})) d <<= 1, ++s;
  const Matrix ap = pad_to(a, d, d);

  // assemble from the SVD so the result is unitary to machine precision
  // even when singular values sit exactly at 1
  Eigen::JacobiSVD<Matrix> svd(ap, Eigen::ComputeFullU | Eigen::ComputeFullV);
  RealVector sv = svd.singularValues();
  if (sv.size() && sv(0) > 1.0 + 1e-12) throw NormTooLarge("dilate_block_encoding: ||A|| > 1");
  for (Index j = 0; j < sv.size(); ++j)
    if (sv(j) > 1.0 - 1e-12) sv(j) = 1.0;  // keep exact-unitary inputs block-diagonal
  const RealVector comp = (RealVector::Ones(d) - sv.cwiseProduct(sv)).cwiseMax(0.0).cwiseSqrt();
  const Matrix& w = svd.matrixU();
  const Matrix& v = svd.matrixV();

  BlockEncoding be;
  be.system_qubits = s;
  be.ancilla_count = 1;
  be.encoded = w * sv.asDiagonal() * v.adjoint();
  be.unitary = Matrix::Zero(2 * d, 2 * d);
  be.unitary.topLeftCorner(d, d) = be.encoded;
  be.unitary.topRightCorner(d, d) = w * comp.asDiagonal() * w.adjoint();
  be.unitary.bottomLeftCorner(d, d) = v * comp.asDiagonal() * v.adjoint();
  be.unitary.bottomRightCorner(d, d) = -(v * sv.asDiagonal() * w.adjoint());
  return be;
}

Matrix state_prep_unitary(const Vector& b) {
  if (std::abs(b.norm() - 1.0) > 1e-10) throw DomainError("state_prep_unitary: ||b|| != 1");
  const Matrix bcol = b;
  Eigen::HouseholderQR<Matrix> qr(bcol);
  Matrix q = qr.householderQ();
  const Complex r00 = qr.matrixQR()(0, 0);
  q.col(0) *= r00;  // |r00| = ||b|| = 1, so this stays unitary
  return q;
}

namespace {

GateCircuit assemble_u_g(const CircuitInputs& in) {
  const int a = in.u_a.ancilla_count;
  const int s = in.u_a.system_qubits;
  GateCircuit c;
  c.name = "U_G";
  c.total_wires = 1 + a + s;
  c.ancilla_wires = 1 + a;
  const auto sys = range_wires(1 + a, c.total_wires);
  c.gates.push_back({in.u_a.unitary, range_wires(1, c.total_wires), "U_A"});
  c.gates.push_back({in.u_b.adjoint(), sys, "U_b^dag"});
  c.gates.push_back({cpi_not(basis_projector(Index(1) << s, 0)), prepend(0, sys),
                     "C_{|e0><e0|}NOT"});
  c.gates.push_back({in.u_b, sys, "U_b"});
  return c;
}

GateCircuit assemble_u_a_t(const CircuitInputs& in) {
  const int a = in.u_a.ancilla_count;
  const int s = in.u_a.system_qubits;
  if (a < 1) throw ShapeMismatch("U_At: needs at least one U_A ancilla");
  const Index ds = Index(1) << s;
  if (in.m >= ds || in.n >= ds) throw ShapeMismatch("U_At: e_m/e_n outside the s-qubit register");

  GateCircuit c;
  c.name = "U_At";
  c.total_wires = 1 + a + s;  // flag, a-1 bundle, rotation ancilla, system
  c.ancilla_wires = 1 + a;
  const int rot_wire = a;  // last U_A ancilla doubles as rotation target
  const auto sys = range_wires(1 + a, c.total_wires);

  c.gates.push_back({cpi_not(basis_projector(ds, in.n)), prepend(0, sys), "C_{|en><en|}NOT"});
  c.gates.push_back({controlled(in.u_a.unitary, 0), prepend(0, range_wires(1, c.total_wires)),
                     "anti-c U_A"});
  c.gates.push_back({controlled(ry(std::acos(1.0 / in.t)), 1), {0, rot_wire},
                     "c-ry(arccos(1/t))"});
  // CNOT chain flipping the bits where m and n differ sends e_n to e_m
  for (int bit = 0; bit < s; ++bit) {
    const Index mask = Index(1) << (s - 1 - bit);
    if (((in.m ^ in.n) & mask) != 0)
      c.gates.push_back({controlled(pauli_x(), 1), {0, 1 + a + bit}, "c-X (m^n chain)"});
  }
  c.gates.push_back({cpi_not(basis_projector(ds, in.m)), prepend(0, sys), "C_{|em><em|}NOT"});
  return c;
}

GateCircuit assemble_u_b_prime(const CircuitInputs& in) {
  const int s = static_cast<int>(std::log2(double(in.u_b.rows())) + 0.5);
  const Index ds = Index(1) << s;
  if (in.m >= ds) throw ShapeMismatch("U_bprime: e_m outside the s-qubit register");

  GateCircuit c;
  c.name = "U_bprime";
  c.total_wires = 1 + s;
  c.ancilla_wires = 1;
  const auto sys = range_wires(1, c.total_wires);

  c.gates.push_back({hadamard(), {0}, "H"});
  c.gates.push_back({controlled(in.u_b, 0), prepend(0, sys), "anti-c U_b"});
  // controlled-U_em: X on the bits where m has a 1 (prepares e_m from e_0)
  for (int bit = 0; bit < s; ++bit) {
    const Index mask = Index(1) << (s - 1 - bit);
    if ((in.m & mask) != 0)
      c.gates.push_back({controlled(pauli_x(), 1), {0, 1 + bit}, "c-X (U_em)"});
  }
  c.gates.push_back({cpi_not(basis_projector(ds, in.m)), prepend(0, sys), "C_{|em><em|}NOT"});
  return c;
}

GateCircuit assemble_u_g_t(const CircuitInputs& in) {
  const GateCircuit uat = assemble_u_a_t(in);
  const int a = in.u_a.ancilla_count;
  const int s = in.u_a.system_qubits;
  const Index ds = Index(1) << s;

  GateCircuit c;
  c.name = "U_Gt";
  c.total_wires = 1 + (a + 1) + s;  // flag, U_At ancillas, system
  c.ancilla_wires = a + 2;
  // U_At's last ancilla doubles as U_b''s ancilla, as drawn
  const auto uat_wires = range_wires(1, c.total_wires);
  const auto bp_wires = range_wires(1 + a, c.total_wires);
  const Matrix u_bp = assemble_u_b_prime(in).to_matrix();

  c.gates.push_back({uat.to_matrix(), uat_wires, "U_At"});
  c.gates.push_back({u_bp.adjoint(), bp_wires, "U_bprime^dag"});
  RealVector proj = RealVector::Zero(2 * ds);
  proj(0) = 1.0;  // b'-ancilla |0> and system |e0>
  c.gates.push_back({cpi_not(proj), prepend(0, bp_wires), "C_{|0 e0><0 e0|}NOT"});
  c.gates.push_back({u_bp, bp_wires, "U_bprime"});
  return c;
}

GateCircuit assemble_u_bar_a_sigma(const CircuitInputs& in) {
  const int a = in.u_a.ancilla_count;
  const int s = in.u_a.system_qubits;
  if (a < 1) throw ShapeMismatch("U_barAsigma: needs at least one U_A ancilla");
  const Index ds = Index(1) << s;
  const double f = in.f_sigma;

  GateCircuit c;
  c.name = "U_barAsigma";
  // flag, a-1 bundle, CPiNOT target ancilla, system, extra system qubit
  c.total_wires = 1 + a + s + 1;
  c.ancilla_wires = 1 + a;
  const int extra = c.total_wires - 1;
  const int pi_target = a;  // U_A's last ancilla
  const auto sys = range_wires(1 + a, 1 + a + s);

  c.gates.push_back({controlled(in.u_a.unitary, 0),
                     prepend(extra, range_wires(1, 1 + a + s)), "anti-c U_A"});
  // flips the pi_target ancilla when extra = 1 and the system index is >= m
  RealVector proj = RealVector::Zero(ds * 2);
  for (Index j = in.m; j < ds; ++j) proj(2 * j + 1) = 1.0;
  std::vector<int> proj_wires = sys;
  proj_wires.push_back(extra);
  c.gates.push_back({cpi_not(proj), prepend(pi_target, proj_wires), "C_{Pi>=m}NOT"});
  c.gates.push_back({ry(-std::acos(std::sqrt(std::max(0.0, 1.0 - f * f)))), {extra},
                     "exp(-i arccos(sqrt(1-f^2)) Y)"});
  c.gates.push_back({controlled(pauli_x(), 1), {extra, 0}, "c-X"});
  return c;
}

GateCircuit assemble_padded_u_a(const CircuitInputs& in) {
  const int a = in.u_a.ancilla_count;
  const int s = in.u_a.system_qubits;

  GateCircuit c;
  c.name = "padded_U_A";
  c.total_wires = 1 + a + s + 1;  // flag, U_A ancillas, system, extra system qubit
  c.ancilla_wires = 1 + a;
  const int extra = c.total_wires - 1;

  RealVector anc_zero = RealVector::Zero(Index(1) << a);
  anc_zero(0) = 1.0;
  c.gates.push_back({cpi_not(anc_zero), prepend(0, range_wires(1, 1 + a)),
                     "C_{|0..0><0..0|}NOT"});
  c.gates.push_back({in.u_a.unitary, range_wires(1, 1 + a + s), "U_A"});
  c.gates.push_back({cpi_not(basis_projector(2, 0)), {0, extra}, "C_{|0><0|}NOT"});
  return c;
}

}  // namespace

GateCircuit assemble_circuit(CircuitKind kind, const CircuitInputs& in) {
  switch (kind) {
    case CircuitKind::u_g: return assemble_u_g(in);
    case CircuitKind::u_a_t: return assemble_u_a_t(in);
    case CircuitKind::u_b_prime: return assemble_u_b_prime(in);
    case CircuitKind::u_g_t: return assemble_u_g_t(in);
    case CircuitKind::u_bar_a_sigma: return assemble_u_bar_a_sigma(in);
    case CircuitKind::padded_u_a: return assemble_padded_u_a(in);
  }
  throw DomainError("assemble_circuit: unknown kind");
}

double verify_block_encoding(const GateCircuit& circuit, const Matrix& target,
                             int ancilla_count) {
  const Matrix u = circuit.to_matrix();
  const Index d_sys = circuit.dim() >> ancilla_count;
  if (target.rows() > d_sys || target.cols() > d_sys)
    throw ShapeMismatch("verify_block_encoding: target larger than system block");
  const Matrix block = u.topLeftCorner(d_sys, d_sys);
  return (block - pad_to(target, d_sys, d_sys)).cwiseAbs().maxCoeff();
}

}  // namespace qlss
