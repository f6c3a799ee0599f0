#pragma once

#include "qlss/rng.hpp"
#include "qlss/types.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace qlss {

/// Thin SVD A = W diag(s) V^dagger with singular values descending.
struct SvdFactorization {
  Matrix left;          // columns u_j
  RealVector values;    // s_j >= 0, descending
  Matrix right;         // columns v_j

  /// Values below sv_zero_rel * s_max are exact zeros by convention.
  double zero_threshold() const;
  Index rank() const;
  Matrix reconstruct() const;
};

SvdFactorization svd_of(const Matrix& a);

/// One linear-system problem instance under the solver conventions:
/// ||b|| = 1, ||A|| <= 1, nonzero singular values inside [1/kappa, 1] and b
/// in the column space of A. x_min is the minimum-norm solution and
/// b_weights its left-singular-basis coefficients w_j = <u_j, b> over the
/// nonzero singular directions.
struct LinearSystemInstance {
  Matrix a;
  Vector b;
  double kappa = 1.0;
  SvdFactorization svd;
  Vector x_min;
  Vector b_weights;

  Index rows() const { return a.rows(); }
  Index cols() const { return a.cols(); }
  double x_norm() const { return x_min.norm(); }
};

/// Minimum-norm solution of A x = b via the pseudoinverse. Throws NoSolution
/// if the least-squares residual exceeds tol().residual.
Vector min_norm_solution(const Matrix& a, const Vector& b);
Vector min_norm_solution(const SvdFactorization& svd, const Vector& b);

struct SpectrumReport {
  double min_nonzero = 0.0;
  double max_value = 0.0;
  Index zero_count = 0;
  bool pass = false;
  std::string detail;
};

/// Reports min/max nonzero singular values against the [1/kappa, 1] window.
SpectrumReport spectrum_check(const LinearSystemInstance& inst);

/// Builds and validates an instance from raw data (recomputes SVD, x_min and
/// b_weights, checks every construction invariant).
LinearSystemInstance make_instance(Matrix a, Vector b, double kappa);

/// Haar-random singular vectors, log-uniform singular values with both
/// endpoints pinned; optional solution-norm target achieved by reweighting b
/// inside the column space. Deterministic per seed.
LinearSystemInstance random_instance(Index n, double kappa,
                                     std::optional<double> norm_target,
                                     std::uint64_t seed);

enum class HardCase { i, ii };

/// Hard instance with a promised norm gap between the two cases.
/// N must be a power of two (>= 4), kappa >= 3 and 0 < eps <= 1/4.
LinearSystemInstance hard_instance_family(Index n_size, double kappa, double eps,
                                          HardCase which, std::uint64_t seed);

/// Number of marked entries used by hard_instance_family for the given
/// parameters (exposed so tests can reason about the construction).
Index hard_instance_m(Index n_size, double kappa, double eps);

}  // namespace qlss
