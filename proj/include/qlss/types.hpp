#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace qlss {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Central numerical tolerances. All modules read their thresholds from
/// here so a single record documents every constant in use.
struct Tolerances {
  double sv_zero_rel = 1e-12;    // singular values below sv_zero_rel*max are exact zeros
  double reconstruction = 1e-10; // SVD round-trip and block-encoding entrywise error
  double orthogonality = 1e-10;  // kernel/column-space membership checks
  double residual = 1e-8;        // linear-system residual checks
  double unit_norm = 1e-12;      // ||b|| = 1 checks
  double spectrum = 1e-10;       // singular-value window membership
};

inline const Tolerances& tol() {
  static const Tolerances t{};
  return t;
}

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct NoSolution : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidTarget : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidParams : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct GapViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NormTooLarge : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct BadInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SearchFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct VersionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace qlss
