#pragma once

#include "qlss/instance.hpp"
#include "qlss/types.hpp"

#include <optional>

namespace qlss {

/// Augmented system A_t x_t = b' with the uncoupled extra variable: the
/// lower-right corner of A_t is 1/t and theta_t = arctan(||x||/t) is the
/// angle between e_n and x_t.
struct AugmentedSystem {
  double t = 1.0;
  Matrix a_t;        // (m+1) x (n+1)
  Vector b_prime;    // length m+1
  Vector x_t;        // length n+1
  double theta_t = 0.0;
};

/// G = Q_b A = (I - b b^dagger) A; x_min joins the kernel.
Matrix build_G(const LinearSystemInstance& inst);
Matrix build_G(const Matrix& a, const Vector& b);

AugmentedSystem augment(const LinearSystemInstance& inst, double t);
/// Generic form used by the homotopy pipeline: augments any (A, b, x) triple.
AugmentedSystem augment(const Matrix& a, const Vector& b, const Vector& x, double t,
                        double kappa);

/// G_t = Q_{b'} A_t; x_t joins the kernel.
Matrix build_G_t(const AugmentedSystem& aug);

/// Adiabatic schedule f with f(1/kappa) = 0 and f(1) = 1. kappa = 1 is the
/// degenerate family; by convention f = 1 there.
double schedule_f(double sigma, double kappa);

/// One member of the homotopy family A_bar_sigma x_bar_sigma = b, stored at
/// its dense-minimal m x (n+m) size; with t supplied, the augmented
/// variant A_bar_{sigma,t} (m+1) x (n+m+1) against b'.
struct HomotopyPoint {
  double sigma = 1.0;
  double f_value = 1.0;
  Matrix a_bar;
  Vector rhs;
  Vector x_bar;
  double norm_x_bar = 1.0;
  std::optional<double> t;
  double theta_t = 0.0;
};

HomotopyPoint homotopy_point(const LinearSystemInstance& inst, double sigma,
                             std::optional<double> t = std::nullopt);

/// Uses the optionally supplied family condition bound instead of
/// inst.kappa (the solvers round kappa up to a power of two).
HomotopyPoint homotopy_point_with_kappa(const LinearSystemInstance& inst, double kappa,
                                        double sigma,
                                        std::optional<double> t = std::nullopt);

/// ||x_bar_sigma|| / ||x_bar_sigma_prime|| for 1/kappa <= sigma <= sigma' <= 1.
double homotopy_norm_ratio(const LinearSystemInstance& inst, double sigma,
                           double sigma_prime);

/// Closed-form ||x_bar_sigma|| from the instance SVD and b-weights.
double homotopy_norm(const LinearSystemInstance& inst, double kappa, double sigma);

}  // namespace qlss
