#include "qlss/system.hpp"

#include <cmath>

namespace qlss {

Matrix build_G(const Matrix& a, const Vector& b) {
  return a - b * (b.adjoint() * a);
}

Matrix build_G(const LinearSystemInstance& inst) { return build_G(inst.a, inst.b); }

AugmentedSystem augment(const Matrix& a, const Vector& b, const Vector& x, double t,
                        double kappa) {
  if (!(t >= 1.0 - 1e-12 && t <= kappa * (1.0 + 1e-12)))
    throw DomainError("augment: t outside [1, kappa]");
  const Index m = a.rows();
  const Index n = a.cols();
  const double inv_sqrt2 = 0.70710678118654752440084436210485;

  AugmentedSystem aug;
  aug.t = t;
  aug.a_t = Matrix::Zero(m + 1, n + 1);
  aug.a_t.topLeftCorner(m, n) = a;
  aug.a_t(m, n) = Complex(1.0 / t, 0.0);

  aug.b_prime = Vector::Zero(m + 1);
  aug.b_prime.head(m) = b;
  aug.b_prime(m) = Complex(1.0, 0.0);
  aug.b_prime *= inv_sqrt2;

  aug.x_t = Vector::Zero(n + 1);
  aug.x_t.head(n) = x;
  aug.x_t(n) = Complex(t, 0.0);
  aug.x_t *= inv_sqrt2;

  aug.theta_t = std::atan2(x.norm(), t);
  return aug;
}

AugmentedSystem augment(const LinearSystemInstance& inst, double t) {
  return augment(inst.a, inst.b, inst.x_min, t, inst.kappa);
}

Matrix build_G_t(const AugmentedSystem& aug) {
  return build_G(aug.a_t, aug.b_prime);
}

double schedule_f(double sigma, double kappa) {
  if (!(kappa >= 1.0)) throw DomainError("schedule_f: kappa < 1");
  if (kappa == 1.0) return 1.0;  // degenerate family
  const double lo = 1.0 / kappa;
  if (sigma < lo - 1e-12 || sigma > 1.0 + 1e-12)
    throw DomainError("schedule_f: sigma outside [1/kappa, 1]");
  const double k2 = kappa * kappa;
  const double val = (sigma * sigma * k2 - 1.0) / (k2 - 1.0);
  return std::sqrt(std::max(0.0, std::min(1.0, val)));
}

double homotopy_norm(const LinearSystemInstance& inst, double kappa, double sigma) {
  const double f = schedule_f(sigma, kappa);
  const double f2 = f * f;
  double acc = 0.0;
  const double thr = inst.svd.zero_threshold();
  for (Index j = 0; j < inst.svd.values.size(); ++j) {
    if (inst.svd.values(j) <= thr) continue;
    const double s2 = inst.svd.values(j) * inst.svd.values(j);
    acc += std::norm(inst.b_weights(j)) / (f2 + (1.0 - f2) * s2);
  }
  return std::sqrt(acc);
}

HomotopyPoint homotopy_point_with_kappa(const LinearSystemInstance& inst, double kappa,
                                        double sigma, std::optional<double> t) {
  const Index m = inst.rows();
  const Index n = inst.cols();
  const double f = schedule_f(sigma, kappa);
  const double f2 = f * f;
  const double g = std::sqrt(std::max(0.0, 1.0 - f2));

  HomotopyPoint pt;
  pt.sigma = sigma;
  pt.f_value = f;

  Matrix a_bar = Matrix::Zero(m, n + m);
  a_bar.leftCols(n) = g * inst.a;
  a_bar.rightCols(m) = f * Matrix::Identity(m, m);

  // x_bar from the inverted singular values applied to the b-decomposition
  Vector x_bar = Vector::Zero(n + m);
  const double thr = inst.svd.zero_threshold();
  double acc = 0.0;
  for (Index j = 0; j < inst.svd.values.size(); ++j) {
    const double s = inst.svd.values(j);
    if (s <= thr) continue;
    const double denom = f2 + (1.0 - f2) * s * s;
    const Complex w = inst.b_weights(j);
    x_bar.head(n) += (w * g * s / denom) * inst.svd.right.col(j);
    x_bar.tail(m) += (w * f / denom) * inst.svd.left.col(j);
    acc += std::norm(w) / denom;
  }
  pt.norm_x_bar = std::sqrt(acc);

  if (t) {
    if (!(*t >= 1.0 - 1e-12 && *t <= 1.0 / sigma * (1.0 + 1e-12)))
      throw DomainError("homotopy_point: t outside [1, 1/sigma]");
    // augmented variant: the extra column sits between the A-block and the
    // identity block, the extra row at the bottom
    pt.a_bar = Matrix::Zero(m + 1, n + m + 1);
    pt.a_bar.topLeftCorner(m, n) = a_bar.leftCols(n);
    pt.a_bar.block(0, n + 1, m, m) = a_bar.rightCols(m);
    pt.a_bar(m, n) = Complex(1.0 / *t, 0.0);

    pt.rhs = Vector::Zero(m + 1);
    pt.rhs.head(m) = inst.b;
    pt.rhs(m) = Complex(1.0, 0.0);
    pt.rhs /= std::sqrt(2.0);

    pt.x_bar = Vector::Zero(n + m + 1);
    pt.x_bar.head(n) = x_bar.head(n);
    pt.x_bar(n) = Complex(*t, 0.0);
    pt.x_bar.tail(m) = x_bar.tail(m);
    pt.x_bar /= std::sqrt(2.0);

    pt.t = *t;
    pt.theta_t = std::atan2(pt.norm_x_bar, *t);
  } else {
    pt.a_bar = std::move(a_bar);
    pt.rhs = inst.b;
    pt.x_bar = std::move(x_bar);
  }
  return pt;
}

HomotopyPoint homotopy_point(const LinearSystemInstance& inst, double sigma,
                             std::optional<double> t) {
  return homotopy_point_with_kappa(inst, inst.kappa, sigma, t);
}

double homotopy_norm_ratio(const LinearSystemInstance& inst, double sigma,
                           double sigma_prime) {
  if (!(sigma <= sigma_prime))
    throw DomainError("homotopy_norm_ratio: sigma > sigma_prime");
  const double lo = homotopy_norm(inst, inst.kappa, sigma);
  const double hi = homotopy_norm(inst, inst.kappa, sigma_prime);
  return lo / hi;
}

}  // namespace qlss
