#include "qlss/instance.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <vector>

namespace qlss {

namespace {

Matrix haar_unitary(Index n, Rng& rng) {
  Matrix g(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) g(i, j) = rng.complex_normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  // fix phases so the distribution is Haar
  for (Index j = 0; j < n; ++j) {
    Complex d = r(j, j);
    double m = std::abs(d);
    q.col(j) *= (m > 0) ? d / m : Complex(1, 0);
  }
  return q;
}

void check_finite(const Matrix& a, const char* what) {
  if (!a.allFinite()) throw InvalidParams(std::string(what) + ": non-finite entries");
}

}  // namespace

double SvdFactorization::zero_threshold() const {
  const double smax = values.size() ? values(0) : 0.0;
  return tol().sv_zero_rel * smax;
}

Index SvdFactorization::rank() const {
  const double thr = zero_threshold();
  Index r = 0;
  for (Index j = 0; j < values.size(); ++j)
    if (values(j) > thr) ++r;
  return r;
}

Matrix SvdFactorization::reconstruct() const {
  return left * values.asDiagonal() * right.adjoint();
}

SvdFactorization svd_of(const Matrix& a) {
  check_finite(a, "svd_of");
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return SvdFactorization{svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

Vector min_norm_solution(const SvdFactorization& svd, const Vector& b) {
  const double thr = svd.zero_threshold();
  Vector x = Vector::Zero(svd.right.rows());
  for (Index j = 0; j < svd.values.size(); ++j) {
    if (svd.values(j) <= thr) continue;
    x += svd.right.col(j) * (svd.left.col(j).dot(b) / svd.values(j));
  }
  return x;
}

Vector min_norm_solution(const Matrix& a, const Vector& b) {
  if (a.rows() != b.size()) throw ShapeMismatch("min_norm_solution: size mismatch");
  const SvdFactorization svd = svd_of(a);
  Vector x = min_norm_solution(svd, b);
  const double resid = (a * x - b).norm();
  if (resid > tol().residual)
    throw NoSolution("min_norm_solution: residual " + std::to_string(resid) +
                     " exceeds tolerance (b outside column space)");
  return x;
}

SpectrumReport spectrum_check(const LinearSystemInstance& inst) {
  SpectrumReport rep;
  const auto& s = inst.svd.values;
  const double thr = inst.svd.zero_threshold();
  rep.max_value = s.size() ? s(0) : 0.0;
  rep.min_nonzero = 0.0;
  for (Index j = 0; j < s.size(); ++j) {
    if (s(j) > thr)
      rep.min_nonzero = s(j);
    else
      ++rep.zero_count;
  }
  const double slack = tol().spectrum;
  rep.pass = rep.max_value <= 1.0 + slack &&
             (rep.min_nonzero == 0.0 || rep.min_nonzero >= 1.0 / inst.kappa - slack);
  if (!rep.pass)
    rep.detail = "nonzero singular values [" + std::to_string(rep.min_nonzero) + ", " +
                 std::to_string(rep.max_value) + "] violate [1/kappa, 1]";
  return rep;
}

LinearSystemInstance make_instance(Matrix a, Vector b, double kappa) {
  check_finite(a, "make_instance A");
  if (!b.allFinite()) throw InvalidParams("make_instance b: non-finite entries");
  if (a.rows() != b.size()) throw ShapeMismatch("make_instance: A rows != b length");
  if (!(kappa >= 1.0)) throw InvalidParams("make_instance: kappa < 1");

  LinearSystemInstance inst;
  inst.a = std::move(a);
  inst.b = std::move(b);
  inst.kappa = kappa;
  inst.svd = svd_of(inst.a);

  if (std::abs(inst.b.norm() - 1.0) > tol().unit_norm)
    throw InvalidParams("make_instance: ||b|| != 1");
  const SpectrumReport rep = spectrum_check(inst);
  if (!rep.pass) throw InvalidParams("make_instance: " + rep.detail);

  inst.x_min = min_norm_solution(inst.svd, inst.b);
  if ((inst.a * inst.x_min - inst.b).norm() > tol().residual)
    throw InvalidParams("make_instance: b outside column space of A");

  const Index k = inst.svd.values.size();
  inst.b_weights = Vector::Zero(k);
  const double thr = inst.svd.zero_threshold();
  for (Index j = 0; j < k; ++j)
    if (inst.svd.values(j) > thr) inst.b_weights(j) = inst.svd.left.col(j).dot(inst.b);
  return inst;
}

LinearSystemInstance random_instance(Index n, double kappa,
                                     std::optional<double> norm_target,
                                     std::uint64_t seed) {
  if (n < 2) throw InvalidParams("random_instance: n < 2");
  if (!(kappa >= 1.0)) throw InvalidParams("random_instance: kappa < 1");
  if (norm_target && !(*norm_target >= 1.0 && *norm_target <= kappa))
    throw InvalidTarget("random_instance: norm_target outside [1, kappa]");

  Rng rng(seed);
  const Matrix u = haar_unitary(n, rng);
  const Matrix v = haar_unitary(n, rng);

  RealVector s(n);
  if (kappa == 1.0) {
    s.setOnes();
  } else {
    // log-uniform in [1/kappa, 1], endpoints pinned so kappa is tight
    s(0) = 1.0;
    s(n - 1) = 1.0 / kappa;
    const double lo = -std::log(kappa);
    for (Index j = 1; j + 1 < n; ++j) s(j) = std::exp(rng.uniform(lo, 0.0));
    std::sort(s.data(), s.data() + n, std::greater<double>());
  }
  const Matrix a = u * s.asDiagonal() * v.adjoint();

  // weights of b in the left singular basis
  Vector w(n);
  for (Index j = 0; j < n; ++j) w(j) = rng.complex_normal();
  w.normalize();

  if (norm_target && kappa > 1.0) {
    // |w_j(t)|^2 ~ |w_j|^2 * s_j^(2t); the resulting solution norm is
    // monotone decreasing in t, so bisect on the tilt exponent.
    const double target2 = (*norm_target) * (*norm_target);
    auto norm2_of = [&](double t) {
      double num = 0.0, den = 0.0;
      for (Index j = 0; j < n; ++j) {
        const double p = std::norm(w(j)) * std::pow(s(j), 2.0 * t);
        num += p / (s(j) * s(j));
        den += p;
      }
      return num / den;
    };
    double lo = -600.0 / std::log(kappa), hi = -lo;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (norm2_of(mid) > target2)
        lo = mid;
      else
        hi = mid;
    }
    const double t = 0.5 * (lo + hi);
    for (Index j = 0; j < n; ++j) w(j) *= std::pow(s(j), t);
    w.normalize();
  }

  const Vector b = (u * w).normalized();
  return make_instance(a, b, kappa);
}

Index hard_instance_m(Index n_size, double kappa, double eps) {
  const Index n_half = n_size / 2;
  const double raw = std::max(1.0, 4.0 * static_cast<double>(n_size) * eps / kappa);
  Index m = 2 * static_cast<Index>(std::ceil(raw - 1e-12));
  return std::min(n_half, m);
}

LinearSystemInstance hard_instance_family(Index n_size, double kappa, double eps,
                                          HardCase which, std::uint64_t seed) {
  if (n_size < 4 || (n_size & (n_size - 1)) != 0)
    throw InvalidParams("hard_instance_family: N must be a power of two >= 4");
  if (!(kappa >= 3.0)) throw InvalidParams("hard_instance_family: kappa < 3");
  if (!(eps > 0.0 && eps <= 0.25)) throw InvalidParams("hard_instance_family: eps outside (0, 1/4]");

  const Index n_half = n_size / 2;
  const Index m = hard_instance_m(n_size, kappa, eps);
  if ((m + n_half) % 2 != 0) throw InvalidParams("hard_instance_family: M+N' parity violated");
  const Index marked = (n_half + m) / 2;

  // y has exactly `marked` entries equal to 0 (case i) or 1 (case ii) at
  // seeded positions; the remaining entries take the other value.
  Rng rng(seed);
  std::vector<Index> perm(n_half);
  for (Index i = 0; i < n_half; ++i) perm[i] = i;
  for (Index i = n_half - 1; i > 0; --i) {
    const Index j = static_cast<Index>(rng.next() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[i], perm[j]);
  }
  std::vector<int> y(n_half, which == HardCase::i ? 1 : 0);
  for (Index i = 0; i < marked; ++i) y[perm[i]] = (which == HardCase::i) ? 0 : 1;

  RealVector d(n_half);
  for (Index i = 0; i < n_half; ++i) d(i) = (y[i] == 0) ? 1.0 : -1.0;

  const Matrix eye = Matrix::Identity(n_half, n_half);
  Vector ones = Vector::Constant(n_half, Complex(1.0 / std::sqrt(double(n_half)), 0.0));
  const Matrix c = eye - (1.0 - 1.0 / kappa) * (ones * ones.adjoint());

  // A = [I 0; 0 D] H [C 0; 0 I] H [I 0; 0 D] with H the blockwise Hadamard;
  // the unitary factors pin the singular values to those of C and I
  Matrix a(n_size, n_size);
  const Matrix dd = d.cast<Complex>().asDiagonal();
  a.topLeftCorner(n_half, n_half) = 0.5 * (c + eye);
  a.topRightCorner(n_half, n_half) = 0.5 * (c - eye) * dd;
  a.bottomLeftCorner(n_half, n_half) = 0.5 * dd * (c - eye);
  a.bottomRightCorner(n_half, n_half) = 0.5 * dd * (c + eye) * dd;

  const double ratio = eps * static_cast<double>(n_size) / static_cast<double>(m);
  Vector b(n_size);
  b.head(n_half) = ones;
  b.tail(n_half) = ratio * ones;
  b /= std::sqrt(1.0 + ratio * ratio);

  return make_instance(std::move(a), std::move(b), kappa);
}

}  // namespace qlss
