#include "qlss/filter.hpp"

#include <algorithm>
#include <cmath>

namespace qlss {

namespace {

double acosh_safe(double z) { return std::acosh(std::max(z, 1.0)); }

// log(cosh(w)) without overflow for large w
double log_cosh(double w) {
  w = std::abs(w);
  return w + std::log1p(std::exp(-2.0 * w)) - 0.6931471805599453094172321214581766;
}

double cheb_arg_center(double delta, double x) {
  return (1.0 + delta * delta - 2.0 * x * x) / (1.0 - delta * delta);
}

double cheb_arg_edge(double delta) {
  return (1.0 + delta * delta) / (1.0 - delta * delta);
}

}  // namespace

double chebyshev_eval(long ell, double z) {
  if (ell < 0) throw DomainError("chebyshev_eval: negative degree");
  if (z > 1.0) return std::cosh(static_cast<double>(ell) * std::acosh(z));
  if (z < -1.0) {
    const double v = std::cosh(static_cast<double>(ell) * std::acosh(-z));
    return (ell % 2 == 0) ? v : -v;
  }
  return std::cos(static_cast<double>(ell) * std::acos(z));
}

double chebyshev_log_for_z_ge1(long ell, double z) {
  if (ell < 0) throw DomainError("chebyshev_log_for_z_ge1: negative degree");
  if (z < 1.0) throw DomainError("chebyshev_log_for_z_ge1: z < 1");
  return log_cosh(static_cast<double>(ell) * acosh_safe(z));
}

long select_degree(double delta, double eta) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("select_degree: delta outside (0,1)");
  if (!(eta > 0.0 && eta <= 1.0)) throw DomainError("select_degree: eta outside (0,1]");
  const double num = acosh_safe(1.0 / eta);
  const double den = acosh_safe(cheb_arg_edge(delta));
  const long ell = static_cast<long>(std::ceil(num / den - 1e-12));
  return std::max<long>(1, ell);
}

double filter_tail_bound(const FilterSpec& spec) {
  // 1 / T_ell((1+d^2)/(1-d^2)), computed in log space so huge degrees do not
  // overflow; underflow to 0 is the right answer there.
  const double logT = chebyshev_log_for_z_ge1(spec.ell, cheb_arg_edge(spec.delta));
  return std::exp(-logT);
}

double filter_eval_projection(double delta, long ell, double x) {
  if (std::abs(x) > 1.0 + 1e-12) throw DomainError("filter_eval: |x| > 1");
  x = std::clamp(x, -1.0, 1.0);
  const double arg = cheb_arg_center(delta, x);
  const double log_den = chebyshev_log_for_z_ge1(ell, cheb_arg_edge(delta));
  if (arg > 1.0) {
    // both numerator and denominator grow like cosh; take the ratio in logs
    const double log_num = chebyshev_log_for_z_ge1(ell, arg);
    return std::exp(log_num - log_den);
  }
  const double num = std::cos(static_cast<double>(ell) * std::acos(std::clamp(arg, -1.0, 1.0)));
  return num * std::exp(-log_den);
}

double filter_eval_reflection(double delta, long ell, double x) {
  const double f = filter_eval_projection(delta, ell, x);
  const double f_edge = std::exp(-chebyshev_log_for_z_ge1(ell, cheb_arg_edge(delta)));
  return (2.0 * f - 1.0 + f_edge) / (1.0 + f_edge);
}

double filter_eval(const FilterSpec& spec, double x) {
  return spec.kind == FilterKind::projection ? filter_eval_projection(spec.delta, spec.ell, x)
                                             : filter_eval_reflection(spec.delta, spec.ell, x);
}

FilterSpec make_filter(double delta, double eta, FilterKind kind) {
  return FilterSpec{delta, eta, select_degree(delta, eta), kind};
}

long pipeline_half_degree(double kappa, double eta) {
  if (!(kappa >= 1.0)) throw DomainError("pipeline_half_degree: kappa < 1");
  if (!(eta > 0.0 && eta <= 1.0)) throw DomainError("pipeline_half_degree: eta outside (0,1]");
  const long ell = static_cast<long>(std::ceil(0.5 * kappa * std::log(2.0 / eta) - 1e-12));
  return std::max<long>(1, ell);
}

FilterSpec pipeline_filter(double kappa, double eta, FilterKind kind) {
  if (!(kappa >= 1.0)) throw DomainError("pipeline_filter: kappa < 1");
  // delta = 1 is degenerate (kappa = 1 means every nonzero singular value is
  // exactly 1); nudge the window so the closed forms stay defined.
  const double delta = 1.0 / std::max(kappa, 1.0 + 1e-9);
  return FilterSpec{delta, eta, pipeline_half_degree(kappa, eta), kind};
}

}  // namespace qlss
