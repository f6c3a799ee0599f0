#pragma once

#include "qlss/types.hpp"

namespace qlss {

enum class FilterKind { projection, reflection };

/// Chebyshev filter acting on singular values: width delta, tail target eta,
/// half-degree ell (the polynomial has degree 2*ell).
struct FilterSpec {
  double delta;
  double eta;
  long ell;
  FilterKind kind;
};

/// T_ell evaluated through the cos/cosh closed forms; stable at any degree.
double chebyshev_eval(long ell, double z);

/// log(T_ell(z)) for z >= 1, safe where T_ell itself would overflow.
double chebyshev_log_for_z_ge1(long ell, double z);

/// Smallest half-degree whose filter tail is at most eta on [delta, 1].
/// Returns at least 1 so a filter always exists.
long select_degree(double delta, double eta);

/// Achieved tail bound 1 / T_ell((1+delta^2)/(1-delta^2)) of the filter.
double filter_tail_bound(const FilterSpec& spec);

/// Filter value at x in [-1, 1]: the projection polynomial F or the
/// reflection polynomial K depending on spec.kind.
double filter_eval(const FilterSpec& spec, double x);

/// F_{delta,ell}(x) regardless of spec.kind.
double filter_eval_projection(double delta, long ell, double x);

/// K_{delta,ell}(x) regardless of spec.kind.
double filter_eval_reflection(double delta, long ell, double x);

FilterSpec make_filter(double delta, double eta, FilterKind kind);

/// Filter used by the solver pipelines for an effective condition number:
/// delta = 1/kappa and ell pinned to ceil(kappa*ln(2/eta)/2), the half-degree
/// every closed-form query cost in the complexity statements is written in.
FilterSpec pipeline_filter(double kappa, double eta, FilterKind kind);

/// ceil(kappa*ln(2/eta)/2), the per-application half-degree of the pipelines.
long pipeline_half_degree(double kappa, double eta);

}  // namespace qlss
