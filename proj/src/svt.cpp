#include "qlss/svt.hpp"

#include <cmath>

namespace qlss {

QueryLedger op_cost(const FilterSpec& spec, LedgerKind kind) {
  const std::uint64_t ell = static_cast<std::uint64_t>(spec.ell);
  QueryLedger q;
  switch (kind) {
    case LedgerKind::none:
      break;
    case LedgerKind::g:
      // U_G consumes one U_A, one U_b and one U_b^dag per call
      q.u_a = ell;
      q.u_a_dag = ell;
      q.u_b = 2 * ell;
      q.u_b_dag = 2 * ell;
      break;
    case LedgerKind::g_t:
    case LedgerKind::bar_a:
      // the augmented encodings consume controlled queries only
      q.cu_a = ell;
      q.cu_a_dag = ell;
      q.cu_b = 2 * ell;
      q.cu_b_dag = 2 * ell;
      break;
  }
  return q;
}

StateDecomposition decompose_against_kernel(const SvdFactorization& svd,
                                            const Vector& state) {
  const double thr = svd.zero_threshold();
  Vector row_space_part = Vector::Zero(state.size());
  for (Index j = 0; j < svd.values.size(); ++j) {
    if (svd.values(j) <= thr) continue;
    row_space_part += svd.right.col(j) * svd.right.col(j).dot(state);
  }
  Vector kernel_vec = state - row_space_part;

  StateDecomposition dec;
  const double kn = kernel_vec.norm();
  const double on = row_space_part.norm();
  dec.gamma = Complex(kn, 0.0);
  dec.nu = Complex(on, 0.0);
  dec.kernel_part = kn > 0 ? Vector(kernel_vec / kn) : Vector(Vector::Zero(state.size()));
  dec.orthogonal_part =
      on > 0 ? Vector(row_space_part / on) : Vector(Vector::Zero(state.size()));
  return dec;
}

BranchOutcome apply_kernel_op(const SvdFactorization& svd_of_b, const Vector& state,
                              const FilterSpec& spec, SvtMode mode, Rng* rng,
                              LedgerKind kind) {
  if (std::abs(state.norm() - 1.0) > 1e-10)
    throw DomainError("apply_kernel_op: state not normalized");
  const double thr = svd_of_b.zero_threshold();
  for (Index j = 0; j < svd_of_b.values.size(); ++j) {
    const double s = svd_of_b.values(j);
    if (s > thr && s < spec.delta - 1e-10)
      throw GapViolation("apply_kernel_op: nonzero singular value below delta");
  }

  BranchOutcome out;
  out.eta_eff = filter_tail_bound(spec);
  out.queries = op_cost(spec, kind);

  // success branch y = V P(Sigma) V^dag state; kernel components carry
  // P(0) = 1 so only the nonzero singular directions move
  Vector y = state;
  Vector fail = Vector::Zero(state.size());
  for (Index j = 0; j < svd_of_b.values.size(); ++j) {
    const double s = svd_of_b.values(j);
    if (s <= thr) continue;
    const Complex coef = svd_of_b.right.col(j).dot(state);
    const double p = filter_eval(spec, std::min(s, 1.0));
    y += (p - 1.0) * coef * svd_of_b.right.col(j);
    // canonical failure Kraus V sqrt(I - P^2) V^dag
    fail += std::sqrt(std::max(0.0, 1.0 - p * p)) * coef * svd_of_b.right.col(j);
  }
  const double p_succ = std::min(1.0, y.squaredNorm());
  out.probability = p_succ;

  // delta coefficients of the orthogonal part's image
  const StateDecomposition dec = decompose_against_kernel(svd_of_b, state);
  if (std::abs(dec.nu) > 1e-14) {
    Vector img = Vector::Zero(state.size());
    for (Index j = 0; j < svd_of_b.values.size(); ++j) {
      const double s = svd_of_b.values(j);
      if (s <= thr) continue;
      const double p = filter_eval(spec, std::min(s, 1.0));
      img += p * svd_of_b.right.col(j).dot(dec.orthogonal_part) * svd_of_b.right.col(j);
    }
    const double along = dec.orthogonal_part.dot(img).real();
    if (spec.kind == FilterKind::projection) {
      out.delta1 = along;
      out.delta2 = (img - along * dec.orthogonal_part).norm();
    } else {
      out.delta1 = 1.0 + along;  // delta1'
      out.delta2 = (img + (1.0 - out.delta1) * dec.orthogonal_part).norm();
    }
  }

  const bool success = (mode == SvtMode::exact)
                           ? true
                           : (rng ? rng->bernoulli(p_succ)
                                  : throw DomainError("apply_kernel_op: sampled mode needs rng"));
  out.succeeded = success;
  if (success) {
    const double n = y.norm();
    out.post_state = n > 0 ? Vector(y / n) : y;
  } else {
    const double n = fail.norm();
    out.post_state = n > 0 ? Vector(fail / n) : fail;
  }
  return out;
}

RefineResult refine_with_kp(const SvdFactorization& svd_of_b,
                            const std::vector<WeightedState>& ensemble,
                            const FilterSpec& spec, const Vector& reference,
                            LedgerKind kind) {
  if (spec.kind != FilterKind::projection)
    throw DomainError("refine_with_kp: spec must be a projection filter");
  const Vector ref = reference.normalized();

  RefineResult res;
  double total = 0.0;
  for (const auto& ws : ensemble) {
    const BranchOutcome b = apply_kernel_op(svd_of_b, ws.state, spec, SvtMode::exact,
                                            nullptr, kind);
    res.queries += b.queries;
    const double w = ws.weight * b.probability;
    res.success_prob += ws.weight * b.probability;
    res.ensemble.push_back({w, b.post_state});
    res.fidelity += w * std::norm(ref.dot(b.post_state));
    total += w;
  }
  if (total > 0) {
    for (auto& ws : res.ensemble) ws.weight /= total;
    res.fidelity /= total;
  }
  return res;
}

}  // namespace qlss
