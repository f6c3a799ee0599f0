#pragma once

#include "qlss/filter.hpp"
#include "qlss/instance.hpp"
#include "qlss/ledger.hpp"
#include "qlss/rng.hpp"
#include "qlss/types.hpp"

#include <vector>

namespace qlss {

/// Which block-encoding the matrix fed to the kernel operation came from;
/// determines how the 2*ell block-encoding calls translate into oracle
/// queries. G is built from plain queries, the augmented variants from
/// controlled ones.
enum class LedgerKind { none, g, g_t, bar_a };

QueryLedger op_cost(const FilterSpec& spec, LedgerKind kind);

/// Split of a state against the kernel of a matrix.
struct StateDecomposition {
  Complex gamma;          // amplitude on the kernel part
  Complex nu;             // amplitude on the orthogonal part
  Vector kernel_part;     // unit (or zero)
  Vector orthogonal_part; // unit (or zero)
};

StateDecomposition decompose_against_kernel(const SvdFactorization& svd,
                                            const Vector& state);

struct BranchOutcome {
  bool succeeded = true;
  Vector post_state;
  double probability = 1.0;
  double delta1 = 0.0;  // delta1' for reflection
  double delta2 = 0.0;  // delta2' for reflection
  double eta_eff = 0.0;
  QueryLedger queries;
};

enum class SvtMode { exact, sampled };

/// Applies V P(Sigma) V^dagger to the state, P the filter polynomial of
/// `spec` with P(0) = 1 on the kernel. Exact mode reports the success branch
/// and its probability; sampled mode draws the branch (rng required).
/// Throws GapViolation if a nonzero singular value of B lies below delta.
BranchOutcome apply_kernel_op(const SvdFactorization& svd_of_b, const Vector& state,
                              const FilterSpec& spec, SvtMode mode, Rng* rng = nullptr,
                              LedgerKind kind = LedgerKind::none);

struct WeightedState {
  double weight;
  Vector state;
};

struct RefineResult {
  double success_prob = 0.0;
  std::vector<WeightedState> ensemble;
  double fidelity = 0.0;  // <x| rho_out |x> against the reference state
  QueryLedger queries;
};

/// Applies KP to every ensemble member and reweights by the success
/// probabilities; fidelity is reported against `reference` (normalized).
RefineResult refine_with_kp(const SvdFactorization& svd_of_b,
                            const std::vector<WeightedState>& ensemble,
                            const FilterSpec& spec, const Vector& reference,
                            LedgerKind kind = LedgerKind::none);

}  // namespace qlss
