#pragma once

#include "qlss/ledger.hpp"
#include "qlss/types.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace qlss {

struct BoundParams {
  double kappa = 1.0;
  double eps = 1e-2;
  double eta = 0.0;       // 0 means "derive from mu_target"
  double mu_target = 0.25;
  double beta = 1.0;
  double delta = 0.25;
  int d_bits = -1;        // -1 means the d -> infinity limit
  double bracket_lo = 0.0;  // 0 means [1, kappa]
  double bracket_hi = 0.0;
};

struct BoundReport {
  std::string kind;
  BoundParams params;
  double value = 0.0;
  std::vector<std::pair<std::string, double>> terms;
};

/// Closed-form query bounds. Kinds:
///   solver_run           fixed per-run cost 2*ceil(kappa*ln(2/eta)/2)
///   given_norm_expected  expected cost given a beta-approximate norm
///   algo3                expected cost of the random-t pipeline
///   algo3_practical      compact form, valid for kappa in [3, 1e6]
///   fpaa                 expected cost of the amplitude-amplified pipeline
///   fpaa_practical       compact form, valid for kappa in [3, 1e6]
///   optimal              expected cost of the full adiabatic-ladder pipeline
///   qwalk, randomization, randomization_poisson   prior-work rows
BoundReport bound_formula(const std::string& kind, const BoundParams& params);

struct Table1Row {
  std::string method;
  std::string asymptotic;
  bool analyzed = true;
  double bound = 0.0;            // absolute queries
  double per_kappa = 0.0;
  double published_per_kappa = 0.0;  // reference column value, 0 when none
};

/// All seven comparison rows evaluated at (kappa, eps). The published
/// column is attached at the reference point (1e5, 1e-10).
std::vector<Table1Row> table1_report(double kappa, double eps);

std::string table1_csv(double kappa, double eps);

struct MonteCarloResult {
  double mean = 0.0;
  double stddev = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t failures = 0;
  std::map<std::uint64_t, std::uint64_t> histogram;  // total U_A-family queries
};

struct MeasuredBenchRow {
  std::string method;
  double kappa = 0.0;
  double eps = 0.0;
  double bound = 0.0;
  MonteCarloResult measured;
};

/// CSV with schema method,kappa,eps,bound,measured_mean,ci_low,ci_high.
std::string measured_bench_csv(const std::vector<MeasuredBenchRow>& rows);

/// Runs seeded independent trials of `run` (trial index -> ledger) and
/// aggregates the U_A-family totals. Per-trial seeds derive from the master
/// seed by trial index, so the result is independent of the worker count.
MonteCarloResult expected_query_monte_carlo(
    const std::function<QueryLedger(std::uint64_t trial_seed)>& run, std::uint64_t trials,
    std::uint64_t seed, int threads = 0);

}  // namespace qlss
