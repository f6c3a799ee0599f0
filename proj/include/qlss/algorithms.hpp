#pragma once

#include "qlss/instance.hpp"
#include "qlss/ledger.hpp"
#include "qlss/svt.hpp"
#include "qlss/system.hpp"
#include "qlss/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qlss {

/// A linear system the norm/solve machinery can run on: either the base
/// instance or one member of the homotopy family. x_min is carried for
/// diagnostics only; the algorithms never read it to make decisions.
struct SystemView {
  Matrix a;
  Vector b;
  double kappa = 1.0;
  Vector x_min;
  LedgerKind kind = LedgerKind::g_t;

  static SystemView of(const LinearSystemInstance& inst);
  static SystemView of_homotopy(const HomotopyPoint& pt, double kappa_eff);
  double x_norm() const { return x_min.norm(); }
};

/// Exact analysis of one run of the norm-estimate solver at a fixed t:
/// branch probabilities, the conditional output state and its quality.
struct Algo1Probe {
  double t = 1.0;
  double theta_t = 0.0;
  double p_kr = 1.0;            // reflection branch
  double p_proj_given_kr = 1.0; // e_n removal branch
  double p_succ = 1.0;          // product
  Vector cond_state;            // conditional output, base-system coordinates
  double trace_distance = 0.0;  // to |x_min>
  double overlap = 1.0;
  double delta1_prime = 0.0;
  double delta2_prime = 0.0;
  QueryLedger cost_per_run;     // fixed cost of every run at this t
};

Algo1Probe probe_algo1(const SystemView& view, double eta, double t);

/// Success probability of the KP variant (prepare e_n, kernel-project on
/// G_t); used by the binary search and amplitude estimation.
double probe_kp_success(const SystemView& view, double eta, double t,
                        QueryLedger* cost_per_run = nullptr);

struct SolveOutcome {
  bool succeeded = false;
  Vector output_state;
  double t_used = 1.0;
  double p_succ = 0.0;  // exact probability when computed in exact mode
  double trace_distance_to_x = 1.0;
  double overlap_with_x = 0.0;
  double theta_t = 0.0;
  QueryLedger queries;
  std::uint64_t attempts = 0;    // loop iterations for the full pipelines
  bool cap_exceeded = false;
};

enum class RunMode { exact, sampled };

/// One run of the solver given a norm estimate t (KR on G_t, then project
/// out e_n). Exact mode always reports the conditional success branch.
SolveOutcome solve_given_norm(const LinearSystemInstance& inst, double eta, double t,
                              RunMode mode, std::uint64_t seed = 0);

/// One draw of the norm-sampling subroutine: tau uniform on
/// [ln L - 1/2, ln R + 1/2] clamped to the endpoints, then one sampled
/// solver run at t = e^tau. nullopt on failure; queries accrue either way.
struct NormSample {
  double t;
  Vector state;
};
std::optional<NormSample> sample_norm_candidate(const SystemView& view, double lo,
                                                double hi, double eta, Rng& rng,
                                                QueryLedger& ledger);

struct NormEstimate {
  double value = 1.0;
  std::string method;
  double beta_target = 2.0;
  double confidence = 0.0;
  QueryLedger queries;
  double kappa_used = 1.0;
  std::uint64_t rounds = 0;
};

NormEstimate exhaustive_norm_search(const LinearSystemInstance& inst, std::uint64_t seed);
NormEstimate binary_norm_search(const LinearSystemInstance& inst, std::uint64_t seed);

struct AdiabaticConfig {
  double eta = 0.025;
  double pass_threshold = 0.725;
  // median amplification: repetitions at step j are 2*amp*(steps-j)+1
  long amp = 1;
};
NormEstimate adiabatic_norm_search(const LinearSystemInstance& inst, std::uint64_t seed,
                                   const AdiabaticConfig& cfg = {});

enum class AeMode { ideal, phase_distribution };

NormEstimate refine_norm_amplitude_estimation(const LinearSystemInstance& inst,
                                              double t_in, double eps, AeMode mode,
                                              std::uint64_t seed);

/// Candidate grid of the log-space searches: {0, ln2, 2ln2, ...} with the
/// last point clamped to ln(kappa). Size is ceil(log2(kappa)) + 1.
std::vector<double> norm_search_candidates(double kappa);

struct Algo3Config {
  double bracket_lo = 1.0;
  double bracket_hi = 1.0;
  double eta = 0.1;
  double eps = 1e-2;
  double mu = 0.25;
  double eta_kp = 1e-3;
  std::uint64_t iteration_cap = 1000000;
};

/// eta chosen so the ansatz infidelity parameter mu hits mu_target, and
/// eta_kp per the refinement relation.
Algo3Config make_algo3_config(double lo, double hi, double eps, double mu_target = 0.25);

SolveOutcome full_qlss_random_t(const LinearSystemInstance& inst, const Algo3Config& cfg,
                                std::uint64_t seed);

struct FpaaConfig {
  Algo3Config base;
  double delta = 0.25;
  int discretization_bits = 8;
};

/// Number of amplification rounds: smallest odd integer exceeding
/// lambda^{-1/2} ln(2/sqrt(delta)).
long fpaa_round_count(double lambda, double delta);

/// Amplified success probability of the fixed-point sequence with L rounds
/// when the unamplified probability is p (Chebyshev closed form).
double fpaa_amplified_probability(double p, long rounds, double delta);

/// Discretized success probability lower bound of the coherent variant.
double fpaa_lambda(double lo, double hi, double eta, int d_bits);

/// Precomputed coherent grid for the amplitude-amplified pipeline; the exact
/// per-point probabilities depend only on (instance, config), so repeated
/// seeded runs share one session.
class FpaaSession {
 public:
  FpaaSession(const LinearSystemInstance& inst, const FpaaConfig& cfg);
  SolveOutcome run(std::uint64_t seed) const;

  double lambda() const { return lambda_; }
  long rounds() const { return rounds_; }
  double unamplified_probability() const { return p_disc_; }
  double amplified_probability() const { return p_amp_; }

 private:
  const LinearSystemInstance& inst_;
  FpaaConfig cfg_;
  SvdFactorization g_;
  FilterSpec kp_spec_;
  std::vector<double> weight_;
  std::vector<Algo1Probe> probes_;
  double lambda_ = 0.0;
  long rounds_ = 1;
  double p_disc_ = 0.0;
  double p_amp_ = 0.0;
};

SolveOutcome full_qlss_fpaa(const LinearSystemInstance& inst, const FpaaConfig& cfg,
                            std::uint64_t seed);

struct OptimalHats {
  double beta_hat = 15.4;
  double chi_hat = 0.0398;
  double c_hat = 20.0;
  double r_hat = 3.37;
  double q_hat = 5.41;
  double delta_hat = 0.00424;
};

struct OptimalParams {
  OptimalHats hats;
  double kappa = 1.0;
  double eps = 1e-2;
  long steps = 1;                  // J
  std::vector<double> sigma;       // sigma_j, 1-based at index j-1
  std::vector<double> beta;        // beta_j
  std::vector<double> chi;         // chi_j
  std::vector<double> eta;         // eta_j
  std::vector<double> m_raw;       // m_j before integer rounding
  std::vector<long> m_reps;        // ceil(m_j)
  double p_bar = 0.0;
  double mu = 0.0;
  double eta_kp = 0.0;
};

OptimalParams derive_optimal_params(double kappa, double eps, const OptimalHats& hats = {});

struct OptimalConfig {
  OptimalHats hats;
  double eps = 1e-2;
  std::uint64_t cycle_cap = 1000000;
};

SolveOutcome full_qlss_optimal(const LinearSystemInstance& inst, const OptimalConfig& cfg,
                               std::uint64_t seed);

/// Exact output ensemble of the random-t pipeline, obtained by quadrature
/// over the tau distribution plus exact branch probabilities.
struct EnsembleReport {
  Matrix rho;
  double trace_distance = 1.0;
  double success_mass = 0.0;
};

EnsembleReport exact_output_ensemble(const LinearSystemInstance& inst, double lo,
                                     double hi, double eta, double eta_kp,
                                     int grid_points = 1601);

EnsembleReport algo3_exact_ensemble(const LinearSystemInstance& inst,
                                    const Algo3Config& cfg, int grid_points = 1601);

/// Exact ensemble of the optimal pipeline; supported for single-step
/// parameter ladders (kappa <= c_hat), where the cycle structure reduces to
/// the random-t pipeline with the step-J parameters.
EnsembleReport algo4_exact_ensemble(const LinearSystemInstance& inst,
                                    const OptimalConfig& cfg, int grid_points = 1601);

/// 1/2 || rho - |x><x| ||_1 for a normalized reference vector x.
double trace_distance_to_pure(const Matrix& rho, const Vector& x);

}  // namespace qlss
