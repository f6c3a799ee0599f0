#include "qlss/algorithms.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace qlss {

namespace {

constexpr double kLn2 = 0.6931471805599453094172321214581766;

Vector unit_last(Index dim) {
  Vector e = Vector::Zero(dim);
  e(dim - 1) = Complex(1.0, 0.0);
  return e;
}

double clampd(double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); }

}  // namespace

SystemView SystemView::of(const LinearSystemInstance& inst) {
  return SystemView{inst.a, inst.b, inst.kappa, inst.x_min, LedgerKind::g_t};
}

SystemView SystemView::of_homotopy(const HomotopyPoint& pt, double kappa_eff) {
  if (pt.t) throw DomainError("SystemView: pass the unaugmented homotopy point");
  return SystemView{pt.a_bar, pt.rhs, kappa_eff, pt.x_bar, LedgerKind::bar_a};
}

Algo1Probe probe_algo1(const SystemView& view, double eta, double t) {
  if (!(eta > 0.0 && eta <= 1.0)) throw DomainError("probe_algo1: eta outside (0,1]");
  const AugmentedSystem aug = augment(view.a, view.b, view.x_min, t, view.kappa);
  const SvdFactorization gt = svd_of(build_G_t(aug));
  const FilterSpec spec = pipeline_filter(view.kappa, eta, FilterKind::reflection);
  const Index dim = view.a.cols() + 1;
  const Vector e_n = unit_last(dim);

  const BranchOutcome kr = apply_kernel_op(gt, e_n, spec, SvtMode::exact, nullptr, view.kind);

  Algo1Probe probe;
  probe.t = t;
  probe.theta_t = aug.theta_t;
  probe.cost_per_run = kr.queries;
  probe.p_kr = kr.probability;
  probe.delta1_prime = kr.delta1;
  probe.delta2_prime = kr.delta2;

  // remove the e_n component (the measurement of I - |e_n><e_n|)
  Vector kept = kr.post_state;
  kept(dim - 1) = Complex(0.0, 0.0);
  probe.p_proj_given_kr = kept.squaredNorm();
  probe.p_succ = probe.p_kr * probe.p_proj_given_kr;

  probe.cond_state = kept.head(dim - 1);
  const double nrm = probe.cond_state.norm();
  if (nrm > 0) probe.cond_state /= nrm;

  const Vector x_hat = view.x_min.normalized();
  probe.overlap = std::abs(x_hat.dot(probe.cond_state));
  probe.trace_distance = std::sqrt(std::max(0.0, 1.0 - probe.overlap * probe.overlap));
  return probe;
}

double probe_kp_success(const SystemView& view, double eta, double t,
                        QueryLedger* cost_per_run) {
  const AugmentedSystem aug = augment(view.a, view.b, view.x_min, t, view.kappa);
  const SvdFactorization gt = svd_of(build_G_t(aug));
  const FilterSpec spec = pipeline_filter(view.kappa, eta, FilterKind::projection);
  const Vector e_n = unit_last(view.a.cols() + 1);
  const BranchOutcome kp = apply_kernel_op(gt, e_n, spec, SvtMode::exact, nullptr, view.kind);
  if (cost_per_run) *cost_per_run = kp.queries;
  return kp.probability;
}

SolveOutcome solve_given_norm(const LinearSystemInstance& inst, double eta, double t,
                              RunMode mode, std::uint64_t seed) {
  const SystemView view = SystemView::of(inst);
  const Algo1Probe probe = probe_algo1(view, eta, t);

  SolveOutcome out;
  out.t_used = t;
  out.theta_t = probe.theta_t;
  out.p_succ = probe.p_succ;
  out.queries = probe.cost_per_run;
  out.attempts = 1;

  bool success = true;
  if (mode == RunMode::sampled) {
    Rng rng(seed);
    success = rng.bernoulli(probe.p_kr) && rng.bernoulli(probe.p_proj_given_kr);
  }
  out.succeeded = success;
  if (success) {
    out.output_state = probe.cond_state;
    out.trace_distance_to_x = probe.trace_distance;
    out.overlap_with_x = probe.overlap;
  }
  return out;
}

std::optional<NormSample> sample_norm_candidate(const SystemView& view, double lo,
                                                double hi, double eta, Rng& rng,
                                                QueryLedger& ledger) {
  if (!(lo >= 1.0 - 1e-9 && hi <= view.kappa * (1.0 + 1e-9) && lo <= hi))
    throw DomainError("sample_norm_candidate: bracket outside [1, kappa]");
  double tau = rng.uniform(std::log(lo) - 0.5, std::log(hi) + 0.5);
  tau = clampd(tau, std::log(lo), std::log(hi));
  const double t = clampd(std::exp(tau), lo, hi);

  const Algo1Probe probe = probe_algo1(view, eta, t);
  ledger += probe.cost_per_run;
  if (!rng.bernoulli(probe.p_succ)) return std::nullopt;
  return NormSample{t, probe.cond_state};
}

std::vector<double> norm_search_candidates(double kappa) {
  const double chi_max = std::log(kappa);
  const long top = static_cast<long>(std::ceil(std::log2(kappa) - 1e-12));
  std::vector<double> taus;
  for (long i = 0; i <= std::max<long>(0, top); ++i)
    taus.push_back(std::min(static_cast<double>(i) * kLn2, chi_max));
  return taus;
}

NormEstimate exhaustive_norm_search(const LinearSystemInstance& inst, std::uint64_t seed) {
  const SystemView view = SystemView::of(inst);
  const double eta = 0.025;
  const std::vector<double> taus = norm_search_candidates(inst.kappa);
  const long k = static_cast<long>(std::ceil(100.0 * std::log(20.0 * double(taus.size()))));

  Rng rng(seed);
  NormEstimate est;
  est.method = "exhaustive";
  est.kappa_used = inst.kappa;
  est.rounds = taus.size();
  est.confidence = 0.95;

  // all candidates are probed with the full repetition budget; the first
  // whose empirical rate clears the threshold wins
  std::vector<double> rate(taus.size(), 0.0);
  for (std::size_t i = 0; i < taus.size(); ++i) {
    const Algo1Probe probe = probe_algo1(view, eta, std::exp(taus[i]));
    long hits = 0;
    for (long r = 0; r < k; ++r) {
      est.queries += probe.cost_per_run;
      if (rng.bernoulli(probe.p_succ)) ++hits;
    }
    rate[i] = double(hits) / double(k);
  }
  for (std::size_t i = 0; i < taus.size(); ++i) {
    if (rate[i] > 0.725) {
      est.value = std::exp(taus[i]);
      return est;
    }
  }
  throw SearchFailed("exhaustive_norm_search: no candidate cleared the 0.725 threshold");
}

NormEstimate binary_norm_search(const LinearSystemInstance& inst, std::uint64_t seed) {
  const SystemView view = SystemView::of(inst);
  const double eta = std::sqrt(1.0 / 8.0);
  std::vector<double> active = norm_search_candidates(inst.kappa);
  const double t_count = double(active.size());
  const long rounds =
      std::max<long>(1, static_cast<long>(std::ceil(std::log(t_count) / std::log(1.5) - 1e-12)));
  const long k = static_cast<long>(std::ceil(72.0 * std::log(40.0 * double(rounds))));

  Rng rng(seed);
  NormEstimate est;
  est.method = "binary";
  est.kappa_used = inst.kappa;
  est.rounds = rounds;
  est.confidence = 0.95;

  for (long round = 0; round < rounds; ++round) {
    const std::size_t idx = (active.size() - 1) / 2;
    const double tau = active[idx];
    QueryLedger per_run;
    const double q = probe_kp_success(view, eta, std::exp(tau), &per_run);
    long hits = 0;
    for (long r = 0; r < k; ++r) {
      est.queries += per_run;
      if (rng.bernoulli(q)) ++hits;
    }
    const bool estimate_high = double(hits) / double(k) > 0.5;
    // KP success grows with t, so a high estimate means tau >= ln||x||:
    // candidates above tau go, otherwise candidates below go
    std::vector<double> next;
    for (double v : active) {
      if (estimate_high ? (v <= tau + 1e-15) : (v >= tau - 1e-15)) next.push_back(v);
    }
    active.swap(next);
  }

  if (active.size() == 1)
    est.value = std::exp(active[0]);
  else
    est.value = std::exp(0.5 * (active.front() + active.back()));
  return est;
}

NormEstimate adiabatic_norm_search(const LinearSystemInstance& inst, std::uint64_t seed,
                                   const AdiabaticConfig& cfg) {
  // round kappa up to a power of two for the 2^-j schedule
  const long steps = std::max<long>(1, static_cast<long>(std::ceil(std::log2(inst.kappa) - 1e-12)));
  const double kappa2 = std::pow(2.0, double(steps));

  Rng rng(seed);
  NormEstimate est;
  est.method = "adiabatic";
  est.kappa_used = kappa2;
  est.rounds = steps;
  est.confidence = 0.9;

  double t_prev = 1.0;  // exact at sigma = 1
  for (long j = 1; j <= steps; ++j) {
    const double sigma = std::pow(2.0, -double(j));
    const double kappa_eff = 1.0 / sigma;
    const HomotopyPoint pt = homotopy_point_with_kappa(inst, kappa2, sigma);
    const SystemView view = SystemView::of_homotopy(pt, kappa_eff);

    // candidates cover [t/2, 4t] clamped into [1, kappa_eff], ln2-spaced
    const double lo = clampd(t_prev / 2.0, 1.0, kappa_eff);
    const double hi = clampd(4.0 * t_prev, 1.0, kappa_eff);
    std::vector<double> taus;
    for (double tau = std::log(lo); tau < std::log(hi) - 1e-12; tau += kLn2)
      taus.push_back(tau);
    taus.push_back(std::log(hi));
    const long k =
        static_cast<long>(std::ceil(100.0 * std::log(20.0 * double(taus.size()))));

    std::vector<Algo1Probe> probes;
    probes.reserve(taus.size());
    for (double tau : taus) probes.push_back(probe_algo1(view, cfg.eta, std::exp(tau)));

    // median amplification: more repetitions early in the schedule
    const long reps = 2 * cfg.amp * (steps - j) + 1;
    std::vector<double> found;
    for (long rep = 0; rep < reps; ++rep) {
      for (std::size_t i = 0; i < taus.size(); ++i) {
        long hits = 0;
        for (long r = 0; r < k; ++r) {
          est.queries += probes[i].cost_per_run;
          if (rng.bernoulli(probes[i].p_succ)) ++hits;
        }
        if (double(hits) / double(k) > cfg.pass_threshold) {
          found.push_back(taus[i]);
          break;
        }
      }
    }
    if (found.empty()) {
      t_prev = clampd(t_prev, 1.0, kappa_eff);  // carry the previous estimate
      continue;
    }
    std::sort(found.begin(), found.end());
    t_prev = std::exp(found[(found.size() - 1) / 2]);
  }
  est.value = t_prev;
  return est;
}

NormEstimate refine_norm_amplitude_estimation(const LinearSystemInstance& inst,
                                              double t_in, double eps, AeMode mode,
                                              std::uint64_t seed) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("refine_norm: eps outside (0,1)");
  const double xn = inst.x_norm();
  if (t_in < xn / 2.0 * (1.0 - 1e-6) || t_in > 2.0 * xn * (1.0 + 1e-6))
    throw BadInput("refine_norm: t_in is not a 2-approximation of ||x||");

  const double eta = std::sqrt(eps / 100.0);
  const SystemView view = SystemView::of(inst);
  QueryLedger per_run;
  const double q = probe_kp_success(view, eta, t_in, &per_run);

  Rng rng(seed);
  NormEstimate est;
  est.method = "ae-refine";
  est.kappa_used = inst.kappa;
  est.beta_target = 1.0 + eps;
  est.confidence = 0.95;

  double q_tilde = q;
  if (mode == AeMode::ideal) {
    // additive eps/100 oracle: uniform noise with probability 0.95, the
    // adversarial corner +-eps/100 otherwise
    const double bound = eps / 100.0;
    if (rng.uniform() < 0.95)
      q_tilde = q + rng.uniform(-bound, bound);
    else
      q_tilde = q + (rng.bernoulli(0.5) ? bound : -bound);
    // ledger: the contract costs one AE run of ceil(400/eps) rounds
    const std::uint64_t m_rounds = static_cast<std::uint64_t>(std::ceil(400.0 / eps));
    for (std::uint64_t i = 0; i < 2 * m_rounds; ++i) est.queries += per_run;
    est.rounds = m_rounds;
  } else {
    // canonical phase-estimation outcome distribution, median of 5 runs
    const long m_rounds = static_cast<long>(std::ceil(400.0 / eps));
    const double theta = std::asin(std::sqrt(clampd(q, 0.0, 1.0))) / M_PI;  // in [0, 1/2]
    auto fejer = [&](double x) {
      // sin^2(pi M x) / (M^2 sin^2(pi x)), periodic in x
      const double s = std::sin(M_PI * x);
      if (std::abs(s) < 1e-300) return 1.0;
      const double num = std::sin(M_PI * double(m_rounds) * x);
      return (num * num) / (double(m_rounds) * double(m_rounds) * s * s);
    };
    const int reps = 5;
    std::vector<double> vals;
    for (int rep = 0; rep < reps; ++rep) {
      // sample y from the outcome distribution by inversion on the grid
      std::vector<double> p(m_rounds);
      double z = 0.0;
      for (long y = 0; y < m_rounds; ++y) {
        const double fy = double(y) / double(m_rounds);
        p[y] = 0.5 * (fejer(fy - theta) + fejer(fy + theta));
        z += p[y];
      }
      double u = rng.uniform() * z;
      long pick = 0;
      for (long y = 0; y < m_rounds; ++y) {
        u -= p[y];
        if (u <= 0) {
          pick = y;
          break;
        }
      }
      const double s = std::sin(M_PI * double(pick) / double(m_rounds));
      vals.push_back(s * s);
      for (long i = 0; i < 2 * m_rounds; ++i) est.queries += per_run;
    }
    std::sort(vals.begin(), vals.end());
    q_tilde = vals[reps / 2];
    est.rounds = static_cast<std::uint64_t>(m_rounds) * reps;
  }

  q_tilde = clampd(q_tilde, 1e-12, 1.0 - 1e-12);
  est.value = t_in * std::sqrt(1.0 - q_tilde) / std::sqrt(q_tilde);
  return est;
}

Algo3Config make_algo3_config(double lo, double hi, double eps, double mu_target) {
  if (!(lo >= 1.0 && hi >= lo)) throw DomainError("make_algo3_config: bad bracket");
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("make_algo3_config: eps outside (0,1)");
  if (!(mu_target > 0.0 && mu_target < 1.0))
    throw DomainError("make_algo3_config: mu outside (0,1)");
  Algo3Config cfg;
  cfg.bracket_lo = lo;
  cfg.bracket_hi = hi;
  cfg.eps = eps;
  cfg.mu = mu_target;
  const double spread = 3.0 + 2.0 * std::log((hi * hi + lo * lo) / (2.0 * lo * lo));
  const double v = mu_target / std::sqrt(spread);
  cfg.eta = v / (1.0 + v);
  cfg.eta_kp = (eps / mu_target) * std::sqrt(1.0 - mu_target * mu_target) /
               std::sqrt(1.0 - eps * eps);
  return cfg;
}

namespace {

void validate_algo3(const LinearSystemInstance& inst, const Algo3Config& cfg) {
  const double spread =
      3.0 + 2.0 * std::log((cfg.bracket_hi * cfg.bracket_hi + cfg.bracket_lo * cfg.bracket_lo) /
                           (2.0 * cfg.bracket_lo * cfg.bracket_lo));
  const double mu = cfg.eta / (1.0 - cfg.eta) * std::sqrt(spread);
  if (!(mu < 1.0)) throw DomainError("full_qlss_random_t: eta too large (mu >= 1)");
  if (cfg.bracket_hi > inst.kappa * (1.0 + 1e-9))
    throw DomainError("full_qlss_random_t: bracket exceeds kappa");
}

SolveOutcome finish_outcome(const LinearSystemInstance& inst, const Vector& state,
                            double t, QueryLedger ledger, std::uint64_t attempts) {
  SolveOutcome out;
  out.succeeded = true;
  out.output_state = state;
  out.t_used = t;
  out.queries = ledger;
  out.attempts = attempts;
  const Vector x_hat = inst.x_min.normalized();
  out.overlap_with_x = std::abs(x_hat.dot(state));
  out.trace_distance_to_x =
      std::sqrt(std::max(0.0, 1.0 - out.overlap_with_x * out.overlap_with_x));
  out.theta_t = std::atan2(inst.x_norm(), t);
  return out;
}

}  // namespace

SolveOutcome full_qlss_random_t(const LinearSystemInstance& inst, const Algo3Config& cfg,
                                std::uint64_t seed) {
  validate_algo3(inst, cfg);
  const SystemView view = SystemView::of(inst);
  const SvdFactorization g = svd_of(build_G(inst));
  const FilterSpec kp_spec = pipeline_filter(inst.kappa, cfg.eta_kp, FilterKind::projection);

  Rng rng(seed);
  QueryLedger ledger;
  for (std::uint64_t attempt = 1; attempt <= cfg.iteration_cap; ++attempt) {
    const auto cand =
        sample_norm_candidate(view, cfg.bracket_lo, cfg.bracket_hi, cfg.eta, rng, ledger);
    if (!cand) continue;
    const BranchOutcome kp =
        apply_kernel_op(g, cand->state, kp_spec, SvtMode::sampled, &rng, LedgerKind::g);
    ledger += kp.queries;
    if (kp.succeeded) return finish_outcome(inst, kp.post_state, cand->t, ledger, attempt);
  }
  SolveOutcome out;
  out.cap_exceeded = true;
  out.queries = ledger;
  out.attempts = cfg.iteration_cap;
  return out;
}

double fpaa_lambda(double lo, double hi, double eta, int d_bits) {
  const double x = std::log(hi / lo);
  const double base = (1.0 - eta) * (1.0 - eta) /
                      ((1.0 + eta) * (1.0 + eta) * (x + 1.0));
  const double corr = 1.0 - x * x * std::pow(2.0, -double(d_bits) - 1.0);
  const double lambda = base * corr;
  if (!(lambda > 0.0))
    throw DomainError("fpaa_lambda: discretized success bound nonpositive");
  return lambda;
}

long fpaa_round_count(double lambda, double delta) {
  const double y = std::log(2.0 / std::sqrt(delta)) / std::sqrt(lambda);
  const long rounds = 2 * static_cast<long>(std::ceil(y / 2.0 - 0.5)) + 1;
  return std::max<long>(1, rounds);
}

double fpaa_amplified_probability(double p, long rounds, double delta) {
  p = clampd(p, 0.0, 1.0);
  // Chebyshev fixed-point sequence with delta_Y^2 = delta
  const double inv = 1.0 / std::sqrt(delta);
  const double frac_order = std::cosh(std::acosh(std::max(1.0, inv)) / double(rounds));
  const double arg = frac_order * std::sqrt(1.0 - p);
  const double t = chebyshev_eval(rounds, arg);
  return clampd(1.0 - delta * t * t, 0.0, 1.0);
}

FpaaSession::FpaaSession(const LinearSystemInstance& inst, const FpaaConfig& cfg)
    : inst_(inst), cfg_(cfg) {
  validate_algo3(inst, cfg.base);
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw DomainError("full_qlss_fpaa: delta outside (0,1)");
  if (cfg.discretization_bits < 1) throw DomainError("full_qlss_fpaa: d < 1");

  const SystemView view = SystemView::of(inst);
  g_ = svd_of(build_G(inst));
  kp_spec_ = pipeline_filter(inst.kappa, cfg.base.eta_kp, FilterKind::projection);

  // discretized tau grid with oversampled endpoints; fixed per instance, so
  // the exact per-point probabilities are computed once per session
  const double lo = cfg.base.bracket_lo, hi = cfg.base.bracket_hi;
  const double x = std::log(hi / lo);
  const double step = std::pow(2.0, -double(cfg.discretization_bits));
  const long jmax = std::max<long>(1, static_cast<long>(std::ceil(x / step)));

  const double w_end = 1.0 / (2.0 * x + 2.0);
  probes_.push_back(probe_algo1(view, cfg.base.eta, lo));
  weight_.push_back(w_end);
  probes_.push_back(probe_algo1(view, cfg.base.eta, hi));
  weight_.push_back(w_end);
  if (x > 0.0) {
    const double w_grid = (2.0 * x * w_end) / double(jmax);
    for (long j = 0; j < jmax; ++j) {
      const double t = clampd(std::exp(std::log(lo) + double(j) * step), lo, hi);
      probes_.push_back(probe_algo1(view, cfg.base.eta, t));
      weight_.push_back(w_grid);
    }
  }

  for (std::size_t i = 0; i < probes_.size(); ++i) p_disc_ += weight_[i] * probes_[i].p_succ;
  lambda_ = fpaa_lambda(lo, hi, cfg.base.eta, cfg.discretization_bits);
  rounds_ = fpaa_round_count(lambda_, cfg.delta);
  p_amp_ = fpaa_amplified_probability(p_disc_, rounds_, cfg.delta);
}

SolveOutcome FpaaSession::run(std::uint64_t seed) const {
  Rng rng(seed);
  QueryLedger ledger;
  const QueryLedger per_run = probes_[0].cost_per_run;
  for (std::uint64_t attempt = 1; attempt <= cfg_.base.iteration_cap; ++attempt) {
    for (long r = 0; r < rounds_; ++r) ledger += per_run;
    if (!rng.bernoulli(p_amp_)) continue;
    // amplification acts as a scalar on the success subspace: the
    // conditional (t, state) ensemble is the unamplified one
    double u = rng.uniform() * p_disc_;
    std::size_t pick = probes_.size() - 1;
    for (std::size_t i = 0; i < probes_.size(); ++i) {
      u -= weight_[i] * probes_[i].p_succ;
      if (u <= 0) {
        pick = i;
        break;
      }
    }
    const BranchOutcome kp = apply_kernel_op(g_, probes_[pick].cond_state, kp_spec_,
                                             SvtMode::sampled, &rng, LedgerKind::g);
    ledger += kp.queries;
    if (kp.succeeded)
      return finish_outcome(inst_, kp.post_state, probes_[pick].t, ledger, attempt);
  }
  SolveOutcome out;
  out.cap_exceeded = true;
  out.queries = ledger;
  out.attempts = cfg_.base.iteration_cap;
  return out;
}

SolveOutcome full_qlss_fpaa(const LinearSystemInstance& inst, const FpaaConfig& cfg,
                            std::uint64_t seed) {
  return FpaaSession(inst, cfg).run(seed);
}

OptimalParams derive_optimal_params(double kappa, double eps, const OptimalHats& hats) {
  if (!(kappa >= 1.0)) throw DomainError("derive_optimal_params: kappa < 1");
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("derive_optimal_params: eps outside (0,1)");
  if (!(hats.c_hat > 1.0 && hats.q_hat > 1.0 && hats.beta_hat > 1.0 && hats.r_hat > 1.0 &&
        hats.chi_hat > 0.0 && hats.chi_hat < 1.0 && hats.delta_hat > 0.0 &&
        hats.delta_hat < 1.0))
    throw DomainError("derive_optimal_params: hats outside their domains");

  OptimalParams p;
  p.hats = hats;
  p.kappa = kappa;
  p.eps = eps;
  p.steps = std::max<long>(
      1, static_cast<long>(std::ceil(std::log(kappa) / std::log(hats.c_hat) - 1e-9)));

  const long J = p.steps;
  for (long j = 1; j <= J; ++j) {
    const double sigma = std::min(1.0, std::pow(hats.c_hat, double(J - j)) / kappa);
    const double beta = hats.beta_hat * std::pow(hats.r_hat, double(J - j - 1));
    const double chi = hats.chi_hat * std::pow(hats.q_hat, double(j - J));
    const double eta = chi / (1.0 + chi);
    const double log_span =
        std::log(hats.c_hat * hats.beta_hat * hats.beta_hat *
                 std::pow(hats.r_hat, 2.0 * double(J - j))) + 1.0;
    const double m_raw = double(J - j + 1) * std::log(1.0 / hats.delta_hat + 1.0) *
                         (1.0 + eta) * (1.0 + eta) * log_span / ((1.0 - eta) * (1.0 - eta));
    p.sigma.push_back(sigma);
    p.beta.push_back(beta);
    p.chi.push_back(chi);
    p.eta.push_back(eta);
    p.m_raw.push_back(m_raw);
    p.m_reps.push_back(static_cast<long>(std::ceil(m_raw - 1e-12)));
  }

  const double b2 = hats.beta_hat * hats.beta_hat;
  const double r2 = hats.r_hat * hats.r_hat;
  const double q = hats.q_hat;
  const double chi = hats.chi_hat;
  p.p_bar = 4.0 / (b2 * (1.0 - 1.0 / r2)) +
            16.0 * chi / (q * b2 * (1.0 - 1.0 / (r2 * q))) +
            16.0 * chi * chi / (q * q * b2 * (1.0 - 1.0 / (r2 * q * q))) +
            2.0 * chi * chi *
                std::log(std::exp(1.0) * hats.c_hat * hats.c_hat * r2 * r2) /
                (q * q - 1.0);

  const double inner =
      (1.0 - hats.delta_hat - p.p_bar) *
      (1.0 - 2.0 * chi * chi * (1.5 + std::log((hats.c_hat * b2 + 1.0) / 2.0)));
  p.mu = std::sqrt(std::max(0.0, 1.0 - inner));
  if (!(p.mu < 1.0)) throw DomainError("derive_optimal_params: mu >= 1");
  p.eta_kp = (eps / p.mu) * std::sqrt(1.0 - p.mu * p.mu) / std::sqrt(1.0 - eps * eps);
  return p;
}

SolveOutcome full_qlss_optimal(const LinearSystemInstance& inst, const OptimalConfig& cfg,
                               std::uint64_t seed) {
  const OptimalParams par = derive_optimal_params(inst.kappa, cfg.eps, cfg.hats);
  const long J = par.steps;

  // per-step systems are fixed across cycles
  std::vector<SystemView> views;
  std::vector<HomotopyPoint> points(J);  // keep storage alive for the views
  for (long j = 1; j <= J; ++j) {
    if (j < J) {
      points[j - 1] = homotopy_point_with_kappa(inst, inst.kappa, par.sigma[j - 1]);
      views.push_back(SystemView::of_homotopy(points[j - 1], 1.0 / par.sigma[j - 1]));
    } else {
      views.push_back(SystemView::of(inst));
    }
  }
  const SvdFactorization g = svd_of(build_G(inst));
  const FilterSpec kp_spec = pipeline_filter(inst.kappa, par.eta_kp, FilterKind::projection);

  Rng rng(seed);
  QueryLedger ledger;
  for (std::uint64_t cycle = 1; cycle <= cfg.cycle_cap; ++cycle) {
    double t_prev = 1.0;
    Vector state;
    bool cycle_ok = true;
    for (long j = 1; j <= J && cycle_ok; ++j) {
      const double beta_prev = (j == 1) ? 1.0 : par.beta[j - 2];
      const double inv_sigma = 1.0 / par.sigma[j - 1];
      double lo = std::max(1.0, t_prev / beta_prev);
      double hi = std::min(inv_sigma, cfg.hats.c_hat * t_prev * beta_prev);
      if (hi < lo) lo = hi = clampd(t_prev, 1.0, inv_sigma);  // degenerate bracket

      bool step_ok = false;
      for (long rep = 0; rep < par.m_reps[j - 1] && !step_ok; ++rep) {
        const auto cand = sample_norm_candidate(views[j - 1], lo, hi, par.eta[j - 1], rng, ledger);
        if (cand) {
          t_prev = cand->t;
          state = cand->state;
          step_ok = true;
        }
      }
      cycle_ok = step_ok;
    }
    if (!cycle_ok) continue;  // restart the cycle

    const BranchOutcome kp =
        apply_kernel_op(g, state, kp_spec, SvtMode::sampled, &rng, LedgerKind::g);
    ledger += kp.queries;
    if (kp.succeeded) return finish_outcome(inst, kp.post_state, t_prev, ledger, cycle);
  }
  SolveOutcome out;
  out.cap_exceeded = true;
  out.queries = ledger;
  out.attempts = cfg.cycle_cap;
  return out;
}

double trace_distance_to_pure(const Matrix& rho, const Vector& x) {
  const Vector xn = x.normalized();
  const Matrix diff = rho - xn * xn.adjoint();
  Eigen::SelfAdjointEigenSolver<Matrix> es(diff);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

EnsembleReport exact_output_ensemble(const LinearSystemInstance& inst, double lo,
                                     double hi, double eta, double eta_kp,
                                     int grid_points) {
  if (!(lo >= 1.0 - 1e-9 && hi <= inst.kappa * (1.0 + 1e-9) && lo <= hi))
    throw DomainError("exact_output_ensemble: bracket outside [1, kappa]");
  const SystemView view = SystemView::of(inst);
  const SvdFactorization g = svd_of(build_G(inst));
  const FilterSpec kp_spec = pipeline_filter(inst.kappa, eta_kp, FilterKind::projection);

  const Index n = inst.cols();
  Matrix rho = Matrix::Zero(n, n);
  double z = 0.0;

  auto accumulate = [&](double tau, double w) {
    const Algo1Probe probe = probe_algo1(view, eta, clampd(std::exp(tau), lo, hi));
    const BranchOutcome kp =
        apply_kernel_op(g, probe.cond_state, kp_spec, SvtMode::exact, nullptr, LedgerKind::g);
    const double mass = w * probe.p_succ * kp.probability;
    rho.noalias() += mass * (kp.post_state * kp.post_state.adjoint());
    z += mass;
  };

  if (hi <= lo * (1.0 + 1e-15)) {
    accumulate(std::log(lo), 1.0);
  } else {
    const double x = std::log(hi / lo);
    const double w_end = 1.0 / (2.0 * x + 2.0);
    accumulate(std::log(lo), w_end);
    accumulate(std::log(hi), w_end);
    // composite Simpson over the interior with density 1/(x+1)
    int nodes = std::max(5, grid_points);
    if (nodes % 2 == 0) ++nodes;
    const double h = x / double(nodes - 1);
    for (int i = 0; i < nodes; ++i) {
      double sw = (i == 0 || i == nodes - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      accumulate(std::log(lo) + double(i) * h, sw * h / 3.0 / (x + 1.0));
    }
  }

  EnsembleReport rep;
  rep.success_mass = z;
  rep.rho = rho / z;
  rep.trace_distance = trace_distance_to_pure(rep.rho, inst.x_min);
  return rep;
}

EnsembleReport algo3_exact_ensemble(const LinearSystemInstance& inst,
                                    const Algo3Config& cfg, int grid_points) {
  validate_algo3(inst, cfg);
  return exact_output_ensemble(inst, cfg.bracket_lo, cfg.bracket_hi, cfg.eta, cfg.eta_kp,
                               grid_points);
}

EnsembleReport algo4_exact_ensemble(const LinearSystemInstance& inst,
                                    const OptimalConfig& cfg, int grid_points) {
  const OptimalParams par = derive_optimal_params(inst.kappa, cfg.eps, cfg.hats);
  if (par.steps != 1)
    throw DomainError(
        "algo4_exact_ensemble: enumeration supported for single-step ladders (kappa <= c_hat)");
  const double lo = 1.0;
  const double hi = std::min(inst.kappa, cfg.hats.c_hat);
  return exact_output_ensemble(inst, lo, hi, par.eta[0], par.eta_kp, grid_points);
}

}  // namespace qlss
