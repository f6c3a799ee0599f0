#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qlss/algorithms.hpp"
#include "qlss/bounds.hpp"

#include <cmath>

using namespace qlss;

namespace {

double p_succ_lower(double theta, double eta) {
  const double s = std::sin(2.0 * theta);
  return s * s * std::pow((1.0 - eta) / (1.0 + eta), 2.0);
}

double p_succ_upper(double theta, double eta) {
  const double s2 = std::sin(2.0 * theta) * std::sin(2.0 * theta);
  const double st = std::sin(theta) * std::sin(theta);
  return s2 + 4.0 * eta * eta / ((1.0 + eta) * (1.0 + eta)) * st;
}

}  // namespace

TEST_CASE("solver given the exact norm") {
  const LinearSystemInstance inst = random_instance(8, 12.0, 5.0, 3);

  SUBCASE("vanishing eta drives success probability to one") {
    const SolveOutcome out = solve_given_norm(inst, 1e-6, inst.x_norm(), RunMode::exact);
    CHECK(out.theta_t == doctest::Approx(M_PI / 4).epsilon(1e-12));
    CHECK(out.p_succ >= 1.0 - 1e-4);
    CHECK(out.trace_distance_to_x <= 2e-6);
  }

  SUBCASE("expected query count takes the kappa ln(2 sqrt 2/eps) form") {
    const double eps = 1e-3;
    const double eta = eps / std::sqrt(2.0);
    const SolveOutcome out = solve_given_norm(inst, eta, inst.x_norm(), RunMode::exact);
    const double expected_queries = double(out.queries.total_a()) / out.p_succ;
    const double form = inst.kappa * std::log(2.0 * std::sqrt(2.0) / eps);
    CHECK(expected_queries <= (1.0 + 5.0 * eps) * (form + 2.0));
    CHECK(expected_queries >= form * (1.0 - 1e-3));
  }

  SUBCASE("probe lands inside the success-probability window") {
    const double eta = 0.01;
    const SolveOutcome out = solve_given_norm(inst, eta, 2.0 * inst.x_norm(), RunMode::exact);
    CHECK(out.p_succ >= p_succ_lower(out.theta_t, eta) - 1e-12);
    CHECK(out.p_succ <= p_succ_upper(out.theta_t, eta) + 1e-12);
  }

  SUBCASE("random triples: bounds, trace distance, kernel avoidance") {
    Rng rng(17);
    for (int rep = 0; rep < 100; ++rep) {
      const Index n = 3 + Index(rng.next() % 6);
      const double kappa = 2.0 + rng.uniform() * 30.0;
      const LinearSystemInstance in2 = random_instance(n, kappa, std::nullopt, rng.next());
      const double t = std::exp(rng.uniform(0.0, std::log(kappa)));
      const double eta = std::exp(rng.uniform(std::log(1e-3), std::log(0.5)));
      const SolveOutcome out = solve_given_norm(in2, eta, t, RunMode::exact);
      CHECK(out.p_succ >= p_succ_lower(out.theta_t, eta) - 1e-10);
      CHECK(out.p_succ <= p_succ_upper(out.theta_t, eta) + 1e-10);
      const double ratio = eta / std::cos(out.theta_t);
      if (ratio <= 1.0) {
        CHECK(out.trace_distance_to_x <= ratio + 1e-10);
        CHECK(out.overlap_with_x >= std::sqrt(1.0 - ratio * ratio) - 1e-10);
      }
      // no overlap with ker(A): projecting onto the row space is a no-op
      Vector proj = Vector::Zero(in2.cols());
      for (Index j = 0; j < in2.svd.values.size(); ++j)
        if (in2.svd.values(j) > in2.svd.zero_threshold())
          proj += in2.svd.right.col(j) * in2.svd.right.col(j).dot(out.output_state);
      CHECK((proj - out.output_state).norm() <= 1e-10);
    }
  }

  SUBCASE("sampled mode is deterministic per seed") {
    const SolveOutcome a = solve_given_norm(inst, 0.05, 3.0, RunMode::sampled, 11);
    const SolveOutcome b = solve_given_norm(inst, 0.05, 3.0, RunMode::sampled, 11);
    CHECK(a.succeeded == b.succeeded);
    CHECK(a.queries.total_a() == b.queries.total_a());
  }

  SUBCASE("domain checks") {
    CHECK_THROWS_AS(solve_given_norm(inst, 0.1, 0.5, RunMode::exact), DomainError);
    CHECK_THROWS_AS(solve_given_norm(inst, 0.1, inst.kappa * 2.0, RunMode::exact), DomainError);
    CHECK_THROWS_AS(solve_given_norm(inst, -0.1, 2.0, RunMode::exact), DomainError);
  }
}

TEST_CASE("norm sampling subroutine") {
  SUBCASE("degenerate bracket always returns the endpoint") {
    const LinearSystemInstance inst = random_instance(6, 8.0, 3.0, 5);
    const SystemView view = SystemView::of(inst);
    Rng rng(1);
    QueryLedger ledger;
    for (int i = 0; i < 40; ++i) {
      const auto s = sample_norm_candidate(view, 3.0, 3.0, 0.05, rng, ledger);
      if (s) CHECK(s->t == doctest::Approx(3.0));
    }
    CHECK(ledger.total_a() > 0);
  }

  SUBCASE("success rate clears the lower bound") {
    const LinearSystemInstance inst = random_instance(8, 50.0, 7.0, 23);
    const SystemView view = SystemView::of(inst);
    const double eta = 0.025;
    Rng rng(99);
    QueryLedger ledger;
    const int trials = 20000;
    int hits = 0, deviated3 = 0;
    for (int i = 0; i < trials; ++i) {
      const auto s = sample_norm_candidate(view, 1.0, inst.kappa, eta, rng, ledger);
      if (s) {
        ++hits;
        if (s->t < inst.x_norm() / 3.0 || s->t > 3.0 * inst.x_norm()) ++deviated3;
      }
    }
    const double freq = double(hits) / trials;
    const double bound =
        std::pow((1.0 - eta) / (1.0 + eta), 2.0) / (std::log(inst.kappa) + 1.0);
    CHECK(freq >= bound - 3.0 * std::sqrt(freq * (1.0 - freq) / trials));

    // conditional beta=3 deviation bound
    const double x = std::log(inst.kappa);
    const double dev_bound = std::pow((1.0 + eta) / (1.0 - eta), 2.0) * 4.0 / 10.0 +
                             2.0 * eta * eta * (2.0 * x + 1.0 - 4.0 * std::log(3.0)) /
                                 ((1.0 - eta) * (1.0 - eta));
    const double dev_freq = double(deviated3) / double(hits);
    CHECK(dev_freq <= dev_bound + 3.0 * std::sqrt(dev_bound * (1.0 - dev_bound) / hits));
  }
}

TEST_CASE("exhaustive norm search") {
  SUBCASE("tiny candidate set") {
    const LinearSystemInstance inst = random_instance(4, 2.0, 1.0, 7);
    CHECK(norm_search_candidates(2.0).size() == 2);
    const NormEstimate est = exhaustive_norm_search(inst, 12);
    CHECK(est.value >= inst.x_norm() / 2.0 - 1e-12);
    CHECK(est.value <= inst.x_norm() * 2.0 + 1e-12);
  }

  SUBCASE("ledger equals the closed form exactly") {
    const double kappa = 16.0;
    const LinearSystemInstance inst = random_instance(8, kappa, 4.0, 9);
    const NormEstimate est = exhaustive_norm_search(inst, 4);
    const std::uint64_t t_count = norm_search_candidates(kappa).size();
    const std::uint64_t k = static_cast<std::uint64_t>(
        std::ceil(100.0 * std::log(20.0 * double(t_count))));
    const std::uint64_t ell = static_cast<std::uint64_t>(
        std::ceil(kappa * std::log(2.0 / 0.025) / 2.0));
    CHECK(est.queries.total_a() == 2 * k * t_count * ell);
    CHECK(est.queries.total_b() == 4 * k * t_count * ell);
    CHECK(est.queries.cu_a == k * t_count * ell);
  }

  SUBCASE("two-approximations on seeded instances") {
    int good = 0;
    const int reps = 25;
    for (int i = 0; i < reps; ++i) {
      const double target = std::exp(Rng(i).uniform(0.0, std::log(64.0)));
      const LinearSystemInstance inst = random_instance(8, 64.0, target, 100 + i);
      const NormEstimate est = exhaustive_norm_search(inst, 200 + i);
      if (est.value >= inst.x_norm() / 2.0 * (1 - 1e-12) &&
          est.value <= inst.x_norm() * 2.0 * (1 + 1e-12))
        ++good;
    }
    CHECK(good >= 23);  // 0.95 guarantee, generous slack at 25 reps
  }
}

TEST_CASE("binary norm search") {
  SUBCASE("KP probability crosses one half at the true norm") {
    const LinearSystemInstance inst = random_instance(8, 32.0, 5.0, 31);
    const SystemView view = SystemView::of(inst);
    const double eta = std::sqrt(1.0 / 8.0);
    const double q = probe_kp_success(view, eta, inst.x_norm());
    CHECK(q >= 0.5 - 1e-12);
    CHECK(q <= 0.5 + eta * eta + 1e-12);
    // monotone side information
    CHECK(probe_kp_success(view, eta, std::min(inst.kappa, 2.5 * inst.x_norm())) > 0.5);
    CHECK(probe_kp_success(view, eta, std::max(1.0, 0.4 * inst.x_norm())) < 0.5);
  }

  SUBCASE("ledger equals the closed form exactly") {
    const double kappa = 64.0;
    const LinearSystemInstance inst = random_instance(8, kappa, 6.0, 3);
    const NormEstimate est = binary_norm_search(inst, 8);
    const double t_count = double(norm_search_candidates(kappa).size());
    const std::uint64_t rounds = static_cast<std::uint64_t>(
        std::ceil(std::log(t_count) / std::log(1.5) - 1e-12));
    const std::uint64_t k = static_cast<std::uint64_t>(
        std::ceil(72.0 * std::log(40.0 * double(rounds))));
    const std::uint64_t ell = static_cast<std::uint64_t>(
        std::ceil(kappa * std::log(2.0 / std::sqrt(1.0 / 8.0)) / 2.0));
    CHECK(est.rounds == rounds);
    CHECK(est.queries.total_a() == 2 * k * rounds * ell);
  }

  SUBCASE("two-approximations on seeded instances") {
    int good = 0;
    const int reps = 25;
    for (int i = 0; i < reps; ++i) {
      const double target = std::exp(Rng(1000 + i).uniform(0.0, std::log(64.0)));
      const LinearSystemInstance inst = random_instance(8, 64.0, target, 300 + i);
      const NormEstimate est = binary_norm_search(inst, 400 + i);
      if (est.value >= inst.x_norm() / 2.0 * (1 - 1e-12) &&
          est.value <= inst.x_norm() * 2.0 * (1 + 1e-12))
        ++good;
    }
    CHECK(good >= 23);
  }

  SUBCASE("elimination shrinks the active set to two within the round budget") {
    // worst-case set evolution under the median rule: either all candidates
    // above the median go or all below it go
    for (std::size_t start = 2; start <= 64; ++start) {
      const long rounds = std::max<long>(
          1, long(std::ceil(std::log(double(start)) / std::log(1.5) - 1e-12)));
      std::size_t size = start;
      for (long r = 0; r < rounds; ++r) {
        if (size <= 2) break;
        const std::size_t idx = (size - 1) / 2;
        const std::size_t removed = std::min(idx, size - 1 - idx);
        size -= removed;
      }
      CHECK(size <= 2);
    }
  }
}

TEST_CASE("adiabatic norm search") {
  SUBCASE("consecutive homotopy norms stay in the searched window") {
    const LinearSystemInstance inst = random_instance(8, 64.0, 9.0, 55);
    double prev = 1.0;  // exact at sigma = 1
    for (int j = 1; j <= 6; ++j) {
      const double norm_j = homotopy_norm(inst, 64.0, std::pow(2.0, -j));
      CHECK(norm_j >= prev / 2.0 * (1 - 1e-12));
      CHECK(norm_j <= 4.0 * prev * (1 + 1e-12));
      prev = norm_j;
    }
  }

  SUBCASE("two-approximations and linear query scaling") {
    std::vector<double> per_kappa;
    for (double kappa : {8.0, 16.0, 32.0, 64.0}) {
      int good = 0;
      const int reps = 6;
      double queries = 0.0;
      for (int i = 0; i < reps; ++i) {
        const double target = std::exp(Rng(77 + i).uniform(0.0, std::log(kappa)));
        const LinearSystemInstance inst =
            random_instance(8, kappa, target, 500 + i + int(kappa));
        const NormEstimate est = adiabatic_norm_search(inst, 600 + i);
        queries += double(est.queries.total_a());
        if (est.value >= inst.x_norm() / 2.0 * (1 - 1e-12) &&
            est.value <= inst.x_norm() * 2.0 * (1 + 1e-12))
          ++good;
      }
      CHECK(good >= 5);
      per_kappa.push_back(queries / double(reps) / kappa);
    }
    const double mx = *std::max_element(per_kappa.begin(), per_kappa.end());
    const double mn = *std::min_element(per_kappa.begin(), per_kappa.end());
    CHECK(mx / mn <= 2.25);  // Q/kappa flat across a decade of kappa
  }
}

TEST_CASE("amplitude-estimation refinement") {
  const LinearSystemInstance inst = random_instance(8, 16.0, 6.0, 71);

  SUBCASE("q_t stays inside [0.2, 0.8] across valid inputs") {
    const SystemView view = SystemView::of(inst);
    for (double r : {0.5, 0.8, 1.0, 1.3, 2.0}) {
      const double t = r * inst.x_norm();
      const double q_t = t * t / (t * t + inst.x_norm() * inst.x_norm());
      CHECK(q_t >= 0.2 - 1e-12);
      CHECK(q_t <= 0.8 + 1e-12);
      const double q = probe_kp_success(view, std::sqrt(1e-2 / 100.0), t);
      CHECK(std::abs(q - q_t) <= 1e-4 + 1e-12);  // eta^2 window
    }
  }

  SUBCASE("ideal mode achieves the ratio with high probability") {
    const double eps = 1e-2;
    int good = 0;
    const int reps = 300;
    for (int i = 0; i < reps; ++i) {
      const NormEstimate est = refine_norm_amplitude_estimation(
          inst, 1.7 * inst.x_norm(), eps, AeMode::ideal, 900 + i);
      const double ratio = est.value / inst.x_norm();
      if (ratio <= 1.0 + eps && ratio >= 1.0 / (1.0 + eps)) ++good;
    }
    CHECK(double(good) / reps >= 0.95 - 3.0 * std::sqrt(0.05 * 0.95 / reps));
  }

  SUBCASE("phase-distribution mode also lands the ratio") {
    const double eps = 0.05;
    int good = 0;
    const int reps = 40;
    for (int i = 0; i < reps; ++i) {
      const NormEstimate est = refine_norm_amplitude_estimation(
          inst, 0.9 * inst.x_norm(), eps, AeMode::phase_distribution, 1300 + i);
      const double ratio = est.value / inst.x_norm();
      if (ratio <= 1.0 + eps && ratio >= 1.0 / (1.0 + eps)) ++good;
    }
    CHECK(good >= 36);
  }

  SUBCASE("input validation") {
    CHECK_THROWS_AS(refine_norm_amplitude_estimation(inst, 3.0 * inst.x_norm(), 1e-2,
                                                     AeMode::ideal, 1),
                    BadInput);
  }
}

TEST_CASE("random-t pipeline") {
  const LinearSystemInstance inst = random_instance(8, 16.0, 5.0, 202);
  const Algo3Config cfg = make_algo3_config(1.0, inst.kappa, 1e-2);

  SUBCASE("config follows the mu parameterization") {
    const double spread = 3.0 + 2.0 * std::log((16.0 * 16.0 + 1.0) / 2.0);
    CHECK(cfg.mu == doctest::Approx(0.25));
    CHECK(cfg.eta / (1.0 - cfg.eta) == doctest::Approx(0.25 / std::sqrt(spread)).epsilon(1e-12));
    CHECK(cfg.eta_kp ==
          doctest::Approx((1e-2 / 0.25) * std::sqrt(1.0 - 0.0625) / std::sqrt(1.0 - 1e-4)));
  }

  SUBCASE("sampled runs succeed and track the ledger exactly") {
    const std::uint64_t ell = static_cast<std::uint64_t>(
        std::ceil(inst.kappa * std::log(2.0 / cfg.eta) / 2.0));
    const std::uint64_t ell_kp = static_cast<std::uint64_t>(
        std::ceil(inst.kappa * std::log(2.0 / cfg.eta_kp) / 2.0));
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
      const SolveOutcome out = full_qlss_random_t(inst, cfg, seed);
      REQUIRE(out.succeeded);
      CHECK(out.output_state.size() == inst.cols());
      // total = attempts * KR cost + (integer) * KP cost
      const std::uint64_t kr_part = out.attempts * 2 * ell;
      REQUIRE(out.queries.total_a() >= kr_part + 2 * ell_kp);
      const std::uint64_t rem = out.queries.total_a() - kr_part;
      CHECK(rem % (2 * ell_kp) == 0);
      CHECK(out.trace_distance_to_x <= 0.2);  // single-draw sanity, not the ensemble bound
    }
  }

  SUBCASE("identity instance returns the solution immediately") {
    const LinearSystemInstance unit = random_instance(4, 1.0, std::nullopt, 77);
    const Algo3Config ucfg = make_algo3_config(1.0, 1.0, 1e-3);
    const SolveOutcome out = full_qlss_random_t(unit, ucfg, 5);
    CHECK(out.succeeded);
    CHECK(out.t_used == doctest::Approx(1.0));
    CHECK(out.trace_distance_to_x <= 1e-3);
  }

  SUBCASE("exact ensemble meets the trace-distance contract") {
    const EnsembleReport rep = algo3_exact_ensemble(inst, cfg, 801);
    CHECK(rep.trace_distance <= 1e-2);
    CHECK(rep.success_mass > 0.1);
    // refinement is what buys the bound; the raw bracket spread alone is wider
    CHECK(rep.trace_distance <= cfg.eps);
  }

  SUBCASE("quadrature ensemble agrees with sampled runs") {
    const EnsembleReport rep = algo3_exact_ensemble(inst, cfg, 801);
    const Vector x_hat = inst.x_min.normalized();
    const double exact_fidelity = (x_hat.adjoint() * rep.rho * x_hat)(0, 0).real();
    const int reps = 3000;
    double mean = 0.0, m2 = 0.0;
    for (int i = 0; i < reps; ++i) {
      const SolveOutcome out = full_qlss_random_t(inst, cfg, 50000 + i);
      REQUIRE(out.succeeded);
      const double f = out.overlap_with_x * out.overlap_with_x;
      mean += f;
      m2 += f * f;
    }
    mean /= reps;
    const double sd = std::sqrt(std::max(0.0, m2 / reps - mean * mean) / reps);
    CHECK(std::abs(mean - exact_fidelity) <= 3.0 * sd + 1e-9);
  }

  SUBCASE("practical bound dominates the exact bound formula on a kappa grid") {
    for (double kappa : {3.0, 10.0, 1e3, 1e6}) {
      BoundParams p;
      p.kappa = kappa;
      p.eps = 1e-8;
      const double exact = bound_formula("algo3", p).value;
      const double practical = bound_formula("algo3_practical", p).value;
      CHECK(exact <= practical * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("fpaa pipeline") {
  const LinearSystemInstance inst = random_instance(8, 16.0, 5.0, 404);

  SUBCASE("round count and the delta -> 1 limit") {
    CHECK(fpaa_round_count(0.9, 0.999999) == 1);  // single unamplified run
    CHECK(fpaa_amplified_probability(0.37, 1, 1.0 - 1e-12) == doctest::Approx(0.37).epsilon(1e-6));
    CHECK(fpaa_round_count(0.25, 0.25) >= 3);
  }

  SUBCASE("amplified success probability beats 1 - delta") {
    FpaaConfig cfg;
    cfg.base = make_algo3_config(1.0, inst.kappa, 1e-2);
    cfg.delta = 0.25;
    cfg.discretization_bits = 8;
    const FpaaSession session(inst, cfg);
    CHECK(session.amplified_probability() >= 1.0 - cfg.delta);
    CHECK(session.unamplified_probability() >= session.lambda() - 1e-12);
    const long rounds = session.rounds();
    // empirical frequency of first-attempt success across seeds
    int first_try = 0;
    const int reps = 10000;
    std::uint64_t per_attempt = 0;
    double mean_queries = 0.0;
    for (int i = 0; i < reps; ++i) {
      const SolveOutcome out = session.run(3000 + i);
      REQUIRE(out.succeeded);
      if (out.attempts == 1) ++first_try;
      per_attempt = out.queries.total_a() / out.attempts;
      mean_queries += double(out.queries.total_a());
    }
    mean_queries /= double(reps);
    // KP can also fail, so compare against (1-delta)(1-mu^2) minus sampling slack
    const double floor_p = (1.0 - cfg.delta) * (1.0 - 0.0625);
    CHECK(double(first_try) / reps >= floor_p - 3.0 * std::sqrt(0.25 / reps));
    // each attempt costs rounds * 2 * ell KR queries (plus one KP on success)
    const std::uint64_t ell = static_cast<std::uint64_t>(
        std::ceil(inst.kappa * std::log(2.0 / cfg.base.eta) / 2.0));
    CHECK(per_attempt >= std::uint64_t(rounds) * 2 * ell);
    // measured mean stays below the compact bound for this parameterization
    BoundParams p;
    p.kappa = inst.kappa;
    p.eps = cfg.base.eps;
    CHECK(mean_queries <= bound_formula("fpaa_practical", p).value);
  }

  SUBCASE("practical bound dominates the exact formula") {
    for (double kappa : {3.0, 50.0, 1e4, 1e6}) {
      BoundParams p;
      p.kappa = kappa;
      p.eps = 1e-8;
      p.delta = 0.25;
      const double exact = bound_formula("fpaa", p).value;
      const double practical = bound_formula("fpaa_practical", p).value;
      CHECK(exact <= practical * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("optimal pipeline") {
  SUBCASE("parameter relations") {
    const OptimalParams par = derive_optimal_params(400.0, 1e-2);
    CHECK(par.steps == 2);
    CHECK(par.sigma[1] == doctest::Approx(1.0 / 400.0));
    CHECK(par.sigma[0] == doctest::Approx(20.0 / 400.0));
    CHECK(par.beta[1] == doctest::Approx(15.4 / 3.37));
    CHECK(par.chi[1] == doctest::Approx(0.0398));
    CHECK(par.chi[0] == doctest::Approx(0.0398 / 5.41));
    for (long j = 0; j < 2; ++j)
      CHECK(par.eta[j] == doctest::Approx(par.chi[j] / (1.0 + par.chi[j])));
    CHECK(par.mu > 0.0);
    CHECK(par.mu < 1.0);
    CHECK(par.eta_kp ==
          doctest::Approx((1e-2 / par.mu) * std::sqrt(1.0 - par.mu * par.mu) /
                          std::sqrt(1.0 - 1e-4)));
    // m_j: the step-J window is c_hat * beta_hat^2
    const OptimalHats h;
    const double span = std::log(h.c_hat * h.beta_hat * h.beta_hat) + 1.0;
    const double expect =
        1.0 * std::log(1.0 / h.delta_hat + 1.0) *
        std::pow((1.0 + par.eta[1]) / (1.0 - par.eta[1]), 2.0) * span;
    CHECK(par.m_raw[1] == doctest::Approx(expect).epsilon(1e-12));
    CHECK(derive_optimal_params(16.0, 1e-2).steps == 1);
  }

  SUBCASE("bracket invariant along the ladder") {
    const LinearSystemInstance inst = random_instance(4, 400.0, 30.0, 13);
    const OptimalParams par = derive_optimal_params(400.0, 1e-2);
    // whenever t_{j-1} is beta_{j-1}-good, the next norm lies in the bracket
    const double norm1 = homotopy_norm(inst, inst.kappa, par.sigma[0]);
    const double norm2 = homotopy_norm(inst, inst.kappa, par.sigma[1]);
    for (double r : {1.0 / par.beta[0], 1.0, par.beta[0]}) {
      const double t1 = norm1 * r;
      const double lo = std::max(1.0, t1 / par.beta[0]);
      const double hi = std::min(1.0 / par.sigma[1], par.hats.c_hat * t1 * par.beta[0]);
      CHECK(norm2 >= lo * (1.0 - 1e-12));
      CHECK(norm2 <= hi * (1.0 + 1e-12));
    }
  }

  SUBCASE("desk-scale run solves the problem") {
    const LinearSystemInstance inst = random_instance(8, 16.0, 5.0, 606);
    OptimalConfig cfg;
    cfg.eps = 1e-2;
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      const SolveOutcome out = full_qlss_optimal(inst, cfg, seed);
      REQUIRE(out.succeeded);
      CHECK(out.trace_distance_to_x <= 0.2);
      CHECK(out.t_used >= inst.x_norm() / 16.0);
      CHECK(out.t_used <= inst.x_norm() * 16.0);
    }
    const EnsembleReport rep = algo4_exact_ensemble(inst, cfg, 801);
    CHECK(rep.trace_distance <= cfg.eps);
  }

  SUBCASE("two-step ladder also runs") {
    const LinearSystemInstance inst = random_instance(4, 400.0, 30.0, 8);
    OptimalConfig cfg;
    cfg.eps = 0.05;
    const SolveOutcome out = full_qlss_optimal(inst, cfg, 2);
    CHECK(out.succeeded);
    CHECK(out.trace_distance_to_x <= 0.3);
    CHECK_THROWS_AS(algo4_exact_ensemble(inst, cfg), DomainError);
  }
}

TEST_CASE("monte carlo driver") {
  SUBCASE("deterministic runs give a zero-width interval") {
    auto run = [](std::uint64_t) {
      QueryLedger q;
      q.cu_a = 21;
      return q;
    };
    const MonteCarloResult res = expected_query_monte_carlo(run, 64, 5, 2);
    CHECK(res.mean == doctest::Approx(21.0));
    CHECK(res.stddev == doctest::Approx(0.0));
    CHECK(res.ci_high - res.ci_low == doctest::Approx(0.0));
    CHECK(res.histogram.at(21) == 64);
  }

  SUBCASE("doubling trials roughly halves the interval") {
    auto run = [](std::uint64_t seed) {
      Rng rng(seed);
      QueryLedger q;
      q.cu_a = 10 + (rng.next() % 100);
      return q;
    };
    const MonteCarloResult a = expected_query_monte_carlo(run, 4000, 7, 2);
    const MonteCarloResult b = expected_query_monte_carlo(run, 16000, 7, 2);
    const double shrink = (a.ci_high - a.ci_low) / (b.ci_high - b.ci_low);
    CHECK(shrink >= 1.6);
    CHECK(shrink <= 2.4);
  }

  SUBCASE("worker count does not change the aggregate") {
    auto run = [](std::uint64_t seed) {
      Rng rng(seed);
      QueryLedger q;
      q.u_a = rng.next() % 7;
      return q;
    };
    const MonteCarloResult a = expected_query_monte_carlo(run, 500, 3, 1);
    const MonteCarloResult b = expected_query_monte_carlo(run, 500, 3, 2);
    CHECK(a.mean == b.mean);
    CHECK(a.histogram == b.histogram);
  }

  SUBCASE("failures are counted") {
    auto run = [](std::uint64_t seed) -> QueryLedger {
      if (seed % 3 == 0) throw std::runtime_error("boom");
      return QueryLedger{};
    };
    const MonteCarloResult res = expected_query_monte_carlo(run, 300, 11, 2);
    CHECK(res.failures > 50);
    CHECK(res.failures < 250);
  }
}
