#include "qlss/cli.hpp"

#include "qlss/algorithms.hpp"
#include "qlss/bounds.hpp"
#include "qlss/circuit.hpp"
#include "qlss/filter.hpp"
#include "qlss/io.hpp"
#include "qlss/system.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

namespace qlss {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliError : std::runtime_error {
  std::string code;
  CliError(std::string c, const std::string& msg) : std::runtime_error(msg), code(std::move(c)) {}
};

void require_keys(const json& j, const std::vector<std::string>& allowed,
                  const std::string& where) {
  if (!j.is_object()) throw CliError("ConfigError", where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw CliError("ConfigError", where + ": unknown key '" + key + "'");
  }
}

double get_num(const json& j, const std::string& key, std::optional<double> fallback = {}) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    throw CliError("ConfigError", "missing numeric field '" + key + "'");
  }
  if (!j[key].is_number()) throw CliError("ConfigError", "field '" + key + "' must be a number");
  return j[key].get<double>();
}

std::string get_str(const json& j, const std::string& key, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_string()) throw CliError("ConfigError", "field '" + key + "' must be a string");
  return j[key].get<std::string>();
}

struct CommonOpts {
  std::uint64_t seed = 0;
  std::uint64_t trials = 1;
  std::string out_dir = ".";
  bool exact = false;
  bool sampled = false;
  std::string config_path;
  json config = json::object();
};

LinearSystemInstance instance_from_config(const json& spec, std::uint64_t seed) {
  require_keys(spec, {"file", "generator", "hard"}, "instance");
  if (spec.contains("file")) return load_instance(spec["file"].get<std::string>());
  if (spec.contains("hard")) {
    const json& h = spec["hard"];
    require_keys(h, {"N", "kappa", "eps", "case", "seed"}, "instance.hard");
    const std::string c = get_str(h, "case", "i");
    return hard_instance_family(static_cast<Index>(get_num(h, "N")), get_num(h, "kappa"),
                                get_num(h, "eps"), c == "ii" ? HardCase::ii : HardCase::i,
                                static_cast<std::uint64_t>(get_num(h, "seed", double(seed))));
  }
  const json& g = spec.contains("generator") ? spec["generator"] : json::object();
  require_keys(g, {"n", "kappa", "norm_target", "seed"}, "instance.generator");
  std::optional<double> target;
  if (g.contains("norm_target") && !g["norm_target"].is_null())
    target = get_num(g, "norm_target");
  return random_instance(static_cast<Index>(get_num(g, "n", 8.0)), get_num(g, "kappa", 16.0),
                         target, static_cast<std::uint64_t>(get_num(g, "seed", double(seed))));
}

int thread_count() {
  if (const char* env = std::getenv("QLSS_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const int n = static_cast<int>(std::thread::hardware_concurrency());
  return n > 0 ? n : 1;
}

/// Runs `fn(trial, trial_seed)` for every trial and returns the rows in
/// trial order regardless of the worker count. The first per-trial
/// exception is rethrown after the pool drains.
std::vector<std::string> parallel_rows(
    std::uint64_t trials, std::uint64_t seed,
    const std::function<std::string(std::uint64_t, std::uint64_t)>& fn) {
  std::vector<std::string> rows(trials);
  const int workers = std::min<int>(thread_count(), static_cast<int>(trials));
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto work = [&](std::uint64_t b, std::uint64_t e) {
    for (std::uint64_t i = b; i < e; ++i) {
      try {
        rows[i] = fn(i, derive_seed(seed, i));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  if (workers <= 1) {
    work(0, trials);
  } else {
    std::vector<std::thread> pool;
    const std::uint64_t chunk = (trials + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const std::uint64_t b = std::min<std::uint64_t>(w * chunk, trials);
      const std::uint64_t e = std::min<std::uint64_t>(b + chunk, trials);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return rows;
}

std::string out_path(const CommonOpts& opts, const std::string& name) {
  fs::create_directories(opts.out_dir);
  return (fs::path(opts.out_dir) / name).string();
}

int cmd_solve(const CommonOpts& opts, std::ostream& out) {
  const json& cfg = opts.config;
  require_keys(cfg,
               {"algorithm", "instance", "eta", "t", "eps", "bracket", "mu", "delta",
                "d_bits", "hats", "iteration_cap"},
               "solve config");
  const std::string algo = get_str(cfg, "algorithm", "random-t");
  const LinearSystemInstance inst =
      instance_from_config(cfg.contains("instance") ? cfg["instance"] : json::object(), opts.seed);
  const double eps = get_num(cfg, "eps", 1e-2);

  double lo = 1.0, hi = inst.kappa;
  if (cfg.contains("bracket")) {
    if (!cfg["bracket"].is_array() || cfg["bracket"].size() != 2)
      throw CliError("ConfigError", "bracket must be [lo, hi]");
    lo = cfg["bracket"][0].get<double>();
    hi = cfg["bracket"][1].get<double>();
  }

  std::ostringstream csv;
  csv << "trial,algorithm,succeeded,t,queries_a,queries_b,trace_distance,overlap,attempts\n";
  auto emit = [&](std::uint64_t trial, const SolveOutcome& o) {
    std::ostringstream row;
    row << trial << ',' << algo << ',' << (o.succeeded ? 1 : 0) << ','
        << format_double(o.t_used) << ',' << o.queries.total_a() << ',' << o.queries.total_b()
        << ',' << format_double(o.trace_distance_to_x) << ','
        << format_double(o.overlap_with_x) << ',' << o.attempts << '\n';
    return row.str();
  };

  std::vector<std::string> rows;
  if (algo == "given-norm") {
    const double eta = get_num(cfg, "eta", 0.01);
    const double t = get_num(cfg, "t");
    rows = parallel_rows(opts.trials, opts.seed, [&](std::uint64_t i, std::uint64_t s) {
      return emit(i, solve_given_norm(inst, eta, t,
                                      opts.exact ? RunMode::exact : RunMode::sampled, s));
    });
  } else if (algo == "random-t") {
    Algo3Config acfg = make_algo3_config(lo, hi, eps, get_num(cfg, "mu", 0.25));
    if (cfg.contains("eta")) acfg.eta = get_num(cfg, "eta");
    if (cfg.contains("iteration_cap"))
      acfg.iteration_cap = static_cast<std::uint64_t>(get_num(cfg, "iteration_cap"));
    if (opts.exact) {
      const EnsembleReport rep = algo3_exact_ensemble(inst, acfg);
      json summary;
      summary["algorithm"] = "random-t";
      summary["mode"] = "exact";
      summary["trace_distance"] = rep.trace_distance;
      summary["success_mass"] = rep.success_mass;
      write_text_file(out_path(opts, "exact_summary.json"), summary.dump(2));
      out << summary.dump(2) << "\n";
    } else {
      rows = parallel_rows(opts.trials, opts.seed, [&](std::uint64_t i, std::uint64_t s) {
        return emit(i, full_qlss_random_t(inst, acfg, s));
      });
    }
  } else if (algo == "fpaa") {
    FpaaConfig fcfg;
    fcfg.base = make_algo3_config(lo, hi, eps, get_num(cfg, "mu", 0.25));
    fcfg.delta = get_num(cfg, "delta", 0.25);
    fcfg.discretization_bits = static_cast<int>(get_num(cfg, "d_bits", 8.0));
    rows = parallel_rows(opts.trials, opts.seed, [&](std::uint64_t i, std::uint64_t s) {
      return emit(i, full_qlss_fpaa(inst, fcfg, s));
    });
  } else if (algo == "optimal") {
    OptimalConfig ocfg;
    ocfg.eps = eps;
    if (cfg.contains("hats")) {
      const json& h = cfg["hats"];
      require_keys(h, {"beta", "chi", "c", "r", "q", "delta"}, "hats");
      ocfg.hats.beta_hat = get_num(h, "beta", ocfg.hats.beta_hat);
      ocfg.hats.chi_hat = get_num(h, "chi", ocfg.hats.chi_hat);
      ocfg.hats.c_hat = get_num(h, "c", ocfg.hats.c_hat);
      ocfg.hats.r_hat = get_num(h, "r", ocfg.hats.r_hat);
      ocfg.hats.q_hat = get_num(h, "q", ocfg.hats.q_hat);
      ocfg.hats.delta_hat = get_num(h, "delta", ocfg.hats.delta_hat);
    }
    if (opts.exact) {
      const EnsembleReport rep = algo4_exact_ensemble(inst, ocfg);
      json summary;
      summary["algorithm"] = "optimal";
      summary["mode"] = "exact";
      summary["trace_distance"] = rep.trace_distance;
      summary["success_mass"] = rep.success_mass;
      write_text_file(out_path(opts, "exact_summary.json"), summary.dump(2));
      out << summary.dump(2) << "\n";
    } else {
      rows = parallel_rows(opts.trials, opts.seed, [&](std::uint64_t i, std::uint64_t s) {
        return emit(i, full_qlss_optimal(inst, ocfg, s));
      });
    }
  } else {
    throw CliError("ConfigError", "unknown algorithm '" + algo + "'");
  }

  for (const auto& r : rows) csv << r;
  const std::string path = out_path(opts, "solve.csv");
  write_text_file(path, csv.str());
  out << "wrote " << path << "\n";
  return 0;
}

int cmd_norm_est(const CommonOpts& opts, std::ostream& out) {
  const json& cfg = opts.config;
  require_keys(cfg, {"method", "instance", "eps", "t_in", "ae_mode"}, "norm-est config");
  const std::string method = get_str(cfg, "method", "exhaustive");
  const LinearSystemInstance inst =
      instance_from_config(cfg.contains("instance") ? cfg["instance"] : json::object(), opts.seed);
  const double true_norm = inst.x_norm();

  std::ostringstream csv;
  csv << "trial,method,t,true_norm,ratio,queries_a,queries_b,rounds,failed\n";
  auto rows = parallel_rows(opts.trials, opts.seed, [&](std::uint64_t i, std::uint64_t s) {
    NormEstimate est;
    bool failed = false;
    try {
      if (method == "exhaustive")
        est = exhaustive_norm_search(inst, s);
      else if (method == "binary")
        est = binary_norm_search(inst, s);
      else if (method == "adiabatic")
        est = adiabatic_norm_search(inst, s);
      else if (method == "ae-refine")
        est = refine_norm_amplitude_estimation(
            inst, get_num(cfg, "t_in", true_norm), get_num(cfg, "eps", 1e-2),
            get_str(cfg, "ae_mode", "ideal") == "phase-distribution"
                ? AeMode::phase_distribution
                : AeMode::ideal,
            s);
      else
        throw CliError("ConfigError", "unknown method '" + method + "'");
    } catch (const SearchFailed&) {
      failed = true;
    }
    std::ostringstream row;
    row << i << ',' << method << ',' << format_double(est.value) << ','
        << format_double(true_norm) << ',' << format_double(est.value / true_norm) << ','
        << est.queries.total_a() << ',' << est.queries.total_b() << ',' << est.rounds << ','
        << (failed ? 1 : 0) << '\n';
    return row.str();
  });
  for (const auto& r : rows) csv << r;
  const std::string path = out_path(opts, "norm_est.csv");
  write_text_file(path, csv.str());
  out << "wrote " << path << "\n";
  return 0;
}

int cmd_sweep_fig2(const CommonOpts& opts, std::ostream& out) {
  const json& cfg = opts.config;
  require_keys(cfg, {"points", "mode", "instance", "eta", "svg"}, "sweep-fig2 config");
  const int points = static_cast<int>(get_num(cfg, "points", 200.0));
  if (points < 2) throw CliError("ConfigError", "points must be >= 2");
  const std::string mode = get_str(cfg, "mode", "analytic");
  const bool svg = !cfg.contains("svg") || cfg["svg"].get<bool>();

  Series kr{"KR success sin^2(2 theta)", {}, {}};
  Series kp{"KP success cos^2(theta)", {}, {}};
  std::ostringstream csv;
  csv << "ratio,p_kr,p_kp\n";

  if (mode == "analytic") {
    // eta -> 0 closed forms against the ratio r = t/||x||
    for (int i = 0; i < points; ++i) {
      const double r = 0.1 + (10.0 - 0.1) * double(i) / double(points - 1);
      const double p_kr = 4.0 * r * r / ((1.0 + r * r) * (1.0 + r * r));
      const double p_kp = 1.0 / (1.0 + 1.0 / (r * r));
      kr.x.push_back(r);
      kr.y.push_back(p_kr);
      kp.x.push_back(r);
      kp.y.push_back(p_kp);
      csv << format_double(r) << ',' << format_double(p_kr) << ',' << format_double(p_kp)
          << '\n';
    }
  } else if (mode == "exact") {
    const LinearSystemInstance inst = instance_from_config(
        cfg.contains("instance") ? cfg["instance"] : json::object(), opts.seed);
    const double eta = get_num(cfg, "eta", 1e-3);
    const SystemView view = SystemView::of(inst);
    const double xn = inst.x_norm();
    for (int i = 0; i < points; ++i) {
      const double lo = 1.0 / xn > 0.1 ? 1.0 / xn : 0.1;  // keep t within [1, kappa]
      const double hi = std::min(10.0, inst.kappa / xn);
      const double r = lo + (hi - lo) * double(i) / double(points - 1);
      const double t = r * xn;
      const Algo1Probe probe = probe_algo1(view, eta, t);
      const double q_kp = probe_kp_success(view, eta, t);
      kr.x.push_back(r);
      kr.y.push_back(probe.p_succ);
      kp.x.push_back(r);
      kp.y.push_back(q_kp);
      csv << format_double(r) << ',' << format_double(probe.p_succ) << ','
          << format_double(q_kp) << '\n';
    }
  } else {
    throw CliError("ConfigError", "unknown mode '" + mode + "'");
  }

  const std::string csv_path = out_path(opts, "fig2.csv");
  write_text_file(csv_path, csv.str());
  out << "wrote " << csv_path << "\n";
  if (svg) {
    const std::string svg_path = out_path(opts, "fig2.svg");
    write_text_file(svg_path,
                    render_svg({kr, kp}, "Success probability vs t/||x||", "t/||x||",
                               "success probability"));
    out << "wrote " << svg_path << "\n";
  }
  return 0;
}

int cmd_verify_circuits(const CommonOpts& opts, std::ostream& out) {
  const json& cfg = opts.config;
  require_keys(cfg, {"instance", "t", "sigma"}, "verify-circuits config");
  json spec = cfg.contains("instance") ? cfg["instance"] : json::object();
  if (spec.empty()) spec = json{{"generator", {{"n", 4}, {"kappa", 8.0}, {"seed", opts.seed}}}};
  const LinearSystemInstance inst = instance_from_config(spec, opts.seed);
  const double t = get_num(cfg, "t", std::min(inst.kappa, 2.0));
  const double sigma = get_num(cfg, "sigma", 0.7);

  const int s = system_qubits_for(inst.rows(), inst.cols());
  const Index ds = Index(1) << s;
  CircuitInputs in;
  in.u_a = dilate_block_encoding(pad_to(inst.a, ds, ds));
  in.u_b = state_prep_unitary(pad_to(inst.b, ds));
  in.m = inst.rows();
  in.n = inst.cols();
  in.t = t;
  in.f_sigma = schedule_f(sigma, inst.kappa);

  struct Row {
    const char* circuit;
    CircuitKind kind;
    Matrix target;
  };
  const AugmentedSystem aug = augment(inst, t);
  const HomotopyPoint pt = homotopy_point(inst, sigma);

  // U_barAsigma target in circuit wire order (extra qubit is the least
  // significant system index)
  Matrix bar_target = Matrix::Zero(2 * ds, 2 * ds);
  {
    const Matrix apad = pad_to(inst.a, ds, ds);
    const double f = in.f_sigma;
    const double g = std::sqrt(std::max(0.0, 1.0 - f * f));
    for (Index r = 0; r < ds; ++r)
      for (Index c = 0; c < ds; ++c) {
        bar_target(2 * r, 2 * c) = g * apad(r, c);
        if (r == c && r < inst.rows()) bar_target(2 * r, 2 * c + 1) = f;
      }
  }
  Matrix pad_target = Matrix::Zero(2 * ds, 2 * ds);
  for (Index r = 0; r < ds; ++r)
    for (Index c = 0; c < ds; ++c) pad_target(2 * r, 2 * c) = in.u_a.encoded(r, c);

  std::vector<Row> rows;
  rows.push_back({"U_G", CircuitKind::u_g, pad_to(build_G(inst), ds, ds)});
  rows.push_back({"U_At", CircuitKind::u_a_t, pad_to(aug.a_t, ds, ds)});
  rows.push_back({"U_bprime", CircuitKind::u_b_prime, Matrix()});
  rows.push_back({"U_Gt", CircuitKind::u_g_t, pad_to(build_G_t(aug), ds, ds)});
  rows.push_back({"U_barAsigma", CircuitKind::u_bar_a_sigma, bar_target});
  rows.push_back({"padded U_A", CircuitKind::padded_u_a, pad_target});

  std::ostringstream csv;
  csv << "circuit,max_error,unitarity_error,status\n";
  bool all_ok = true;
  for (const auto& row : rows) {
    const GateCircuit circ = assemble_circuit(row.kind, in);
    const Matrix u = circ.to_matrix();
    const double uerr = unitarity_error(u);
    double err;
    if (row.kind == CircuitKind::u_b_prime) {
      // state preparation: check the output state and the ancilla return
      Vector e0 = Vector::Zero(circ.dim());
      e0(0) = Complex(1.0, 0.0);
      Vector prepared = u * e0;
      Vector expected = Vector::Zero(circ.dim());
      expected.head(ds) = pad_to(aug.b_prime, ds);
      err = (prepared - expected).cwiseAbs().maxCoeff();
    } else {
      err = verify_block_encoding(circ, row.target, circ.ancilla_wires);
    }
    const bool ok = err <= tol().reconstruction && uerr <= tol().reconstruction;
    all_ok = all_ok && ok;
    out << row.circuit << ": max error " << format_double(err) << " -> "
        << (ok ? "PASS" : "FAIL") << "\n";
    csv << row.circuit << ',' << format_double(err) << ',' << format_double(uerr) << ','
        << (ok ? "PASS" : "FAIL") << '\n';
  }
  const std::string path = out_path(opts, "circuits.csv");
  write_text_file(path, csv.str());
  out << "wrote " << path << "\n";
  return all_ok ? 0 : 2;
}

int cmd_bench_bounds(const CommonOpts& opts, std::ostream& out, double kappa, double eps) {
  const json& cfg = opts.config;
  require_keys(cfg, {"kappa", "eps", "measure"}, "bench-bounds config");
  if (cfg.contains("kappa")) kappa = get_num(cfg, "kappa");
  if (cfg.contains("eps")) eps = get_num(cfg, "eps");
  const std::string csv = table1_csv(kappa, eps);
  const std::string path = out_path(opts, "bounds.csv");
  write_text_file(path, csv);
  out << csv;
  out << "wrote " << path << "\n";

  // optional desk-scale measurement of the simulated pipelines against
  // their bound formulas
  if (cfg.contains("measure")) {
    const json& m = cfg["measure"];
    require_keys(m, {"kappa", "eps", "n", "trials", "delta", "d_bits"}, "measure");
    const double mk = get_num(m, "kappa", 16.0);
    const double me = get_num(m, "eps", 1e-3);
    const Index n = static_cast<Index>(get_num(m, "n", 8.0));
    const std::uint64_t trials = static_cast<std::uint64_t>(get_num(m, "trials", 200.0));
    const double delta = get_num(m, "delta", 0.25);
    const int d_bits = static_cast<int>(get_num(m, "d_bits", 6.0));

    std::vector<MeasuredBenchRow> rows;
    BoundParams p;
    p.kappa = mk;
    p.eps = me;

    const Algo3Config a3 = make_algo3_config(1.0, mk, me);
    rows.push_back({"random-t", mk, me, bound_formula("algo3", p).value,
                    expected_query_monte_carlo(
                        [&](std::uint64_t s) {
                          const LinearSystemInstance inst =
                              random_instance(n, mk, std::nullopt, derive_seed(s, 1));
                          return full_qlss_random_t(inst, a3, derive_seed(s, 2)).queries;
                        },
                        trials, opts.seed)});

    BoundParams pf = p;
    pf.delta = delta;
    pf.d_bits = d_bits;
    FpaaConfig fc;
    fc.base = a3;
    fc.delta = delta;
    fc.discretization_bits = d_bits;
    rows.push_back({"fpaa", mk, me, bound_formula("fpaa", pf).value,
                    expected_query_monte_carlo(
                        [&](std::uint64_t s) {
                          const LinearSystemInstance inst =
                              random_instance(n, mk, std::nullopt, derive_seed(s, 3));
                          return full_qlss_fpaa(inst, fc, derive_seed(s, 4)).queries;
                        },
                        trials, opts.seed)});

    OptimalConfig oc;
    oc.eps = me;
    rows.push_back({"optimal", mk, me, bound_formula("optimal", p).value,
                    expected_query_monte_carlo(
                        [&](std::uint64_t s) {
                          const LinearSystemInstance inst =
                              random_instance(n, mk, std::nullopt, derive_seed(s, 5));
                          return full_qlss_optimal(inst, oc, derive_seed(s, 6)).queries;
                        },
                        trials, opts.seed)});

    const std::string mpath = out_path(opts, "bench_measured.csv");
    write_text_file(mpath, measured_bench_csv(rows));
    out << "wrote " << mpath << "\n";
  }
  return 0;
}

int cmd_hard_instance(const CommonOpts& opts, std::ostream& out) {
  const json& cfg = opts.config;
  require_keys(cfg, {"N", "kappa", "eps", "case", "seed"}, "hard-instance config");
  const Index n_size = static_cast<Index>(get_num(cfg, "N", 8.0));
  const double kappa = get_num(cfg, "kappa", 3.0);
  const double eps = get_num(cfg, "eps", 0.25);
  const std::string which = get_str(cfg, "case", "i");
  const std::uint64_t seed =
      static_cast<std::uint64_t>(get_num(cfg, "seed", double(opts.seed)));

  const LinearSystemInstance inst = hard_instance_family(
      n_size, kappa, eps, which == "ii" ? HardCase::ii : HardCase::i, seed);
  const LinearSystemInstance other = hard_instance_family(
      n_size, kappa, eps, which == "ii" ? HardCase::i : HardCase::ii, seed);

  const std::string path = out_path(opts, "hard_instance.qlsi");
  store_instance(inst, path);

  const double n_i = (which == "ii" ? other : inst).x_norm();
  const double n_ii = (which == "ii" ? inst : other).x_norm();
  const double gap = (1.0 + 128.0 / 55.0 * eps) / (1.0 - 128.0 / 55.0 * eps);
  json rep;
  rep["file"] = path;
  rep["case"] = which;
  rep["norm"] = inst.x_norm();
  rep["norm_sq_ratio_i_over_ii"] = (n_i * n_i) / (n_ii * n_ii);
  rep["promised_gap_lower_bound"] = gap;
  rep["gap_satisfied"] = (n_i * n_i) / (n_ii * n_ii) >= gap - 1e-12;
  out << rep.dump(2) << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    if (args.empty())
      throw CliError("UsageError",
                     "usage: qlss <solve|norm-est|sweep-fig2|verify-circuits|bench-bounds|"
                     "hard-instance> [--config <path>] [--seed <u64>] [--trials <n>] "
                     "[--out <dir>] [--exact|--sampled] [--kappa <v>] [--eps <v>]");
    const std::string cmd = args[0];
    CommonOpts opts;
    double kappa = 1e5, eps = 1e-10;
    for (std::size_t i = 1; i < args.size(); ++i) {
      const std::string& a = args[i];
      auto next = [&](const char* what) -> std::string {
        if (i + 1 >= args.size())
          throw CliError("UsageError", std::string("flag ") + what + " needs a value");
        return args[++i];
      };
      if (a == "--config")
        opts.config_path = next("--config");
      else if (a == "--seed")
        opts.seed = std::stoull(next("--seed"));
      else if (a == "--trials")
        opts.trials = std::stoull(next("--trials"));
      else if (a == "--out")
        opts.out_dir = next("--out");
      else if (a == "--exact")
        opts.exact = true;
      else if (a == "--sampled")
        opts.sampled = true;
      else if (a == "--kappa")
        kappa = std::stod(next("--kappa"));
      else if (a == "--eps")
        eps = std::stod(next("--eps"));
      else
        throw CliError("UsageError", "unknown flag '" + a + "'");
    }
    if (opts.exact && opts.sampled)
      throw CliError("UsageError", "--exact and --sampled are mutually exclusive");
    if (!opts.config_path.empty()) {
      try {
        opts.config = json::parse(read_text_file(opts.config_path));
      } catch (const json::parse_error& e) {
        throw CliError("ParseError", std::string("config: ") + e.what());
      }
    }

    if (cmd == "solve") return cmd_solve(opts, out);
    if (cmd == "norm-est") return cmd_norm_est(opts, out);
    if (cmd == "sweep-fig2") return cmd_sweep_fig2(opts, out);
    if (cmd == "verify-circuits") return cmd_verify_circuits(opts, out);
    if (cmd == "bench-bounds") return cmd_bench_bounds(opts, out, kappa, eps);
    if (cmd == "hard-instance") return cmd_hard_instance(opts, out);
    throw CliError("UsageError", "unknown subcommand '" + cmd + "'");
  } catch (const CliError& e) {
    err << json{{"error", {{"code", e.code}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  } catch (const ParseError& e) {
    err << json{{"error", {{"code", "ParseError"}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  } catch (const VersionError& e) {
    err << json{{"error", {{"code", "VersionError"}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  } catch (const IoError& e) {
    err << json{{"error", {{"code", "IoError"}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  } catch (const DomainError& e) {
    err << json{{"error", {{"code", "DomainError"}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  } catch (const InvalidParams& e) {
    err << json{{"error", {{"code", "InvalidParams"}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << json{{"error", {{"code", "InternalError"}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  }
}

}  // namespace qlss
