// Command-line front end: certificate computation, spectral analysis,
// simulation, and Monte Carlo verification driven by config files.
//
// Exit codes: 0 success / all checks passed; 1 infeasible certificate or a
// failed check; 2 usage or configuration errors.

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fsde/certify.hpp"
#include "fsde/config.hpp"
#include "fsde/coupling.hpp"
#include "fsde/report.hpp"
#include "fsde/simulate.hpp"
#include "fsde/spectral.hpp"
#include "fsde/verify.hpp"

namespace {

using fsde::DissipativityCert;
using fsde::GaussianStream;
using fsde::LipschitzCert;
using fsde::Segment;
using fsde::config::RunConfig;
using fsde::report::json;
using fsde::report::Report;

struct Options {
  std::string config_path;
  std::string out_dir;  // overrides [output] dir when set
  std::string budget = "default";
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::vector<std::string> checks;
};

void add_common(CLI::App* sub, Options& opt) {
  sub->add_option("--config", opt.config_path, "config file (TOML-style)")->required();
  sub->add_option("--seed", opt.seed, "override [sim] seed");
  sub->add_option("--out", opt.out_dir, "override output directory");
  sub->add_option("--budget", opt.budget, "replica budget: smoke|default|deep");
}

std::vector<double> to_vec(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

int scaled(int base, double scale, int floor_n) {
  return std::max(floor_n, static_cast<int>(base * scale));
}

double snap_time(double t, double h) {
  const long long j = std::max<long long>(1, std::llround(t / h));
  return static_cast<double>(j) * h;
}

std::string out_dir_for(const RunConfig& rc, const Options& opt) {
  const std::string dir = opt.out_dir.empty() ? rc.output.dir : opt.out_dir;
  fsde::report::ensure_dir(dir);
  return dir;
}

// ----------------------------------------------------------------- certify

int run_certify(const RunConfig& rc, json& out, bool print) {
  bool any = false;
  if (print) std::cout << "certificates (" << rc.source << ")\n";

  if (rc.model.dissipativity) {
    const auto& c = *rc.model.dissipativity;
    const auto r = fsde::certify::rate_thm11(c.lambda1, c.lambda2, rc.model.r0);
    any = any || r.applicable;
    out["dissipative_rate"] = {{"lambda1", c.lambda1},   {"lambda2", c.lambda2},
                               {"applicable", r.applicable}, {"lambda", r.lambda},
                               {"s_star", r.s_star}};
    if (print)
      std::cout << "  dissipative rate (lambda1=" << c.lambda1 << ", lambda2=" << c.lambda2
                << "): " << (r.applicable ? "applicable" : "not applicable")
                << ", lambda = " << r.lambda << "\n";
  } else if (print) {
    std::cout << "  dissipative rate: no (lambda1, lambda2) certificate in config\n";
  }

  if (rc.model.lipschitz && rc.model.lipschitz->k1 > 0.0) {
    const auto& lc = *rc.model.lipschitz;
    const auto c12 = fsde::certify::check_cor12(lc.k1, lc.k2, rc.model.r0);
    any = any || c12.applicable;
    out["lipschitz_rate"] = {{"k1", lc.k1},
                             {"k2", lc.k2},
                             {"applicable", c12.applicable},
                             {"threshold", c12.threshold},
                             {"margin", c12.margin},
                             {"s0", c12.s0},
                             {"lambda", c12.lambda},
                             {"lambda1", c12.lambda1},
                             {"lambda2", c12.lambda2}};
    if (print)
      std::cout << "  Lipschitz rate (k1=" << lc.k1 << ", k2=" << lc.k2
                << "): " << (c12.applicable ? "applicable" : "NOT applicable")
                << ", k2^2 threshold = " << c12.threshold << ", margin = " << c12.margin
                << (c12.applicable ? ", lambda = " + std::to_string(c12.lambda) : "") << "\n";
  } else if (print) {
    std::cout << "  Lipschitz rate: needs k1 > 0\n";
  }

  if (rc.spectral_measure) {
    const auto t13 = fsde::certify::rate_thm13(*rc.spectral_measure, rc.k2_nonlinear);
    any = any || t13.applicable;
    out["spectral_rate"] = {{"k2", rc.k2_nonlinear},     {"applicable", t13.applicable},
                            {"lambda", t13.lambda},      {"k_star", t13.k_star},
                            {"ck_at_star", t13.ck_at_star}, {"lambda0", t13.lambda0}};
    if (print)
      std::cout << "  spectral rate (lambda0 = " << t13.lambda0
                << ", residual k2 = " << rc.k2_nonlinear
                << "): " << (t13.applicable ? "applicable" : "not applicable")
                << ", lambda = " << t13.lambda << " at k = " << t13.k_star << "\n";
  } else if (print) {
    std::cout << "  spectral rate: no linear drift part to analyze\n";
  }

  out["any_applicable"] = any;
  if (print)
    std::cout << (any ? "at least one certificate applicable"
                      : "NO certificate applicable") << "\n";
  return any ? 0 : 1;
}

int cmd_certify(const RunConfig& rc, const Options& opt) {
  Report rep("certify", rc.source, rc.hash, rc.sim.seed, opt.budget);
  json block;
  const int ec = run_certify(rc, block, true);
  rep.add("certify", block);
  rep.set_pass(ec == 0);
  rep.write(out_dir_for(rc, opt) + "/certify_report.json");
  return ec;
}

// ----------------------------------------------------------------- spectral

int run_spectral(const RunConfig& rc, const Options& opt, json& out, bool print) {
  if (!rc.spectral_measure)
    throw fsde::config::ConfigError(
        rc.source + ": spectral analysis needs a linear drift part "
                    "([measure], linear z, or discrete-delay b)");
  const auto& nu = *rc.spectral_measure;
  const std::string dir = out_dir_for(rc, opt);

  const auto root = fsde::spectral::lambda0(nu);
  out["lambda0"] = {{"value", root.lambda0},
                    {"witness_re", root.witness.real()},
                    {"witness_im", root.witness.imag()},
                    {"witness_polished", root.witness_polished},
                    {"converged", root.converged},
                    {"nu_norm", nu.tv_norm()}};
  if (print) std::cout << "lambda0 = " << root.lambda0 << " (|nu| = " << nu.tv_norm() << ")\n";

  const auto gamma = fsde::spectral::gamma_solve(nu, rc.sim.horizon, rc.sim.h);
  out["gamma"] = {{"horizon", gamma.horizon()},
                  {"h", gamma.h()},
                  {"final_norm", gamma.norm(gamma.size() - 1)}};
  if (rc.output.csv) {
    std::vector<std::string> cols{"t"};
    const int d = nu.dim();
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        cols.push_back("g" + std::to_string(i + 1) + std::to_string(j + 1));
    cols.push_back("norm");
    std::vector<std::vector<double>> rows;
    for (std::size_t j = 0; j < gamma.size(); ++j) {
      std::vector<double> row{j * gamma.h()};
      const auto& g = gamma.entry(j);
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) row.push_back(g(a, b));
      row.push_back(gamma.norm(j));
      rows.push_back(std::move(row));
    }
    fsde::report::write_curve_csv(dir + "/gamma.csv", cols, rows);
  }

  bool pass = root.converged;
  if (root.lambda0 < 0.0) {
    json cks = json::array();
    for (int i = 1; i <= 9; ++i) {
      const double k = 0.1 * i * (-root.lambda0);
      const auto ck = fsde::spectral::ck_empirical(gamma, k);
      cks.push_back({{"k", k}, {"ck", ck.ck}, {"t_at_max", ck.t_at_max}});
    }
    out["ck_table"] = cks;

    if (nu.tv_norm() > 0.0) {
      const double lam = 0.5 * root.lambda0;
      const auto pp = fsde::spectral::pp_bound(nu, lam);
      out["resolvent_bound"] = {{"lambda", pp.lambda},       {"t_lambda", pp.t_lambda},
                                {"rho_lambda", pp.rho_lambda}, {"arc_term", pp.arc_term},
                                {"tail_term", pp.tail_term}, {"mid_term", pp.mid_term},
                                {"prefactor", pp.prefactor}};
      if (print)
        std::cout << "decay envelope at lambda = " << lam << ": ||Gamma(t)|| <= "
                  << pp.prefactor << " e^(" << lam << " t)\n";
      // dominance of the analytic envelope over the tabulated solution
      int violations = 0;
      std::vector<std::vector<double>> rows;
      for (std::size_t j = 0; j < gamma.size(); ++j) {
        const double t = j * gamma.h();
        const double envelope = pp.bound(t);
        if (gamma.norm(j) > envelope) ++violations;
        if (rc.output.csv) rows.push_back({t, gamma.norm(j), envelope});
      }
      if (rc.output.csv)
        fsde::report::write_curve_csv(dir + "/gamma_envelope.csv",
                                      {"t", "gamma_norm", "envelope"}, rows);
      out["resolvent_bound"]["violations"] = violations;
      if (violations > 0) pass = false;
      if (print)
        std::cout << "envelope dominates the table at every grid point: "
                  << (violations == 0 ? "yes" : "NO") << "\n";
    }
  } else if (print) {
    std::cout << "lambda0 >= 0: linear part not exponentially stable\n";
  }
  out["pass"] = pass;
  return pass ? 0 : 1;
}

int cmd_spectral(const RunConfig& rc, const Options& opt) {
  Report rep("spectral", rc.source, rc.hash, rc.sim.seed, opt.budget);
  json block;
  const int ec = run_spectral(rc, opt, block, true);
  rep.add("spectral", block);
  rep.set_pass(ec == 0);
  rep.write(out_dir_for(rc, opt) + "/spectral_report.json");
  return ec;
}

// ----------------------------------------------------------------- simulate

int run_simulate(const RunConfig& rc, const Options& opt, json& out, bool print) {
  const std::string dir = out_dir_for(rc, opt);
  const Segment xi = Segment::constant(rc.model.r0, rc.sim.h, rc.sim.xi);
  const auto path = fsde::sim::simulate(rc.model, xi, rc.sim.horizon, rc.sim.seed, 0);
  if (rc.output.csv) fsde::sim::write_csv(path, dir + "/path.csv");
  double max_norm = 0.0;
  for (int j = 0; j <= path.steps(); ++j)
    max_norm = std::max(max_norm, path.state(j).norm());
  const Eigen::VectorXd endpoint = path.state(path.steps());
  out = {{"h", path.h()},
         {"horizon", path.horizon()},
         {"steps", path.steps()},
         {"seed", rc.sim.seed},
         {"endpoint", to_vec(endpoint)},
         {"endpoint_norm", endpoint.norm()},
         {"max_norm", max_norm}};
  if (print)
    std::cout << "simulated " << path.steps() << " steps, |X(T)| = " << endpoint.norm()
              << ", max |X| = " << max_norm << "\n";
  return 0;
}

int cmd_simulate(const RunConfig& rc, const Options& opt) {
  Report rep("simulate", rc.source, rc.hash, rc.sim.seed, opt.budget);
  json block;
  const int ec = run_simulate(rc, opt, block, true);
  rep.add("simulate", block);
  rep.set_pass(ec == 0);
  rep.write(out_dir_for(rc, opt) + "/simulate_report.json");
  return ec;
}

// ------------------------------------------------------------------- verify

const std::vector<std::string> kAllChecks = {
    "contraction", "exp_moment", "coupling",  "harnack", "memory",
    "stationarity", "l2_decay",  "hyperbound", "restart", "tv"};

struct VerifyContext {
  const RunConfig& rc;
  double scale = 1.0;
  Segment xi, eta;
  std::uint64_t seed = 0;
  double h = 0.0;
  std::string dir;
};

fsde::certify::HarnackParams harnack_params(const VerifyContext& vc) {
  fsde::certify::HarnackParams hp;
  hp.p = vc.rc.verify.p;
  hp.t = snap_time(vc.rc.verify.coupling_t, vc.h);
  if (vc.rc.verify.delta > 0.0) {
    hp.delta = vc.rc.verify.delta;
  } else {
    const auto& lc = *vc.rc.model.lipschitz;
    const double d0_sq = (vc.xi.eval(0.0) - vc.eta.eval(0.0)).squaredNorm();
    const double sup = (vc.xi - vc.eta).sup_norm();
    hp.delta = fsde::certify::best_harnack_exponent(hp.p, hp.t, lc.k1, lc.k2,
                                                    vc.rc.model.sigma_inv_norm(), d0_sq,
                                                    sup * sup, vc.rc.model.r0)
                   .delta;
  }
  return hp;
}

// returns {ran, pass, block}
struct CheckOutcome {
  bool ran = false;
  bool pass = false;
  std::string note;
  json block;
};

CheckOutcome run_one_check(const std::string& name, const VerifyContext& vc) {
  CheckOutcome oc;
  const auto& rc = vc.rc;
  const auto& m = rc.model;
  const int n = rc.sim.n;

  if (name == "contraction" || name == "restart" || name == "l2_decay" || name == "tv") {
    if (!m.dissipativity) {
      oc.note = "needs a (lambda1, lambda2) certificate";
      return oc;
    }
  }
  if (name == "coupling" || name == "harnack" || name == "tv") {
    if (!m.lipschitz) {
      oc.note = "needs a (k1, k2) certificate";
      return oc;
    }
  }

  if (name == "contraction") {
    const auto r = fsde::verify::check_contraction(m, *m.dissipativity, vc.xi, vc.eta,
                                                   rc.sim.horizon,
                                                   scaled(n / 10, vc.scale, 8), vc.seed);
    oc = {true, r.pass, "",
          {{"check", name},
           {"params", {{"lambda1", r.lambda1}, {"lambda2", r.lambda2}, {"lambda", r.lambda},
                       {"replicas", r.replicas}, {"horizon", rc.sim.horizon}}},
           {"estimate", r.worst_ratio},
           {"bound", 1.0},
           {"sigma", 0.0},
           {"violations", r.violations},
           {"worst_t", r.worst_t},
           {"pass", r.pass}}};
    return oc;
  }

  if (name == "exp_moment") {
    std::vector<double> t_grid;
    for (int k = 1; k <= 5; ++k) {
      const double t = snap_time(k * rc.sim.horizon / 5.0, vc.h);
      if (t_grid.empty() || t > t_grid.back()) t_grid.push_back(t);
    }
    const std::vector<double> ladder{0.5, 0.25, 0.1, 0.05, 0.02, 0.01};
    const auto r = fsde::verify::check_exp_moment(m, vc.xi, ladder, t_grid,
                                                  scaled(n / 2, vc.scale, 64), vc.seed);
    oc = {true, r.pass, "",
          {{"check", name},
           {"params", {{"eps", r.eps}, {"t_grid", r.t_grid}}},
           {"estimate", r.estimates},
           {"bound", nullptr},
           {"sigma", r.stderrs},
           {"trend_z", r.trend_z},
           {"pass", r.pass}}};
    return oc;
  }

  if (name == "coupling") {
    const auto hp = harnack_params(vc);
    const auto fs = fsde::verify::default_functionals(m.d, m.r0);
    const auto r = fsde::verify::check_girsanov_moments(m, fs.front(), hp, vc.xi, vc.eta,
                                                        scaled(n, vc.scale, 100), vc.seed);
    oc = {true, r.pass, "",
          {{"check", name},
           {"params", {{"p", hp.p}, {"delta", hp.delta}, {"t", hp.t}, {"n", r.n}}},
           {"estimate", {{"mean_r", r.mean_r}, {"mean_rq", r.mean_rq},
                         {"weighted", r.weighted}, {"plain", r.plain},
                         {"tau_max", r.tau_max}, {"envelope_excess", r.envelope_excess}}},
           {"bound", {{"rq", r.rq_bound}, {"envelope_slack", r.envelope_slack}}},
           {"sigma", {{"r", r.stderr_r}, {"rq", r.stderr_rq}}},
           {"parts", {{"martingale", r.r_pass}, {"moment", r.rq_pass},
                      {"transfer", r.identity_pass}, {"tau", r.tau_pass},
                      {"envelope", r.envelope_pass}}},
           {"pass", r.pass}}};
    return oc;
  }

  if (name == "harnack") {
    const auto hp = harnack_params(vc);
    const auto fs = fsde::verify::default_functionals(m.d, m.r0);
    json blocks = json::array();
    bool all = true;
    for (const auto& f : fs) {
      const auto r = fsde::verify::check_harnack(m, f, hp, vc.xi, vc.eta,
                                                 scaled(n / 2, vc.scale, 100), vc.seed);
      all = all && r.pass;
      blocks.push_back({{"functional", r.functional}, {"estimate", r.lhs},
                        {"bound", r.rhs},
                        {"sigma", std::hypot(r.lhs_stderr, r.rhs_stderr)},
                        {"exponent", r.exponent}, {"pass", r.pass}});
    }
    oc = {true, all, "",
          {{"check", name},
           {"params", {{"p", hp.p}, {"delta", hp.delta}, {"t", hp.t}}},
           {"functionals", blocks},
           {"pass", all}}};
    return oc;
  }

  if (name == "memory") {
    const auto r = fsde::verify::check_memory_passthrough(
        m, vc.xi, scaled(std::min(256, n / 10), vc.scale, 16), vc.seed);
    oc = {true, r.pass, "",
          {{"check", name},
           {"params", {{"t_checked", r.t_checked}}},
           {"estimate", {{"exact", r.exact}, {"late_variance", r.late_variance}}},
           {"bound", nullptr},
           {"sigma", 0.0},
           {"pass", r.pass}}};
    return oc;
  }

  if (name == "stationarity") {
    const auto ens = fsde::verify::sample_invariant(m, scaled(n / 4, vc.scale, 64),
                                                    rc.verify.burn_in, rc.verify.spacing,
                                                    vc.h, vc.seed);
    std::vector<double> thetas;
    for (int k = 1; k <= 5; ++k) thetas.push_back(-m.r0 * k / 5.0);
    const auto r = fsde::verify::check_shift_invariance(ens, thetas);
    oc = {true, r.pass, "",
          {{"check", name},
           {"params", {{"thetas", r.thetas}, {"n", ens.segments.size()},
                       {"burn_in", ens.burn_in}, {"spacing", ens.spacing}}},
           {"estimate", r.p_values},
           {"bound", r.threshold},
           {"sigma", nullptr},
           {"pass", r.pass}}};
    return oc;
  }

  if (name == "l2_decay" || name == "hyperbound") {
    const double lambda =
        m.dissipativity ? fsde::certify::rate_thm11(m.dissipativity->lambda1,
                                                    m.dissipativity->lambda2, m.r0)
                              .lambda
                        : 0.0;
    if (name == "l2_decay" && !(lambda > 0.0)) {
      oc.note = "needs a positive certified rate";
      return oc;
    }
    const auto ens = fsde::verify::sample_invariant(m, scaled(n / 100, vc.scale, 32),
                                                    rc.verify.burn_in, rc.verify.spacing,
                                                    vc.h, GaussianStream::mix(vc.seed, 2));
    const auto fs = fsde::verify::default_functionals(m.d, m.r0);
    const int n_inner = scaled(n / 100, vc.scale, 16);
    if (name == "l2_decay") {
      const double dt = snap_time(std::min(1.0, 2.0 / lambda), vc.h);
      std::vector<double> t_grid{0.0, dt, 2.0 * dt, 3.0 * dt};
      const auto r = fsde::verify::check_l2_decay(m, ens, fs.front(), t_grid, lambda,
                                                  n_inner, vc.seed);
      oc = {true, r.pass, r.inconclusive ? "noise floor; monotone fallback" : "",
            {{"check", name},
             {"params", {{"t_grid", r.t_grid}, {"n_outer", ens.segments.size()},
                         {"n_inner", n_inner}}},
             {"estimate", {{"fitted_rate", r.fitted_rate}, {"variances", r.variances}}},
             {"bound", lambda},
             {"sigma", r.rate_stderr},
             {"inconclusive", r.inconclusive},
             {"pass", r.pass}}};
      if (rc.output.csv) {
        std::vector<std::vector<double>> rows;
        for (std::size_t g = 0; g < r.t_grid.size(); ++g)
          rows.push_back({r.t_grid[g], r.variances[g], r.variance_stderrs[g]});
        fsde::report::write_curve_csv(vc.dir + "/l2_decay.csv", {"t", "variance", "stderr"},
                                      rows);
      }
    } else {
      const double t_raw = lambda > 0.0 ? std::max(2.0, 4.0 / lambda) : rc.sim.horizon / 2.0;
      const double t = snap_time(std::min(rc.sim.horizon, t_raw), vc.h);
      const auto r = fsde::verify::check_hyperbound(m, ens, fs.front(), t, n_inner, vc.seed);
      oc = {true, r.pass, "",
            {{"check", name},
             {"params", {{"t", r.t}, {"n_outer", ens.segments.size()}, {"n_inner", n_inner}}},
             {"estimate", r.lhs},
             {"bound", r.rhs},
             {"sigma", std::hypot(r.lhs_stderr, r.rhs_stderr)},
             {"pass", r.pass}}};
    }
    return oc;
  }

  if (name == "restart") {
    const double t1 = snap_time(rc.verify.coupling_t, vc.h);
    const double t2 = 2.0 * t1;
    const auto r = fsde::verify::check_restart_coupling(m, *m.dissipativity, vc.xi, t1, t2,
                                                        scaled(n / 10, vc.scale, 8), vc.seed);
    oc = {true, r.pass, "",
          {{"check", name},
           {"params", {{"t1", t1}, {"t2", t2}, {"replicas", r.replicas}}},
           {"estimate", r.worst_ratio},
           {"bound", 1.0},
           {"sigma", 0.0},
           {"violations", r.violations},
           {"pass", r.pass}}};
    return oc;
  }

  if (name == "tv") {
    const auto hp = harnack_params(vc);
    std::vector<double> t_grid{0.0};
    for (int k = 1; k <= 2; ++k) t_grid.push_back(snap_time(k * hp.t, vc.h));
    const auto r = fsde::verify::tv_bound_estimate(m, *m.dissipativity, hp, vc.xi, vc.eta,
                                                   t_grid, scaled(n / 10, vc.scale, 64),
                                                   vc.seed);
    const bool pass = r.decay_pass && r.moment_pass;
    oc = {true, pass, r.inconclusive ? "noise floor; monotone fallback" : "",
          {{"check", name},
           {"params", {{"t_grid", r.t_grid}, {"p", hp.p}, {"coupling_t", hp.t}}},
           {"estimate", {{"bound", r.bound}, {"fitted_rate", r.fitted_rate}}},
           {"bound", 0.5 * r.lambda},
           {"sigma", r.rate_stderr},
           {"parts", {{"decay", r.decay_pass}, {"moment", r.moment_pass}}},
           {"inconclusive", r.inconclusive},
           {"pass", pass}}};
    if (rc.output.csv) {
      std::vector<std::vector<double>> rows;
      for (std::size_t g = 0; g < r.t_grid.size(); ++g)
        rows.push_back({r.t_grid[g], r.bound[g], r.bound_stderr[g]});
      fsde::report::write_curve_csv(vc.dir + "/tv_bound.csv", {"t", "bound", "stderr"}, rows);
    }
    return oc;
  }

  throw fsde::config::ConfigError("unknown check '" + name + "'");
}

int run_verify(const RunConfig& rc, const Options& opt, json& out, bool print) {
  VerifyContext vc{rc,
                   fsde::config::budget_scale(fsde::config::parse_budget(opt.budget)),
                   Segment::constant(rc.model.r0, rc.sim.h, rc.sim.xi),
                   Segment::constant(rc.model.r0, rc.sim.h, rc.sim.eta),
                   rc.sim.seed,
                   rc.sim.h,
                   out_dir_for(rc, opt)};

  std::vector<std::string> selected =
      !opt.checks.empty() ? opt.checks
                          : (!rc.verify.checks.empty() ? rc.verify.checks : kAllChecks);
  const bool explicit_selection = !opt.checks.empty() || !rc.verify.checks.empty();
  for (const auto& name : selected)
    if (std::find(kAllChecks.begin(), kAllChecks.end(), name) == kAllChecks.end())
      throw fsde::config::ConfigError("unknown check '" + name + "'");

  bool all_pass = true;
  for (const auto& name : selected) {
    const auto oc = run_one_check(name, vc);
    if (!oc.ran) {
      if (explicit_selection)
        throw fsde::config::ConfigError("check '" + name + "' cannot run: " + oc.note);
      out[name] = {{"check", name}, {"skipped", true}, {"reason", oc.note}};
      if (print) std::cout << "  " << name << ": SKIP (" << oc.note << ")\n";
      continue;
    }
    out[name] = oc.block;
    all_pass = all_pass && oc.pass;
    if (print) {
      std::cout << "  " << name << ": " << (oc.pass ? "PASS" : "FAIL");
      if (!oc.note.empty()) std::cout << " [" << oc.note << "]";
      std::cout << "\n";
    }
  }
  out["all_pass"] = all_pass;
  return all_pass ? 0 : 1;
}

int cmd_verify(const RunConfig& rc, const Options& opt) {
  Report rep("verify", rc.source, rc.hash, rc.sim.seed, opt.budget);
  json block;
  std::cout << "verification (" << rc.source << ", budget " << opt.budget << ")\n";
  const int ec = run_verify(rc, opt, block, true);
  rep.add("verify", block);
  rep.set_pass(ec == 0);
  rep.write(out_dir_for(rc, opt) + "/verify_report.json");
  std::cout << (ec == 0 ? "all checks passed" : "CHECK FAILURES") << "\n";
  return ec;
}

// ------------------------------------------------------------------- report

int cmd_report(const RunConfig& rc, const Options& opt) {
  Report rep("report", rc.source, rc.hash, rc.sim.seed, opt.budget);
  int worst = 0;
  json cert_block;
  worst = std::max(worst, run_certify(rc, cert_block, false));
  rep.add("certify", cert_block);
  if (rc.spectral_measure) {
    json spec_block;
    worst = std::max(worst, run_spectral(rc, opt, spec_block, false));
    rep.add("spectral", spec_block);
  }
  json sim_block;
  worst = std::max(worst, run_simulate(rc, opt, sim_block, false));
  rep.add("simulate", sim_block);
  json verify_block;
  worst = std::max(worst, run_verify(rc, opt, verify_block, false));
  rep.add("verify", verify_block);
  rep.set_pass(worst == 0);
  const std::string path = out_dir_for(rc, opt) + "/report.json";
  rep.write(path);
  std::cout << "combined report written to " << path << " ("
            << (worst == 0 ? "pass" : "FAIL") << ")\n";
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"delay-SDE rate certificates, spectral analysis, and MC verification"};
  app.require_subcommand(1);
  Options opt;

  auto* c_certify = app.add_subcommand("certify", "compute rate certificates");
  auto* c_spectral = app.add_subcommand("spectral", "characteristic roots and decay bounds");
  auto* c_simulate = app.add_subcommand("simulate", "run one path and export it");
  auto* c_verify = app.add_subcommand("verify", "Monte Carlo verification checks");
  auto* c_report = app.add_subcommand("report", "run everything, one combined report");
  for (auto* sub : {c_certify, c_spectral, c_simulate, c_verify, c_report}) add_common(sub, opt);
  c_verify->add_option("--check", opt.checks, "run only the named checks");
  c_report->add_option("--check", opt.checks, "restrict the verification stage");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  for (auto* sub : {c_certify, c_spectral, c_simulate, c_verify, c_report})
    if (sub->parsed() && sub->count("--seed") > 0) opt.seed_set = true;

  try {
    RunConfig rc = fsde::config::load(opt.config_path);
    if (opt.seed_set) rc.sim.seed = opt.seed;
    fsde::config::parse_budget(opt.budget);  // reject bad budgets before work starts
    if (c_certify->parsed()) return cmd_certify(rc, opt);
    if (c_spectral->parsed()) return cmd_spectral(rc, opt);
    if (c_simulate->parsed()) return cmd_simulate(rc, opt);
    if (c_verify->parsed()) return cmd_verify(rc, opt);
    if (c_report->parsed()) return cmd_report(rc, opt);
    return 2;
  } catch (const fsde::config::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
