#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "fsde/stats.hpp"
#include "fsde/verify.hpp"

using namespace fsde;
using namespace fsde::verify;

namespace {

// dX = -X dt + dB: invariant endpoint law N(0, 1/2), P_t f(xi) = e^{-t} xi(0)
// for linear f, rate certificate (lambda1, lambda2) = (2, 0) so lambda = 2
FsdeModel ou_model() {
  FsdeModel m;
  m.d = 1;
  m.r0 = 1.0;
  m.z = linear_drift(Eigen::MatrixXd::Constant(1, 1, -1.0));
  m.sigma = Eigen::MatrixXd::Identity(1, 1);
  m.lipschitz = LipschitzCert{1.0, 0.0};
  m.dissipativity = DissipativityCert{2.0, 0.0};
  return m;
}

// dX = {-2 X + 0.1 X(t-1)} dt + dB with certificate (3, 0.01)
FsdeModel delayed_model() {
  FsdeModel m;
  m.d = 1;
  m.r0 = 1.0;
  m.z = linear_drift(Eigen::MatrixXd::Constant(1, 1, -2.0));
  m.b = discrete_delay_drift(Eigen::MatrixXd::Constant(1, 1, 0.1), m.r0);
  m.sigma = Eigen::MatrixXd::Identity(1, 1);
  m.lipschitz = LipschitzCert{2.0, 0.1};
  m.dissipativity = DissipativityCert{3.0, 0.01};
  return m;
}

// dX = {-X + 0.1 tanh(X(t-1))} dt + dB, the nonlinear regression model
FsdeModel tanh_model() {
  FsdeModel m;
  m.d = 1;
  m.r0 = 1.0;
  m.z = linear_drift(Eigen::MatrixXd::Constant(1, 1, -1.0));
  m.b = tanh_delay_drift(0.1, m.r0);
  m.sigma = Eigen::MatrixXd::Identity(1, 1);
  m.lipschitz = LipschitzCert{1.0, 0.1};
  return m;
}

Segment const_seg(double r0, double h, double v) {
  return Segment::constant(r0, h, Eigen::VectorXd::Constant(1, v));
}

}  // namespace

TEST_CASE("statistics toolbox sanity") {
  SUBCASE("one-sample KS accepts its own law and rejects a wrong one") {
    std::vector<double> x;
    for (int i = 0; i < 500; ++i) x.push_back((i + 0.5) / 500.0);
    auto unif = [](double v) { return std::min(1.0, std::max(0.0, v)); };
    CHECK(stats::ks_one_sample(x, unif).p_value > 0.5);
    auto sq = [](double v) { return std::min(1.0, std::max(0.0, v * v)); };
    CHECK(stats::ks_one_sample(x, sq).p_value < 1e-6);
  }
  SUBCASE("trend test flags a drifting sequence, not a flat one") {
    std::vector<double> up, flat;
    for (int i = 0; i < 40; ++i) {
      up.push_back(0.05 * i + 0.3 * std::sin(7.0 * i));
      flat.push_back(0.3 * std::sin(7.0 * i));
    }
    CHECK(stats::mann_kendall(up).increasing_at_1pct);
    CHECK_FALSE(stats::mann_kendall(flat).increasing_at_1pct);
  }
  SUBCASE("weighted fit recovers a known line") {
    std::vector<double> t{0.0, 1.0, 2.0, 3.0}, y, s(4, 0.1);
    for (double v : t) y.push_back(1.5 - 2.0 * v);
    const stats::LineFit fit = stats::fit_line(t, y, s);
    CHECK(fit.slope == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(1.5).epsilon(1e-12));
  }
}

TEST_CASE("bundled test functionals are positive and bounded") {
  const auto fs = default_functionals(2, 1.0);
  REQUIRE(fs.size() == 3);
  const Segment s = Segment::from_function(1.0, 0.25, [](double th) {
    Eigen::VectorXd v(2);
    v << 3.0 * std::sin(th), -2.0 + th;
    return v;
  });
  for (const auto& f : fs) {
    const double v = f.f(s);
    CHECK(v > 0.0);
    CHECK(v <= 3.0);
  }
}

TEST_CASE("pathwise contraction of the synchronous coupling") {
  const FsdeModel m = delayed_model();
  const double h = 1.0 / 256.0;
  const Segment xi = const_seg(1.0, h, 0.0);
  const Segment eta = const_seg(1.0, h, 1.0);

  SUBCASE("true certificate: no violations") {
    const ContractionResult r =
        check_contraction(m, *m.dissipativity, xi, eta, 4.0, 16, 5);
    CHECK(r.pass);
    CHECK(r.violations == 0);
    CHECK(r.worst_ratio <= 1.0);
    // rate_thm11(3, 0.01, 1): s* = 3, lambda = 3 - 0.01 e^3
    CHECK(r.lambda == doctest::Approx(3.0 - 0.01 * std::exp(3.0)).epsilon(1e-12));
  }

  SUBCASE("inflated certificate is caught pathwise") {
    // (4, 0) claims e^{4 - 4t} decay of the squared segment distance; the true
    // synchronous-pair decay rate is only ~3.07, so violations appear past
    // t ~ 4.3 on every replica
    const ContractionResult r =
        check_contraction(m, DissipativityCert{4.0, 0.0}, xi, eta, 6.0, 8, 5);
    CHECK_FALSE(r.pass);
    CHECK(r.violations >= 1);
    CHECK(r.worst_ratio > 1.0);
    CHECK(r.worst_t > 4.0);
  }

  SUBCASE("deterministic in the seed") {
    const ContractionResult a =
        check_contraction(m, *m.dissipativity, xi, eta, 2.0, 8, 5);
    const ContractionResult b =
        check_contraction(m, *m.dissipativity, xi, eta, 2.0, 8, 5);
    CHECK(a.worst_ratio == b.worst_ratio);
  }
}

TEST_CASE("exponential moments stay bounded along the run") {
  const FsdeModel m = ou_model();
  const Segment xi = const_seg(1.0, 1.0 / 64.0, 0.0);
  const ExpMomentResult r =
      check_exp_moment(m, xi, {0.5, 0.25}, {2.0, 4.0, 6.0, 8.0}, 256, 12);
  CHECK(r.pass);
  CHECK(r.eps == 0.5);
  CHECK(r.eps_rejected.empty());
  REQUIRE(r.estimates.size() == 4);
  for (double e : r.estimates) {
    CHECK(e > 1.0);
    CHECK(e < 10.0);
  }
}

TEST_CASE("memory pass-through is exact before the delay horizon") {
  const FsdeModel m = delayed_model();
  const Segment xi = Segment::from_function(1.0, 1.0 / 128.0, [](double th) {
    return Eigen::VectorXd::Constant(1, std::cos(2.0 * th));
  });
  const MemoryPassthroughResult r = check_memory_passthrough(m, xi, 32, 9);
  CHECK(r.pass);
  CHECK(r.exact);
  CHECK(r.late_variance > 0.0);
  CHECK(r.t_checked.size() == 3);
}

TEST_CASE("invariant ensemble reproduces known stationary laws") {
  SUBCASE("endpoint marginal of the OU model vs N(0, 1/2)") {
    const FsdeModel m = ou_model();
    const InvariantEnsemble ens = sample_invariant(m, 1000, 10.0, 2.0, 1.0 / 64.0, 77);
    REQUIRE(ens.segments.size() == 1000);
    auto cdf = [](double x) { return 0.5 * (1.0 + std::erf(x)); };  // N(0, 1/2)
    const KsCheckResult ks = check_endpoint_law(ens, 0, cdf);
    CHECK(ks.pass);

    // wrong variance is rejected
    auto bad = [](double x) { return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); };
    CHECK_FALSE(check_endpoint_law(ens, 0, bad).pass);
  }

  SUBCASE("pure-delay stationary variance matches the decay-kernel integral") {
    // for the semi-linear model the stationary endpoint variance is
    // int_0^inf ||Gamma(s)||^2 ds (scalar case), quadratured from the table
    const SemiLinearModel sl{
        SignedMatrixMeasure::dirac(1.0, -1.0,
                                   Eigen::MatrixXd::Constant(1, 1, -std::exp(-1.0))),
        {}, 0.0, Eigen::MatrixXd::Identity(1, 1)};
    const spectral::GammaTable g = spectral::gamma_solve(sl.nu, 50.0, 1.0 / 1024.0);
    double integral = 0.0;
    for (std::size_t j = 0; j + 1 < g.size(); ++j) {
      const double a = g.entry(j)(0, 0), b = g.entry(j + 1)(0, 0);
      integral += 0.5 * (a * a + b * b) * g.h();
    }

    const FsdeModel m = sl.as_fsde();
    const InvariantEnsemble ens = sample_invariant(m, 3000, 12.0, 1.5, 1.0 / 128.0, 31);
    std::vector<double> endpoints;
    for (const auto& s : ens.segments) endpoints.push_back(s.node(s.grid_size() - 1)(0));
    const stats::Moments mom = stats::moments(endpoints);
    CHECK(mom.var == doctest::Approx(integral).epsilon(0.05));
  }
}

TEST_CASE("shift invariance of segment marginals") {
  const FsdeModel m = delayed_model();
  const std::vector<double> thetas{-0.2, -0.4, -0.6, -0.8, -1.0};

  SUBCASE("stationary ensemble passes") {
    const InvariantEnsemble ens = sample_invariant(m, 800, 10.0, 2.0, 1.0 / 128.0, 41);
    const ShiftInvarianceResult r = check_shift_invariance(ens, thetas);
    CHECK(r.pass);
    CHECK(r.p_values.size() == 5);
  }

  SUBCASE("freshly restarted ensemble fails") {
    const Segment xi = const_seg(1.0, 1.0 / 128.0, 2.0);
    const InvariantEnsemble ens = restart_ensemble(ou_model(), xi, 400, 43);
    const ShiftInvarianceResult r = check_shift_invariance(ens, {-1.0, -0.5});
    CHECK_FALSE(r.pass);
  }
}

TEST_CASE("ergodic variance decay") {
  const FsdeModel m = ou_model();
  const InvariantEnsemble ens = sample_invariant(m, 600, 10.0, 2.0, 1.0 / 64.0, 51);
  const TestFunctional f{"endpoint", [](const Segment& s) { return s.eval(0.0)(0); }};
  const std::vector<double> grid{0.0, 0.5, 1.0, 1.5};

  SUBCASE("closed-form conditional expectation: slope is exactly the rate") {
    auto oracle = [](const Segment& s, double t) { return std::exp(-t) * s.eval(0.0)(0); };
    const DecayResult r = check_l2_decay(m, ens, f, grid, 2.0, 0, 3, oracle);
    CHECK(r.used_oracle);
    CHECK(r.pass);
    CHECK_FALSE(r.inconclusive);
    CHECK(r.fitted_rate == doctest::Approx(2.0).epsilon(1e-6));
  }

  SUBCASE("nested Monte Carlo agrees within its error bars") {
    const DecayResult r = check_l2_decay(m, ens, f, {0.0, 0.5, 1.0}, 2.0, 128, 3);
    CHECK_FALSE(r.used_oracle);
    CHECK(r.pass);
  }

  SUBCASE("constant functionals carry no variance") {
    const TestFunctional c{"const", [](const Segment&) { return 1.0; }};
    auto oracle = [](const Segment&, double) { return 1.0; };
    const DecayResult r = check_l2_decay(m, ens, c, grid, 2.0, 0, 3, oracle);
    for (double v : r.variances) CHECK(std::fabs(v) <= 1e-12);
  }
}

TEST_CASE("fourth-moment contraction bound") {
  const FsdeModel m = ou_model();
  const InvariantEnsemble ens = sample_invariant(m, 1000, 10.0, 2.0, 1.0 / 64.0, 61);
  const TestFunctional f{"endpoint", [](const Segment& s) { return s.eval(0.0)(0); }};
  auto oracle = [](const Segment& s, double t) { return std::exp(-t) * s.eval(0.0)(0); };

  SUBCASE("holds at separated times") {
    // mu((P_t f)^4) = 3 e^{-4t} Var^2 <= Var^2 = mu(f^2)^2 once e^{-4t} < 1/3
    const HyperboundResult r = check_hyperbound(m, ens, f, 1.0, 0, 71, oracle);
    CHECK(r.used_oracle);
    CHECK(r.pass);
    CHECK(r.lhs < r.rhs);
  }
  SUBCASE("fails at time zero for a heavy-tailed functional") {
    const HyperboundResult r = check_hyperbound(m, ens, f, 0.0, 0, 71, oracle);
    CHECK_FALSE(r.pass);
  }
  SUBCASE("nested Monte Carlo version") {
    const HyperboundResult r = check_hyperbound(m, ens, f, 1.0, 96, 71);
    CHECK_FALSE(r.used_oracle);
    CHECK(r.pass);
  }
}

TEST_CASE("Harnack inequality and density diagnostics") {
  const FsdeModel m = tanh_model();
  const double h = 1.0 / 128.0, t = 0.75;
  const Segment xi = const_seg(1.0, h, 1.0);
  const Segment eta = const_seg(1.0, h, 0.0);
  const certify::BestHarnack best =
      certify::best_harnack_exponent(2.0, t, 1.0, 0.1, 1.0, 1.0, 1.0, 1.0);
  const certify::HarnackParams hp{2.0, best.delta, t};

  SUBCASE("power-mean inequality with the optimized exponent") {
    const auto fs = default_functionals(1, 1.0);
    for (const auto& f : fs) {
      const HarnackResult r = check_harnack(m, f, hp, xi, eta, 1200, 81);
      CHECK(r.pass);
      CHECK(r.exponent == doctest::Approx(best.exponent).epsilon(1e-12));
    }
  }

  SUBCASE("density weight: martingale, moment bound, transfer identity") {
    const auto fs = default_functionals(1, 1.0);
    const GirsanovResult r = check_girsanov_moments(m, fs[0], hp, xi, eta, 800, 91);
    CHECK(r.pass);
    CHECK(r.r_pass);
    CHECK(r.rq_pass);
    CHECK(r.identity_pass);
    CHECK(r.tau_pass);
    CHECK(r.envelope_pass);
    CHECK(std::fabs(r.mean_r - 1.0) <= 3.0 * r.stderr_r);
  }
}

TEST_CASE("restart coupling stays inside the contraction envelope") {
  const FsdeModel m = ou_model();
  const Segment xi = const_seg(1.0, 1.0 / 128.0, 0.5);
  const RestartResult r = check_restart_coupling(m, *m.dissipativity, xi, 1.0, 2.0, 12, 15);
  CHECK(r.pass);
  CHECK(r.violations == 0);
}

TEST_CASE("total-variation bound decays along the contraction") {
  const FsdeModel m = ou_model();
  const double h = 1.0 / 128.0;
  const Segment xi = const_seg(1.0, h, 1.0);
  const Segment eta = const_seg(1.0, h, 0.0);
  const certify::HarnackParams hp{2.0, 1.0, 0.75};
  const TvResult r =
      tv_bound_estimate(m, *m.dissipativity, hp, xi, eta, {0.0, 0.75, 1.5}, 48, 25);
  CHECK(r.moment_pass);
  CHECK((r.decay_pass || r.inconclusive));
  REQUIRE(r.bound.size() == 3);
  CHECK(r.bound.front() > r.bound.back());
  for (double b : r.bound) CHECK(b >= 0.0);
}
