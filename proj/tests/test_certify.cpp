#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "fsde/certify.hpp"
#include "fsde/measure.hpp"

using namespace fsde;
using namespace fsde::certify;

namespace {

SignedMatrixMeasure scalar_atom(double r0, double theta, double a) {
  return SignedMatrixMeasure::dirac(r0, theta, Eigen::MatrixXd::Constant(1, 1, a));
}

// nu = -e^{-1} delta_{-1}: spectral gap exactly 1 (double root at -1)
SignedMatrixMeasure critical_delay_measure() {
  return scalar_atom(1.0, -1.0, -std::exp(-1.0));
}

// independent grid + refinement oracle for sup_{s in [0, l1]} s - l2 e^{r0 s}
double thm11_grid(double l1, double l2, double r0) {
  auto phi = [&](double s) { return s - l2 * std::exp(r0 * s); };
  double best = phi(0.0);
  const int n = 200000;
  for (int i = 1; i <= n; ++i) best = std::max(best, phi(l1 * i / n));
  return best;
}

// independent oracle for the feasibility threshold
//   max_{s in (0, 2 k1)} (2 k1 s - s^2) e^{-r0 (2 k1 - s)}
// by grid scan plus ternary refinement around the best cell
struct ThresholdScan {
  double value = 0.0;
  double argmax = 0.0;
};

ThresholdScan threshold_grid(double k1, double r0) {
  auto f = [&](double s) { return (2.0 * k1 * s - s * s) * std::exp(-r0 * (2.0 * k1 - s)); };
  const int n = 20000;
  int ibest = 1;
  double best = -1e300;
  for (int i = 1; i < n; ++i) {
    const double v = f(2.0 * k1 * i / n);
    if (v > best) {
      best = v;
      ibest = i;
    }
  }
  double lo = 2.0 * k1 * (ibest - 1) / n, hi = 2.0 * k1 * (ibest + 1) / n;
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (f(m1) < f(m2)) lo = m1;
    else hi = m2;
  }
  const double s = 0.5 * (lo + hi);
  return {f(s), s};
}

}  // namespace

TEST_CASE("dissipativity rate: closed form against grid scans") {
  SUBCASE("optimizer clamped to lambda1") {
    // stationary point ln(1/(0.1))/1 = 2.30 > lambda1 = 2, so s* = 2 and
    // lambda = 2 - 0.1 e^2
    const RateResult r = rate_thm11(2.0, 0.1, 1.0);
    CHECK(r.applicable);
    CHECK(r.s_star == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r.lambda == doctest::Approx(1.2610943901069351).epsilon(1e-12));
  }
  SUBCASE("no memory term: rate equals lambda1") {
    const RateResult r = rate_thm11(1.0, 0.0, 1.0);
    CHECK(r.applicable);
    CHECK(r.s_star == 1.0);
    CHECK(r.lambda == 1.0);
  }
  SUBCASE("overwhelming memory term: not applicable") {
    const RateResult r = rate_thm11(1.0, 2.0, 1.0);
    CHECK_FALSE(r.applicable);
    CHECK(r.lambda <= 0.0);
  }
  SUBCASE("random parameters match an independent scan") {
    std::mt19937_64 eng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 30; ++i) {
      const double l1 = 0.1 + 5.9 * u(eng);
      const double l2 = 3.0 * u(eng);
      const double r0 = 0.1 + 2.9 * u(eng);
      const RateResult r = rate_thm11(l1, l2, r0);
      CHECK(r.lambda ==
            doctest::Approx(thm11_grid(l1, l2, r0)).epsilon(1e-7));
    }
  }
  SUBCASE("rejects negative rates and horizons") {
    CHECK_THROWS_AS(rate_thm11(-1.0, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(rate_thm11(1.0, -0.1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(rate_thm11(1.0, 0.1, 0.0), std::invalid_argument);
  }
}

TEST_CASE("Lipschitz-route feasibility threshold and closed-form rate") {
  SUBCASE("frozen values at k1 = r0 = 1") {
    const Cor12Result c = check_cor12(1.0, 0.1, 1.0);
    CHECK(c.applicable);
    CHECK(c.threshold == doctest::Approx(0.4611587920072036).epsilon(1e-12));
    CHECK(c.s0 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(c.lambda == doctest::Approx(0.573083948857749).epsilon(1e-10));
    CHECK(c.margin == doctest::Approx(0.4611587920072036 - 0.01).epsilon(1e-10));
  }

  SUBCASE("induced dissipativity pair reproduces the same rate") {
    for (double k1 : {0.4, 1.0, 2.5}) {
      for (double r0 : {0.25, 1.0, 3.0}) {
        const double k2 = 0.3 * std::sqrt(threshold_grid(k1, r0).value);
        const Cor12Result c = check_cor12(k1, k2, r0);
        REQUIRE(c.applicable);
        CHECK(c.lambda1 == doctest::Approx(2.0 * k1 - c.s0).epsilon(1e-12));
        CHECK(c.lambda2 == doctest::Approx(k2 * k2 / c.s0).epsilon(1e-12));
        const RateResult via = rate_thm11(c.lambda1, c.lambda2, r0);
        CHECK(via.applicable);
        CHECK(via.lambda == doctest::Approx(c.lambda).epsilon(1e-9));
      }
    }
  }

  SUBCASE("threshold equals the variational oracle, argmax equals s0") {
    for (double k1 : {0.3, 1.0, 2.5, 4.0}) {
      for (double r0 : {0.25, 1.0, 3.0}) {
        const ThresholdScan scan = threshold_grid(k1, r0);
        const Cor12Result c = check_cor12(k1, 0.0, r0);
        CHECK(c.threshold == doctest::Approx(scan.value).epsilon(1e-8));
        CHECK(std::fabs(c.s0 - scan.argmax) <= 1e-6 * (1.0 + c.s0));
      }
    }
  }

  SUBCASE("feasibility flips exactly at the threshold") {
    const double thr = check_cor12(1.0, 0.0, 1.0).threshold;
    CHECK(check_cor12(1.0, std::sqrt(thr) * 0.999, 1.0).applicable);
    const Cor12Result bad = check_cor12(1.0, std::sqrt(thr) * 1.001, 1.0);
    CHECK_FALSE(bad.applicable);
    CHECK(bad.margin < 0.0);
  }

  SUBCASE("k2 = 0 reduces to the pure contraction rate") {
    const Cor12Result c = check_cor12(1.0, 0.0, 1.0);
    CHECK(c.lambda2 == 0.0);
    // lambda = lambda1 = 2 k1 - s0 when the memory term vanishes
    CHECK(c.lambda == doctest::Approx(c.lambda1).epsilon(1e-12));
  }

  SUBCASE("rejects non-contractive point drifts") {
    CHECK_THROWS_AS(check_cor12(0.0, 0.1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(check_cor12(1.0, -0.1, 1.0), std::invalid_argument);
  }
}

TEST_CASE("spectral-route rate from decay envelopes") {
  SUBCASE("critical delay with no nonlinear part certifies almost the gap") {
    const Thm13Result r = rate_thm13(critical_delay_measure(), 0.0);
    CHECK(r.applicable);
    CHECK(r.lambda0 == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(r.lambda >= 0.99);
    CHECK(r.lambda <= 1.0);
  }

  SUBCASE("stable point part with a small perturbation: k - c_k k2 e^k") {
    // ||Gamma(t)|| = e^{-t} gives c_k = 1 for k < 1, so the optimum sits at
    // the top of the k grid: lambda ~ 0.999 - 0.1 e^{0.999}
    const Thm13Result r = rate_thm13(scalar_atom(1.0, 0.0, -1.0), 0.1);
    CHECK(r.applicable);
    CHECK(r.k_star == doctest::Approx(0.999).epsilon(1e-6));
    CHECK(r.lambda == doctest::Approx(0.7274435094681433).epsilon(3e-3));
    CHECK(r.ck_at_star == doctest::Approx(1.0).epsilon(1e-3));
  }

  SUBCASE("analytic envelopes are never better than measured ones") {
    Thm13Options an;
    an.provider = CkProvider::analytic;
    const Thm13Result a = rate_thm13(scalar_atom(1.0, 0.0, -1.0), 0.01, an);
    const Thm13Result e = rate_thm13(scalar_atom(1.0, 0.0, -1.0), 0.01);
    CHECK(a.applicable);
    CHECK(e.applicable);
    CHECK(a.lambda <= e.lambda + 1e-9);
  }

  SUBCASE("unstable linear part yields no certificate") {
    const Thm13Result r = rate_thm13(scalar_atom(1.0, -1.0, 0.5), 0.0);
    CHECK_FALSE(r.applicable);
    CHECK(r.lambda0 > 0.0);
  }

  SUBCASE("too large a perturbation yields no certificate") {
    const Thm13Result r = rate_thm13(scalar_atom(1.0, 0.0, -1.0), 5.0);
    CHECK_FALSE(r.applicable);
  }
}

TEST_CASE("Harnack and density-moment exponents") {
  const double sig = 1.0, r0 = 1.0;

  SUBCASE("continuous across k1 = 0 (series patches)") {
    HarnackParams hp{2.0, 1.0, 1.0};
    const double at0 = harnack_exponent(hp, 0.0, 0.3, sig, 1.0, 2.0, r0);
    for (double k1 : {1e-8, -1e-8, 1e-10, -1e-10}) {
      const double v = harnack_exponent(hp, k1, 0.3, sig, 1.0, 2.0, r0);
      CHECK(v == doctest::Approx(at0).epsilon(1e-6));
    }
  }

  SUBCASE("matches a direct evaluation away from the singular point") {
    const HarnackParams hp{2.0, 0.7, 1.3};
    const double k1 = 0.4, k2 = 0.2, d0sq = 0.81, supsq = 1.69;
    const double e2 = std::expm1(2.0 * k1 * hp.t);
    const double bracket =
        2.0 * k1 * d0sq / e2 +
        (k2 * k2 / hp.delta) *
            (r0 * supsq + d0sq *
                              (std::exp(4.0 * k1 * hp.t) - 1.0 -
                               4.0 * k1 * hp.t * std::exp(2.0 * k1 * hp.t)) /
                              (2.0 * k1 * e2 * e2));
    const double want =
        hp.p * hp.p * sig * sig * (1.0 + hp.delta) / (2.0 * (hp.p - 1.0)) * bracket;
    CHECK(harnack_exponent(hp, k1, k2, sig, d0sq, supsq, r0) ==
          doctest::Approx(want).epsilon(1e-12));
  }

  SUBCASE("density moment exponent is the Harnack exponent over p - 1") {
    for (double p : {1.5, 2.0, 4.0}) {
      HarnackParams hp{p, 0.9, 1.1};
      const double a = harnack_exponent(hp, 0.6, 0.25, 1.4, 0.5, 1.5, r0);
      const double b = nw2_exponent(hp, 0.6, 0.25, 1.4, 0.5, 1.5, r0);
      CHECK(b == doctest::Approx(a / (p - 1.0)).epsilon(1e-12));
    }
  }

  SUBCASE("monotone in the displacement") {
    HarnackParams hp{2.0, 1.0, 1.0};
    const double small = harnack_exponent(hp, 1.0, 0.1, sig, 0.5, 1.0, r0);
    const double large = harnack_exponent(hp, 1.0, 0.1, sig, 1.5, 3.0, r0);
    CHECK(small < large);
  }

  SUBCASE("Young-parameter optimization really minimizes") {
    const BestHarnack best = best_harnack_exponent(2.0, 1.0, 1.0, 0.1, sig, 1.0, 2.0, r0);
    HarnackParams at{2.0, best.delta, 1.0};
    CHECK(harnack_exponent(at, 1.0, 0.1, sig, 1.0, 2.0, r0) ==
          doctest::Approx(best.exponent).epsilon(1e-9));
    HarnackParams unit{2.0, 1.0, 1.0};
    CHECK(best.exponent <= harnack_exponent(unit, 1.0, 0.1, sig, 1.0, 2.0, r0) + 1e-12);
    for (double f : {0.8, 1.25}) {
      HarnackParams off{2.0, best.delta * f, 1.0};
      CHECK(harnack_exponent(off, 1.0, 0.1, sig, 1.0, 2.0, r0) >=
            best.exponent - 1e-12);
    }
  }
}
