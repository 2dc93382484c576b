#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "fsde/coupling.hpp"
#include "fsde/model.hpp"
#include "fsde/representation.hpp"
#include "fsde/simulate.hpp"

using namespace fsde;
using namespace fsde::sim;

namespace {

FsdeModel ou_model(double h_hint = 0.0) {
  (void)h_hint;
  FsdeModel m;
  m.d = 1;
  m.r0 = 1.0;
  m.z = linear_drift(Eigen::MatrixXd::Constant(1, 1, -1.0));
  m.sigma = Eigen::MatrixXd::Identity(1, 1);
  m.lipschitz = LipschitzCert{1.0, 0.0};
  m.dissipativity = DissipativityCert{2.0, 0.0};
  return m;
}

Segment const_seg(double r0, double h, double v) {
  return Segment::constant(r0, h, Eigen::VectorXd::Constant(1, v));
}

SemiLinearModel critical_delay_model() {
  return SemiLinearModel{
      SignedMatrixMeasure::dirac(1.0, -1.0, Eigen::MatrixXd::Constant(1, 1, -std::exp(-1.0))),
      {}, 0.0, Eigen::MatrixXd::Identity(1, 1)};
}

}  // namespace

TEST_CASE("paths are bit-reproducible in (seed, replica)") {
  const FsdeModel m = ou_model();
  const Segment xi = const_seg(1.0, 1.0 / 64.0, 0.5);
  const PathRecord a = simulate(m, xi, 2.0, 99, 3);
  const PathRecord b = simulate(m, xi, 2.0, 99, 3);
  CHECK(a.data() == b.data());
  const PathRecord c = simulate(m, xi, 2.0, 99, 4);
  CHECK(a.data() != c.data());
  const PathRecord d = simulate(m, xi, 2.0, 100, 3);
  CHECK(a.data() != d.data());
}

TEST_CASE("noise-free integration converges at first order") {
  FsdeModel m = ou_model();
  m.sigma = Eigen::MatrixXd::Zero(1, 1);  // switches the noise off entirely
  auto endpoint_err = [&](double h) {
    const Segment xi = const_seg(1.0, h, 1.0);
    const PathRecord p = simulate(m, xi, 2.0, 1, 0);
    return std::fabs(p.state(p.steps())(0) - std::exp(-2.0));
  };
  const double e1 = endpoint_err(1.0 / 128.0);
  const double e2 = endpoint_err(1.0 / 256.0);
  const double e3 = endpoint_err(1.0 / 512.0);
  CHECK(e1 <= 5.0 / 128.0);
  CHECK(e2 / e1 == doctest::Approx(0.5).epsilon(0.15));
  CHECK(e3 / e2 == doctest::Approx(0.5).epsilon(0.15));
}

TEST_CASE("path record geometry and segment views") {
  const double h = 1.0 / 32.0;
  const FsdeModel m = ou_model();
  const Segment xi = Segment::from_function(1.0, h, [](double th) {
    return Eigen::VectorXd::Constant(1, th + 1.0);
  });
  const PathRecord p = simulate(m, xi, 1.5, 5, 0);
  CHECK(p.history() == 32);
  CHECK(p.steps() == 48);
  // history preserved verbatim
  for (int j = 0; j <= 32; ++j)
    CHECK(p.state(j - 32)(0) == xi.node(j)(0));
  // segment views are windows into the path
  const Segment s = p.segment_at(16);
  for (int j = 0; j <= 32; ++j)
    CHECK(s.node(j)(0) == p.state(16 - 32 + j)(0));
  Segment buf = Segment::constant(1.0, h, Eigen::VectorXd::Zero(1));
  p.segment_at(16, buf);
  CHECK(buf.matrix() == s.matrix());
}

TEST_CASE("synchronous coupling shares increments") {
  const FsdeModel m = ou_model();
  const double h = 1.0 / 64.0;
  SUBCASE("identical starts stay identical") {
    const Segment xi = const_seg(1.0, h, 0.7);
    const auto [x, y] = simulate_coupled(m, xi, xi, 2.0, 17, 2);
    CHECK(x.data() == y.data());
  }
  SUBCASE("the pair difference is the deterministic linear flow") {
    // for Z = -x the difference solves delta' = -delta exactly, noise cancels
    const Segment xi = const_seg(1.0, h, 1.0);
    const Segment eta = const_seg(1.0, h, 0.0);
    const auto [x, y] = simulate_coupled(m, xi, eta, 2.0, 17, 2);
    for (int j = 0; j <= x.steps(); ++j) {
      const double diff = x.state(j)(0) - y.state(j)(0);
      const double want = std::pow(1.0 - h, j);  // Euler flow of delta' = -delta
      CHECK(diff == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("explosions are reported, not propagated") {
  FsdeModel m = ou_model();
  m.z = [](const Eigen::VectorXd& x) {
    return (x.array().pow(3)).matrix().eval();
  };
  const Segment xi = const_seg(1.0, 1.0 / 64.0, 20.0);
  CHECK_THROWS_AS(simulate(m, xi, 2.0, 1, 0), std::runtime_error);
}

TEST_CASE("coupling control schedule and distance envelope") {
  SUBCASE("closed-form values") {
    // g(s) = d0 e^{k1 s} 2 k1/(e^{2 k1 t} - 1)
    CHECK(control_g(1.0, 1.0, 1.0, 0.0) ==
          doctest::Approx(2.0 / std::expm1(2.0)).epsilon(1e-14));
    // k1 -> 0 limit: g = d0/t, envelope linear
    CHECK(control_g(0.0, 1.0, 2.0, 0.7) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(coupling_envelope(0.0, 1.0, 2.0, 0.5) == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(coupling_envelope(1.0, 1.0, 1.0, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(coupling_envelope(1.0, 1.0, 1.0, 1.0) == doctest::Approx(0.0).epsilon(1e-14));
  }

  SUBCASE("envelope solves the controlled contraction flow") {
    // d/ds env = -k1 env - g(s), checked by central differences, including
    // across the k1 = 0 patch
    for (double k1 : {1.0, 0.3, 1e-9, 0.0, -0.5}) {
      const double d0 = 0.8, t = 1.5, ds = 1e-5;
      for (double s : {0.1, 0.7, 1.3}) {
        const double lhs = (coupling_envelope(k1, d0, t, s + ds) -
                            coupling_envelope(k1, d0, t, s - ds)) /
                           (2.0 * ds);
        const double rhs = -k1 * coupling_envelope(k1, d0, t, s) - control_g(k1, d0, t, s);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("coupling by change of measure") {
  const FsdeModel m = ou_model();
  const double h = 1.0 / 128.0, t = 1.0;
  const Segment xi = const_seg(1.0, h, 1.0);
  const Segment eta = const_seg(1.0, h, 0.0);

  SUBCASE("pathwise guarantees on every replica") {
    const double slack = 10.0 * h * 2.0 * (1.0 + h);  // 10 h (1 + k1)(d0 + h)
    for (std::uint64_t i = 0; i < 64; ++i) {
      const CouplingRun run = girsanov_coupling(m, xi, eta, t, 31, i);
      CHECK(run.tau <= t + h * 1.0001);
      CHECK(run.r == std::exp(run.log_r));
      CHECK(run.r > 0.0);
      CHECK(run.max_envelope_excess <= slack);
      // after tau the trajectories coincide
      const int jtau = static_cast<int>(run.tau / h + 0.5);
      for (int j = jtau; j <= run.x.steps(); ++j)
        CHECK(run.x.state(j)(0) == run.y.state(j)(0));
    }
  }

  SUBCASE("density integrates to one") {
    const int n = 2000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
      const CouplingRun run = girsanov_coupling(m, xi, eta, t, 31, i);
      sum += run.r;
      sumsq += run.r * run.r;
    }
    const double mean = sum / n;
    const double sd = std::sqrt((sumsq / n - mean * mean) / (n - 1.0));
    CHECK(std::fabs(mean - 1.0) <= 4.0 * sd);
  }

  SUBCASE("identical starts couple immediately with unit density") {
    const CouplingRun run = girsanov_coupling(m, xi, xi, t, 31, 0);
    CHECK(run.delta0 == 0.0);
    CHECK(run.tau <= h * 1.0001);
    CHECK(run.r == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("variation-of-constants representation tracks the simulator") {
  const double h = 1.0 / 64.0;

  SUBCASE("noise-free critical delay has a piecewise-known solution") {
    SemiLinearModel sl = critical_delay_model();
    sl.sigma = Eigen::MatrixXd::Zero(1, 1);
    const spectral::GammaTable g = spectral::gamma_solve(sl.nu, 3.0, h);
    const Segment xi = const_seg(1.0, h, 1.0);
    const PathRecord p = representation_path(sl, xi, 1.0, g, 3, 0);
    // X(t) = 1 - e^{-1} t on [0, 1] when started from the constant segment
    for (double tt : {0.25, 0.5, 1.0}) {
      const int j = static_cast<int>(tt / h + 0.5);
      CHECK(p.state(j)(0) ==
            doctest::Approx(1.0 - std::exp(-1.0) * tt).epsilon(5.0 * h));
    }
  }

  SUBCASE("with noise: same increments, O(h) agreement, linear drift") {
    SemiLinearModel sl = critical_delay_model();
    const spectral::GammaTable g = spectral::gamma_solve(sl.nu, 4.0, h);
    const Segment xi = const_seg(1.0, h, 1.0);
    const PathRecord direct = simulate(sl, xi, 2.0, 8, 1);
    const PathRecord rep = representation_path(sl, xi, 2.0, g, 8, 1);
    double worst = 0.0;
    for (int j = 0; j <= direct.steps(); ++j)
      worst = std::max(worst, std::fabs(direct.state(j)(0) - rep.state(j)(0)));
    CHECK(worst <= 10.0 * h);
  }

  SUBCASE("nonlinear memory handled by iteration") {
    SemiLinearModel sl = critical_delay_model();
    sl.b = tanh_delay_drift(0.15, 1.0);
    sl.k2 = 0.15;
    const spectral::GammaTable g = spectral::gamma_solve(sl.nu, 4.0, h);
    const Segment xi = const_seg(1.0, h, 0.8);
    const PathRecord direct = simulate(sl, xi, 2.0, 21, 0);
    const PathRecord rep = representation_path(sl, xi, 2.0, g, 21, 0);
    double worst = 0.0;
    for (int j = 0; j <= direct.steps(); ++j)
      worst = std::max(worst, std::fabs(direct.state(j)(0) - rep.state(j)(0)));
    CHECK(worst <= 10.0 * h);
  }
}
