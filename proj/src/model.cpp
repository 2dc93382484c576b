#include "fsde/model.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "fsde/rng.hpp"

namespace fsde {

double FsdeModel::sigma_inv_norm() const {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sigma);
  const double smin = svd.singularValues().minCoeff();
  if (smin <= 0.0) throw std::runtime_error("sigma is singular");
  return 1.0 / smin;
}

FsdeModel SemiLinearModel::as_fsde() const {
  FsdeModel m;
  m.d = dim();
  m.r0 = r0();
  m.sigma = sigma;
  const SignedMatrixMeasure nu_copy = nu;
  const SegmentDrift b_copy = b;
  m.b = [nu_copy, b_copy](const Segment& xi) {
    Eigen::VectorXd out = nu_copy.apply(xi);
    if (b_copy) out += b_copy(xi);
    return out;
  };
  m.lipschitz = LipschitzCert{0.0, k2 + nu.lipschitz_bound()};
  return m;
}

namespace {

void check_sigma(const Eigen::MatrixXd& sigma, int d, ValidationReport& rep) {
  if (sigma.rows() != d || sigma.cols() != d) {
    rep.fail("sigma must be d x d");
    return;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sigma);
  const double smax = svd.singularValues().maxCoeff();
  const double smin = svd.singularValues().minCoeff();
  if (!(smin > 1e-12 * std::max(1.0, smax))) rep.fail("sigma is singular (Girsanov steps need sigma^{-1})");
}

void check_drift_finite(const FsdeModel& m, ValidationReport& rep) {
  // evaluate on two probe segments and insist on finite output
  const double h = m.r0 / 8.0;
  const Segment zero = Segment::constant(m.r0, h, Eigen::VectorXd::Zero(m.d));
  const Segment ramp = Segment::from_function(m.r0, h, [&](double theta) {
    return Eigen::VectorXd::Constant(m.d, 1.0 + theta / m.r0);
  });
  for (const Segment* s : {&zero, &ramp}) {
    const Eigen::VectorXd v = m.drift(*s);
    if (!v.allFinite()) {
      rep.fail("drift produced a non-finite value on a probe segment");
      return;
    }
  }
}

}  // namespace

ValidationReport validate_model(const FsdeModel& m) {
  ValidationReport rep;
  if (m.d < 1) rep.fail("need d >= 1");
  if (!(m.r0 > 0.0)) rep.fail("need r0 > 0");
  if (rep.ok) check_sigma(m.sigma, m.d, rep);
  if (m.lipschitz && m.lipschitz->k2 < 0.0) rep.fail("k2 must be >= 0");
  if (rep.ok) check_drift_finite(m, rep);
  return rep;
}

ValidationReport validate_model(const SemiLinearModel& m) {
  ValidationReport rep;
  if (!(m.r0() > 0.0)) rep.fail("need r0 > 0");
  if (m.k2 < 0.0) rep.fail("k2 must be >= 0");
  for (const auto& at : m.nu.atoms())
    if (at.theta < -m.r0() || at.theta > 0.0) rep.fail("measure atom outside [-r0, 0]");
  check_sigma(m.sigma, m.dim(), rep);
  if (rep.ok) {
    FsdeModel f = m.as_fsde();
    check_drift_finite(f, rep);
  }
  return rep;
}

PointDrift linear_drift(const Eigen::MatrixXd& a) {
  return [a](const Eigen::VectorXd& x) -> Eigen::VectorXd { return a * x; };
}

double linear_drift_k1(const Eigen::MatrixXd& a) {
  const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  return -es.eigenvalues().maxCoeff();
}

SegmentDrift discrete_delay_drift(const Eigen::MatrixXd& b_mat, double r0) {
  // explicit return type: the deduced Eigen product expression would dangle
  // once the xi.eval temporary dies at end of the return statement
  return [b_mat, r0](const Segment& xi) -> Eigen::VectorXd { return b_mat * xi.eval(-r0); };
}

SegmentDrift distributed_delay_drift(const SignedMatrixMeasure& rho) {
  return [rho](const Segment& xi) { return rho.apply(xi); };
}

SegmentDrift tanh_delay_drift(double c, double r0) {
  return [c, r0](const Segment& xi) {
    Eigen::VectorXd v = xi.eval(-r0);
    for (int i = 0; i < v.size(); ++i) v(i) = c * std::tanh(v(i));
    return v;
  };
}

namespace {

// random smooth-ish segment: constant + linear + one harmonic, Gaussian coefs
Segment random_segment(double r0, double h, int d, double amp, GaussianStream& g) {
  std::vector<Eigen::VectorXd> coef(4);
  for (auto& c : coef) c = amp * g.gauss_vector(d);
  return Segment::from_function(r0, h, [&](double theta) {
    const double u = theta / r0;  // in [-1, 0]
    Eigen::VectorXd v = coef[0] + u * coef[1];
    v += std::sin(3.14159265358979323846 * u) * coef[2];
    v += std::cos(3.14159265358979323846 * u) * coef[3];
    return v;
  });
}

}  // namespace

ProbeReport probe_dissipativity(const FsdeModel& m, const ProbeConfig& cfg,
                                std::uint64_t seed,
                                std::optional<DissipativityCert> candidate) {
  ProbeReport rep;
  const double h = m.r0 / std::max(2, cfg.grid_points - 1);
  GaussianStream g(seed, 0);

  struct PairStat {
    double lhs, d0sq, dsupsq;
  };
  std::vector<PairStat> stats;
  stats.reserve(cfg.n_pairs + 2);

  auto record = [&](const Segment& xi, const Segment& eta) {
    const Eigen::VectorXd diff0 = xi.eval(0.0) - eta.eval(0.0);
    const double lhs = 2.0 * (m.drift(xi) - m.drift(eta)).dot(diff0);
    stats.push_back({lhs, diff0.squaredNorm(), std::pow((xi - eta).sup_norm(), 2)});
  };

  for (int i = 0; i < cfg.n_pairs; ++i) {
    const Segment xi = random_segment(m.r0, h, m.d, cfg.amplitude, g);
    const Segment eta = random_segment(m.r0, h, m.d, cfg.amplitude, g);
    record(xi, eta);
  }
  // adversarial pairs: pure constant displacement (memory term fully engaged)
  // and displacement concentrated at the endpoint
  {
    const Segment xi = random_segment(m.r0, h, m.d, cfg.amplitude, g);
    Segment eta = xi;
    const Eigen::VectorXd shift = Eigen::VectorXd::Constant(m.d, 0.7 * cfg.amplitude);
    for (int j = 0; j < eta.grid_size(); ++j) eta.node(j) -= shift;
    record(xi, eta);

    Segment eta2 = xi;
    eta2.node(eta2.grid_size() - 1) -= shift;
    record(xi, eta2);
  }

  // tightest lambda2 per candidate lambda1 so that no sampled pair violates
  // lhs <= lambda2 * dsup^2 - lambda1 * d0^2
  std::vector<double> grid = cfg.lambda1_grid;
  if (grid.empty()) grid = {0.0, 0.5, 1.0, 2.0, 4.0};
  for (double l1 : grid) {
    double l2 = 0.0;
    for (const auto& s : stats)
      if (s.dsupsq > 1e-14)
        l2 = std::max(l2, (s.lhs + l1 * s.d0sq) / s.dsupsq);
    rep.tightest.emplace_back(l1, l2);
  }

  if (candidate) {
    rep.candidate_checked = true;
    for (const auto& s : stats) {
      const double rhs = candidate->lambda2 * s.dsupsq - candidate->lambda1 * s.d0sq;
      if (s.lhs > rhs + 1e-10 * (1.0 + std::fabs(rhs))) {
        rep.candidate_falsified = true;
        rep.witness = {s.lhs, rhs, std::sqrt(s.d0sq), std::sqrt(s.dsupsq)};
        break;
      }
    }
  }
  return rep;
}

}  // namespace fsde
