#pragma once

// Model descriptions for functional SDEs with additive noise,
//
//   dX(t) = { Z(X(t)) + b(X_t) } dt + sigma dB(t),
//
// where X_t is the segment process on [-r0, 0].  Models carry optional
// analytic certificates:
//  - DissipativityCert (lambda1, lambda2): one-sided contraction inequality
//      2<Z(x)+b(xi) - Z(y)-b(eta), x-y>  <=  lambda2 ||xi-eta||^2 - lambda1 |x-y|^2
//    for x = xi(0), y = eta(0);
//  - LipschitzCert (k1, k2): <Z(x)-Z(y), x-y> <= -k1 |x-y|^2 and
//      |b(xi)-b(eta)| <= k2 ||xi-eta||.
// Certificates are inputs (from the parametric families below, or user
// supplied); probe_dissipativity can falsify but never prove them.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fsde/measure.hpp"
#include "fsde/segment.hpp"

namespace fsde {

struct DissipativityCert {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

struct LipschitzCert {
  double k1 = 0.0;  // one-sided dissipativity constant of Z
  double k2 = 0.0;  // sup-norm Lipschitz constant of b
};

using PointDrift = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using SegmentDrift = std::function<Eigen::VectorXd(const Segment&)>;

struct FsdeModel {
  int d = 1;
  double r0 = 1.0;
  PointDrift z;          // may be empty (== 0)
  SegmentDrift b;        // may be empty (== 0)
  Eigen::MatrixXd sigma; // d x d, nonsingular
  std::optional<DissipativityCert> dissipativity;
  std::optional<LipschitzCert> lipschitz;

  Eigen::VectorXd z_at(const Eigen::VectorXd& x) const {
    return z ? z(x) : Eigen::VectorXd::Zero(d);
  }
  Eigen::VectorXd b_at(const Segment& xi) const {
    return b ? b(xi) : Eigen::VectorXd::Zero(d);
  }
  // total drift evaluated on a segment (current point = xi(0))
  Eigen::VectorXd drift(const Segment& xi) const { return z_at(xi.eval(0.0)) + b_at(xi); }

  // largest singular value of sigma^{-1}
  double sigma_inv_norm() const;
};

// Semi-linear special case dX = { int nu(dtheta) X(t+theta) + b(X_t) } dt + sigma dB.
struct SemiLinearModel {
  SignedMatrixMeasure nu;
  SegmentDrift b;        // may be empty
  double k2 = 0.0;       // Lipschitz constant of b alone
  Eigen::MatrixXd sigma;

  int dim() const { return nu.dim(); }
  double r0() const { return nu.r0(); }

  Eigen::VectorXd drift(const Segment& xi) const {
    Eigen::VectorXd out = nu.apply(xi);
    if (b) out += b(xi);
    return out;
  }

  // View as a general model with Z = 0 and the linear part folded into b;
  // k1 = 0 and k2_eff = k2 + Lipschitz bound of the nu-term.
  FsdeModel as_fsde() const;
};

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> errors;
  void fail(std::string msg) {
    ok = false;
    errors.push_back(std::move(msg));
  }
};

ValidationReport validate_model(const FsdeModel& m);
ValidationReport validate_model(const SemiLinearModel& m);

// ---- parametric drift families (certificates supplied by construction) ----

// Z(x) = A x; k1 = -(largest eigenvalue of (A + A^T)/2)
PointDrift linear_drift(const Eigen::MatrixXd& a);
double linear_drift_k1(const Eigen::MatrixXd& a);

// b(xi) = B xi(-r0); k2 = ||B||_2
SegmentDrift discrete_delay_drift(const Eigen::MatrixXd& b_mat, double r0);

// b(xi) = int rho(theta) xi(theta) dtheta for a density-only measure; k2 via
// the measure's Lipschitz bound
SegmentDrift distributed_delay_drift(const SignedMatrixMeasure& rho);

// b_i(xi) = c * tanh(xi_i(-r0)); k2 = |c|
SegmentDrift tanh_delay_drift(double c, double r0);

// ---- dissipativity probing (falsification only) ----

struct ProbeConfig {
  int n_pairs = 256;          // random segment pairs per run
  double amplitude = 2.0;     // scale of sampled segments
  int grid_points = 9;        // nodes per sampled segment feature
  std::vector<double> lambda1_grid;  // candidate lambda1 values
};

struct ProbeWitness {
  double lhs = 0.0;   // 2<drift difference, endpoint difference>
  double rhs = 0.0;   // lambda2 ||Delta||^2 - lambda1 |Delta(0)|^2
  double delta0 = 0.0;
  double delta_sup = 0.0;
};

struct ProbeReport {
  // for each lambda1 in the grid, the smallest lambda2 >= 0 consistent with
  // every sampled pair
  std::vector<std::pair<double, double>> tightest;
  // witness against an explicitly requested candidate, if falsified
  bool candidate_checked = false;
  bool candidate_falsified = false;
  ProbeWitness witness;
};

ProbeReport probe_dissipativity(const FsdeModel& m, const ProbeConfig& cfg,
                                std::uint64_t seed,
                                std::optional<DissipativityCert> candidate = std::nullopt);

}  // namespace fsde
