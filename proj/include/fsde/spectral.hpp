#pragma once

// Spectral analysis of the linear delay equation dX = (int nu(dtheta) X(t+theta)) dt:
//  - characteristic matrix Q(z) = z I - int e^{z theta} nu(dtheta);
//  - rightmost characteristic real part lambda0 via argument-principle
//    winding counts, bisection, and a Newton-polished witness root;
//  - fundamental solution Gamma by the explicit-Euler method of steps;
//  - Gamma by Fourier inversion of the resolvent along Re z = lambda;
//  - empirical and analytic constants c_k with ||Gamma(t)|| <= c_k e^{-k t}.

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "fsde/measure.hpp"

namespace fsde::spectral {

// Q(z) = z I - int e^{z theta} nu(dtheta)
Eigen::MatrixXcd char_matrix(const SignedMatrixMeasure& nu, std::complex<double> z);

// dQ/dz = I - int theta e^{z theta} nu(dtheta)
Eigen::MatrixXcd char_matrix_dz(const SignedMatrixMeasure& nu, std::complex<double> z);

struct WindingBox {
  double re_lo = 0.0, re_hi = 0.0, im_lo = 0.0, im_hi = 0.0;
  long long count = 0;  // characteristic roots inside, with multiplicity
};

// Zeros (with multiplicity) of det Q inside an axis-aligned rectangle, by the
// argument principle with adaptive contour sampling.  Throws if the winding
// number fails to stabilize after perturb-and-retry.
long long count_roots(const SignedMatrixMeasure& nu, double re_lo, double re_hi,
                      double im_lo, double im_hi);

struct CharRootResult {
  double lambda0 = 0.0;          // sup of real parts of characteristic roots
  std::complex<double> witness;  // a polished root with Re ~ lambda0
  bool witness_polished = false;
  bool converged = false;
  double search_floor = 0.0;     // no roots found with Re > lambda0 down to this
  std::vector<WindingBox> counts;
};

// Rightmost characteristic real part to absolute tolerance tol.  Searches
// Re z in [-re_limit, ||nu|| + 1]; roots with Re z >= x are confined to
// |z| <= e^{r0 max(0,-x)} ||nu||, which certifies the box heights.
CharRootResult lambda0(const SignedMatrixMeasure& nu, double tol = 1e-8,
                       double re_limit = 0.0 /* 0 -> 10(||nu||+1) */);

// --- fundamental solution ---

// Gamma(t) on the grid t_j = j h, with Gamma = 0 on [-r0, 0) and Gamma(0) = I
class GammaTable {
 public:
  GammaTable(double r0, double h, std::vector<Eigen::MatrixXd> entries)
      : r0_(r0), h_(h), entries_(std::move(entries)) {}

  double r0() const { return r0_; }
  double h() const { return h_; }
  double horizon() const { return h_ * static_cast<double>(entries_.size() - 1); }
  std::size_t size() const { return entries_.size(); }
  const Eigen::MatrixXd& entry(std::size_t j) const { return entries_[j]; }

  // Gamma(s): 0 for s < 0, linear interpolation on the table for s >= 0
  Eigen::MatrixXd eval(double s) const;

  // spectral norm ||Gamma(t_j)||, cached
  double norm(std::size_t j) const;

 private:
  double r0_, h_;
  std::vector<Eigen::MatrixXd> entries_;
  mutable std::vector<double> norms_;
};

// method of steps, explicit Euler with step h (h must divide r0)
GammaTable gamma_solve(const SignedMatrixMeasure& nu, double horizon, double h);

// Fourier inversion along Re z = lambda > lambda0:
//   Gamma(t) = e^{lambda0 t} I
//            + (1/2pi) int_{-theta_max}^{theta_max} G(theta) e^{t(lambda + i theta)} dtheta,
// G(theta) = Q(lambda + i theta)^{-1} - (lambda + i theta - lambda0)^{-1} I.
// The identity piece is integrated exactly; only the decaying remainder G is
// quadratured (trapezoid, conjugate symmetry).
Eigen::MatrixXd gamma_fourier(const SignedMatrixMeasure& nu, double lambda, double t,
                              double theta_max, int n_grid);

// picks theta_max from the ||G|| ~ C/theta^2 tail bound and a matching grid
Eigen::MatrixXd gamma_fourier_auto(const SignedMatrixMeasure& nu, double lambda, double t,
                                   double tol = 5e-4);

// --- decay envelopes ||Gamma(t)|| <= c_k e^{-k t} ---

struct CkResult {
  double ck = 1.0;
  double t_at_max = 0.0;
  double horizon = 0.0;
};

// c_k = max over the table of ||Gamma(t)|| e^{k t}; diverges with the horizon
// when k >= -lambda0, so callers should keep k below that threshold
CkResult ck_empirical(const GammaTable& gamma, double k);

struct PpBound {
  double lambda = 0.0;
  double lambda0 = 0.0;
  double nu_norm = 0.0;
  double t_lambda = 0.0;    // 2 e^{r0 max(0,-lambda)} ||nu||
  double rho_lambda = 0.0;  // max_{|theta| <= t_lambda} ||G(theta)||
  double arc_term = 0.0;    // (lambda - lambda0 + 1) pi / (lambda - lambda0)
  double tail_term = 0.0;   // 4 (|lambda0| + e^{r0 lambda^-} ||nu||) / t_lambda
  double mid_term = 0.0;    // 2 rho_lambda t_lambda
  double prefactor = 0.0;   // sum of the three; ||Gamma(t)|| <= prefactor e^{lambda t}
  double bound(double t) const { return prefactor * std::exp(lambda * t); }
};

// analytic decay envelope at rate lambda in (lambda0, 0)
PpBound pp_bound(const SignedMatrixMeasure& nu, double lambda, int rho_grid = 4096);

}  // namespace fsde::spectral
