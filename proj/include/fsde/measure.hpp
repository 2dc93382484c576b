#pragma once

// Signed matrix-valued measures nu on [-r0, 0], used for the linear part of
// semi-linear delay drifts: drift contribution = int nu(dtheta) x(t + theta).
// A measure is a finite list of matrix atoms A_k delta_{theta_k} plus an
// optional piecewise-constant matrix density on a uniform cell grid.

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "fsde/segment.hpp"

namespace fsde {

class SignedMatrixMeasure {
 public:
  struct Atom {
    double theta;       // in [-r0, 0]
    Eigen::MatrixXd a;  // d x d
  };

  SignedMatrixMeasure(int d, double r0) : d_(d), r0_(r0) {
    if (d < 1 || r0 <= 0.0) throw std::invalid_argument("measure: need d >= 1, r0 > 0");
  }

  static SignedMatrixMeasure dirac(double r0, double theta, const Eigen::MatrixXd& a) {
    SignedMatrixMeasure nu(static_cast<int>(a.rows()), r0);
    nu.add_atom(theta, a);
    return nu;
  }

  void add_atom(double theta, const Eigen::MatrixXd& a) {
    if (theta < -r0_ - 1e-12 * r0_ || theta > 1e-12 * r0_)
      throw std::invalid_argument("measure: atom outside [-r0, 0]");
    if (a.rows() != d_ || a.cols() != d_)
      throw std::invalid_argument("measure: atom matrix must be d x d");
    atoms_.push_back({std::min(0.0, std::max(-r0_, theta)), a});
  }

  // density constant on each of n cells [theta_c, theta_{c+1}] of width r0/n
  void set_density(std::vector<Eigen::MatrixXd> cells) {
    for (const auto& c : cells)
      if (c.rows() != d_ || c.cols() != d_)
        throw std::invalid_argument("measure: density cells must be d x d");
    if (cells.empty()) throw std::invalid_argument("measure: empty density");
    density_ = std::move(cells);
  }

  int dim() const { return d_; }
  double r0() const { return r0_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  bool has_density() const { return !density_.empty(); }
  const std::vector<Eigen::MatrixXd>& density() const { return density_; }
  double density_cell_width() const { return r0_ / static_cast<double>(density_.size()); }

  // int nu(dtheta) xi(theta): atoms read the segment pointwise, the density
  // integrates cell-by-cell with the trapezoid rule on the cell endpoints.
  Eigen::VectorXd apply(const Segment& xi) const;

  // same integral for an arbitrary continuous integrand theta -> R^d
  Eigen::VectorXd apply(const std::function<Eigen::VectorXd(double)>& f) const;

  // int e^{z theta} nu(dtheta) as a d x d complex matrix (density by complex
  // trapezoid per cell)
  Eigen::MatrixXcd laplace(std::complex<double> z) const;

  // |nu_ij|([-r0,0]) entrywise total variations
  Eigen::MatrixXd entry_total_variation() const;

  // ||nu|| = max_i sqrt(sum_j |nu_ij|([-r0,0])^2)
  double tv_norm() const;

  // Lipschitz bound for xi -> int nu(dtheta) xi(theta) w.r.t. the segment sup
  // norm: sqrt(d) * ||nu|| (componentwise row bound, then l2 assembly).
  double lipschitz_bound() const { return std::sqrt(static_cast<double>(d_)) * tv_norm(); }

 private:
  int d_;
  double r0_;
  std::vector<Atom> atoms_;
  std::vector<Eigen::MatrixXd> density_;  // empty when absent
};

}  // namespace fsde
