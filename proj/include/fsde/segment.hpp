#pragma once

// Path segments: the state of a delay equation at time t is the trajectory
// piece X_t(theta) = X(t + theta), theta in [-r0, 0].  Values sit on a
// uniform grid theta_j = -r0 + j*h (column j of a d x (n+1) matrix, so that
// simulation loops can refresh a segment with one contiguous block copy) and
// are interpolated linearly in between.

#include <cmath>
#include <functional>
#include <stdexcept>

#include <Eigen/Dense>

namespace fsde {

class Segment {
 public:
  Segment() = default;

  // vals.col(j) = x(-r0 + j*h), j = 0..n with n*h == r0
  Segment(double r0, double h, Eigen::MatrixXd vals) : r0_(r0), h_(h), vals_(std::move(vals)) {
    if (r0_ <= 0.0 || h_ <= 0.0) throw std::invalid_argument("Segment: need r0 > 0, h > 0");
    const double steps = r0_ / h_;
    n_ = static_cast<int>(steps + 0.5);
    if (std::fabs(steps - n_) > 1e-9 * steps || n_ < 1)
      throw std::invalid_argument("Segment: h must divide r0");
    if (static_cast<int>(vals_.cols()) != n_ + 1)
      throw std::invalid_argument("Segment: need r0/h + 1 grid columns");
    d_ = static_cast<int>(vals_.rows());
    if (d_ < 1) throw std::invalid_argument("Segment: need d >= 1");
  }

  // constant segment xi(theta) = x0
  static Segment constant(double r0, double h, const Eigen::VectorXd& x0) {
    const int n = static_cast<int>(r0 / h + 0.5);
    Eigen::MatrixXd m(x0.size(), n + 1);
    m.colwise() = x0;
    return Segment(r0, h, std::move(m));
  }

  // sampled from a function of theta in [-r0, 0]
  static Segment from_function(double r0, double h,
                               const std::function<Eigen::VectorXd(double)>& f) {
    const int n = static_cast<int>(r0 / h + 0.5);
    Eigen::MatrixXd m;
    for (int j = 0; j <= n; ++j) {
      const Eigen::VectorXd v = f(-r0 + j * h);
      if (j == 0) m.resize(v.size(), n + 1);
      m.col(j) = v;
    }
    return Segment(r0, h, std::move(m));
  }

  int dim() const { return d_; }
  double r0() const { return r0_; }
  double h() const { return h_; }
  int grid_size() const { return n_ + 1; }

  Eigen::MatrixXd& matrix() { return vals_; }
  const Eigen::MatrixXd& matrix() const { return vals_; }
  auto node(int j) { return vals_.col(j); }
  auto node(int j) const { return vals_.col(j); }

  // piecewise-linear evaluation; exact at grid nodes
  Eigen::VectorXd eval(double theta) const {
    Eigen::VectorXd out(d_);
    eval_into(theta, out);
    return out;
  }

  template <typename Out>
  void eval_into(double theta, Out&& out) const {
    if (theta < -r0_ - 1e-12 * r0_ || theta > 1e-12 * r0_)
      throw std::invalid_argument("Segment::eval: theta outside [-r0, 0]");
    const double pos = (theta + r0_) / h_;
    int j = static_cast<int>(pos);
    if (j >= n_) j = n_ - 1;
    if (j < 0) j = 0;
    const double w = pos - j;
    if (w <= 1e-12) out = vals_.col(j);
    else if (w >= 1.0 - 1e-12) out = vals_.col(j + 1);
    else out = (1.0 - w) * vals_.col(j) + w * vals_.col(j + 1);
  }

  // sup norm over the grid: max_j |x(theta_j)|_2
  double sup_norm() const { return vals_.colwise().norm().maxCoeff(); }

  Segment operator-(const Segment& o) const {
    require_same_grid(o);
    return Segment(r0_, h_, vals_ - o.vals_);
  }

  void require_same_grid(const Segment& o) const {
    if (o.r0_ != r0_ || o.h_ != h_ || o.d_ != d_)
      throw std::invalid_argument("Segment: mismatched grids");
  }

 private:
  double r0_ = 0.0;
  double h_ = 0.0;
  int n_ = 0;
  int d_ = 0;
  Eigen::MatrixXd vals_;
};

}  // namespace fsde
