#include "fsde/measure.hpp"

#include <cmath>

namespace fsde {

Eigen::VectorXd SignedMatrixMeasure::apply(const Segment& xi) const {
  if (xi.dim() != d_) throw std::invalid_argument("measure::apply: dimension mismatch");
  if (std::abs(xi.r0() - r0_) > 1e-12 * r0_)
    throw std::invalid_argument("measure::apply: segment r0 differs from measure support");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(d_);
  for (const auto& at : atoms_) out += at.a * xi.eval(at.theta);
  if (!density_.empty()) {
    const double w = density_cell_width();
    for (std::size_t c = 0; c < density_.size(); ++c) {
      const double lo = -r0_ + c * w;
      const double hi = lo + w;
      out += density_[c] * (0.5 * w * (xi.eval(lo) + xi.eval(hi)));
    }
  }
  return out;
}

Eigen::VectorXd SignedMatrixMeasure::apply(
    const std::function<Eigen::VectorXd(double)>& f) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(d_);
  for (const auto& at : atoms_) out += at.a * f(at.theta);
  if (!density_.empty()) {
    const double w = density_cell_width();
    for (std::size_t c = 0; c < density_.size(); ++c) {
      const double lo = -r0_ + c * w;
      const double hi = lo + w;
      out += density_[c] * (0.5 * w * (f(lo) + f(hi)));
    }
  }
  return out;
}

Eigen::MatrixXcd SignedMatrixMeasure::laplace(std::complex<double> z) const {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d_, d_);
  for (const auto& at : atoms_) out += std::exp(z * at.theta) * at.a.cast<std::complex<double>>();
  if (!density_.empty()) {
    const double w = density_cell_width();
    for (std::size_t c = 0; c < density_.size(); ++c) {
      const double lo = -r0_ + c * w;
      const double hi = lo + w;
      const std::complex<double> weight = 0.5 * w * (std::exp(z * lo) + std::exp(z * hi));
      out += weight * density_[c].cast<std::complex<double>>();
    }
  }
  return out;
}

Eigen::MatrixXd SignedMatrixMeasure::entry_total_variation() const {
  Eigen::MatrixXd tv = Eigen::MatrixXd::Zero(d_, d_);
  for (const auto& at : atoms_) tv += at.a.cwiseAbs();
  if (!density_.empty()) {
    const double w = density_cell_width();
    for (const auto& cell : density_) tv += w * cell.cwiseAbs();
  }
  return tv;
}

double SignedMatrixMeasure::tv_norm() const {
  const Eigen::MatrixXd tv = entry_total_variation();
  double best = 0.0;
  for (int i = 0; i < d_; ++i) best = std::max(best, tv.row(i).norm());
  return best;
}

}  // namespace fsde
