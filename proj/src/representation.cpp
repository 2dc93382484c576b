#include "fsde/representation.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace fsde::sim {

namespace {

// int_a^0 Gamma(t0 - s) xi(s) ds by the trapezoid rule on the segment grid,
// with a partial first cell when a is off-grid; t0 = t + theta so the Gamma
// argument is t0 - s
Eigen::VectorXd history_inner(const spectral::GammaTable& gamma, const Segment& xi,
                              double t0, double a) {
  const int d = xi.dim();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(d);
  if (a >= -1e-14) return acc;  // zero-length
  const double h = xi.h();
  const double r0 = xi.r0();
  const int n = xi.grid_size() - 1;
  int k0 = static_cast<int>(std::ceil((a + r0) / h - 1e-9));
  if (k0 < 0) k0 = 0;
  const double s_k0 = -r0 + k0 * h;
  if (s_k0 - a > 1e-14) {
    acc += 0.5 * (s_k0 - a) *
           (gamma.eval(t0 - a) * xi.eval(a) + gamma.eval(t0 - s_k0) * xi.eval(s_k0));
  }
  for (int k = k0; k < n; ++k) {
    const double sl = -r0 + k * h;
    const double sr = sl + h;
    acc += 0.5 * h * (gamma.eval(t0 - sl) * xi.node(k) + gamma.eval(t0 - sr) * xi.node(k + 1));
  }
  return acc;
}

}  // namespace

PathRecord representation_path(const SemiLinearModel& m, const Segment& xi, double horizon,
                               const spectral::GammaTable& gamma, std::uint64_t seed,
                               std::uint64_t replica, const RepresentationOptions& opt) {
  const int d = m.dim();
  if (xi.dim() != d) throw std::invalid_argument("representation_path: dimension mismatch");
  if (gamma.horizon() < horizon - 1e-9)
    throw std::invalid_argument("representation_path: Gamma table horizon too short");
  PathRecord path(xi, horizon);
  const double h = path.h();
  const int n = path.steps();
  const SignedMatrixMeasure& nu = m.nu;

  // Brownian increments, identical draw order to simulate()
  GaussianStream gs(seed, replica);
  Eigen::MatrixXd kicks(d, n);
  {
    Eigen::VectorXd noise(d);
    const double sqh = std::sqrt(h);
    for (int j = 0; j < n; ++j) {
      gs.gauss_fill(noise);
      kicks.col(j) = sqh * (m.sigma * noise);
    }
  }

  const Eigen::VectorXd xi0 = xi.node(xi.grid_size() - 1);

  // deterministic + stochastic base (everything except the b convolution)
  Eigen::MatrixXd base(d, n + 1);
  base.col(0) = xi0;
  for (int j = 1; j <= n; ++j) {
    const double t = j * h;
    Eigen::VectorXd v = gamma.eval(t) * xi0;
    // history: int nu(dtheta) int_theta^0 Gamma(t + theta - s) xi(s) ds
    for (const auto& at : nu.atoms())
      v += at.a * history_inner(gamma, xi, t + at.theta, at.theta);
    if (nu.has_density()) {
      const double w = nu.density_cell_width();
      for (std::size_t c = 0; c < nu.density().size(); ++c) {
        const double lo = -nu.r0() + c * w;
        const double hi = lo + w;
        v += nu.density()[c] *
             (0.5 * w *
              (history_inner(gamma, xi, t + lo, lo) + history_inner(gamma, xi, t + hi, hi)));
      }
    }
    // stochastic convolution, left endpoints
    for (int i = 0; i < j; ++i) v += gamma.eval(t - i * h) * kicks.col(i);
    base.col(j) = v;
  }

  for (int j = 0; j <= n; ++j) path.state(j) = base.col(j);

  if (m.b) {
    // Picard iteration on X(t_j) = base_j + h sum_{i<j} Gamma(t_j - t_i) b(X_{t_i})
    Segment window = xi;
    Eigen::MatrixXd b_vals(d, n);
    bool converged = false;
    for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
      for (int i = 0; i < n; ++i) {
        path.segment_at(i, window);
        b_vals.col(i) = m.b(window);
      }
      double change = 0.0;
      for (int j = 1; j <= n; ++j) {
        Eigen::VectorXd v = base.col(j);
        const double t = j * h;
        for (int i = 0; i < j; ++i) v += h * (gamma.eval(t - i * h) * b_vals.col(i));
        change = std::max(change, (v - path.state(j)).norm());
        path.state(j) = v;
      }
      if (change < opt.picard_tol) {
        converged = true;
        break;
      }
    }
    if (!converged)
      throw std::runtime_error("representation_path: Picard sweeps did not converge");
  }
  return path;
}

}  // namespace fsde::sim
