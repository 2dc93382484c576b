#include "fsde/spectral.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "fsde/stats.hpp"

namespace fsde::spectral {

namespace {

constexpr double kPi = 3.14159265358979323846;

using cplx = std::complex<double>;

double spectral_norm(const Eigen::MatrixXcd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  return svd.singularValues().maxCoeff();
}

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.rows() == 1 && m.cols() == 1) return std::fabs(m(0, 0));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues().maxCoeff();
}

// adjugate via cofactors; adj(Q) Q = det(Q) I even at singular Q, which keeps
// the Newton derivative d det = tr(adj(Q) dQ) usable near roots
Eigen::MatrixXcd adjugate(const Eigen::MatrixXcd& m) {
  const int n = static_cast<int>(m.rows());
  Eigen::MatrixXcd adj(n, n);
  if (n == 1) {
    adj(0, 0) = 1.0;
    return adj;
  }
  Eigen::MatrixXcd minor(n - 1, n - 1);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      int mr = 0;
      for (int i = 0; i < n; ++i) {
        if (i == r) continue;
        int mc = 0;
        for (int j = 0; j < n; ++j) {
          if (j == c) continue;
          minor(mr, mc) = m(i, j);
          ++mc;
        }
        ++mr;
      }
      const double sign = ((r + c) % 2 == 0) ? 1.0 : -1.0;
      adj(c, r) = sign * minor.determinant();  // transpose of the cofactor
    }
  }
  return adj;
}

struct ContourNearRoot {};

// signed argument increment from f0 to f1, principal branch
double arg_delta(cplx f0, cplx f1) { return std::arg(f1 * std::conj(f0)); }

class WindingWalker {
 public:
  explicit WindingWalker(const SignedMatrixMeasure& nu) : nu_(nu) {}

  cplx det_at(cplx z) const {
    const Eigen::MatrixXcd q = char_matrix(nu_, z);
    const cplx det = q.determinant();
    if (!(std::abs(det) > 1e-280)) throw ContourNearRoot{};
    return det;
  }

  // accumulate winding along segment [z0, z1]
  void walk(cplx z0, cplx z1) {
    // base sampling resolves the e^{z theta} oscillation (period 2 pi / r0
    // along the imaginary direction) before adaptive refinement kicks in
    const double len = std::abs(z1 - z0);
    const double osc = std::fabs(std::imag(z1 - z0)) * nu_.r0() / (kPi / 4.0);
    const int n0 = std::min(60000, std::max(16, static_cast<int>(std::ceil(osc + len))));
    cplx za = z0, fa = det_at(z0);
    for (int i = 1; i <= n0; ++i) {
      const cplx zb = z0 + (z1 - z0) * (static_cast<double>(i) / n0);
      const cplx fb = det_at(zb);
      refine(za, fa, zb, fb, 0);
      za = zb;
      fa = fb;
    }
  }

  double total() const { return total_; }

 private:
  void refine(cplx za, cplx fa, cplx zb, cplx fb, int depth) {
    const double d = arg_delta(fa, fb);
    if (std::fabs(d) <= kPi / 2.0) {
      total_ += d;
      return;
    }
    if (depth >= 52 || std::abs(zb - za) < 1e-13 * (1.0 + std::abs(za)))
      throw ContourNearRoot{};  // argument cannot be tracked: root on/near contour
    const cplx zm = 0.5 * (za + zb);
    const cplx fm = det_at(zm);
    refine(za, fa, zm, fm, depth + 1);
    refine(zm, fm, zb, fb, depth + 1);
  }

  const SignedMatrixMeasure& nu_;
  double total_ = 0.0;
};

long long count_roots_once(const SignedMatrixMeasure& nu, double re_lo, double re_hi,
                           double im_lo, double im_hi) {
  WindingWalker w(nu);
  const cplx c1(re_hi, im_lo), c2(re_hi, im_hi), c3(re_lo, im_hi), c4(re_lo, im_lo);
  w.walk(c1, c2);
  w.walk(c2, c3);
  w.walk(c3, c4);
  w.walk(c4, c1);
  const double winding = w.total() / (2.0 * kPi);
  const long long k = std::llround(winding);
  if (std::fabs(winding - static_cast<double>(k)) > 0.1) throw ContourNearRoot{};
  return k;
}

}  // namespace

Eigen::MatrixXcd char_matrix(const SignedMatrixMeasure& nu, cplx z) {
  const int d = nu.dim();
  Eigen::MatrixXcd q = z * Eigen::MatrixXcd::Identity(d, d);
  q -= nu.laplace(z);
  return q;
}

Eigen::MatrixXcd char_matrix_dz(const SignedMatrixMeasure& nu, cplx z) {
  const int d = nu.dim();
  Eigen::MatrixXcd dq = Eigen::MatrixXcd::Identity(d, d);
  for (const auto& at : nu.atoms())
    dq -= (at.theta * std::exp(z * at.theta)) * at.a.cast<cplx>();
  if (nu.has_density()) {
    const double w = nu.density_cell_width();
    for (std::size_t c = 0; c < nu.density().size(); ++c) {
      const double lo = -nu.r0() + c * w;
      const double hi = lo + w;
      const cplx weight = 0.5 * w * (lo * std::exp(z * lo) + hi * std::exp(z * hi));
      dq -= weight * nu.density()[c].cast<cplx>();
    }
  }
  return dq;
}

long long count_roots(const SignedMatrixMeasure& nu, double re_lo, double re_hi,
                      double im_lo, double im_hi) {
  const double scale = std::max({1.0, re_hi - re_lo, im_hi - im_lo});
  for (int attempt = 0; attempt < 6; ++attempt) {
    const double jitter = 3.1e-9 * scale * attempt * attempt;
    try {
      return count_roots_once(nu, re_lo - jitter, re_hi + 0.7 * jitter,
                              im_lo - 1.3 * jitter, im_hi + jitter);
    } catch (const ContourNearRoot&) {
      continue;  // a root (near) the contour; nudge the box and retry
    }
  }
  throw std::runtime_error("count_roots: winding number failed to stabilize");
}

namespace {

// Newton polish of det Q(z) = 0 from a seed; tolerant of multiple roots
// (linear convergence there, hence the generous iteration budget)
bool newton_polish(const SignedMatrixMeasure& nu, cplx& z) {
  for (int it = 0; it < 400; ++it) {
    const Eigen::MatrixXcd q = char_matrix(nu, z);
    const cplx det = q.determinant();
    const Eigen::MatrixXcd adj = adjugate(q);
    const cplx ddet = (adj * char_matrix_dz(nu, z)).trace();
    if (std::abs(ddet) < 1e-280) return std::abs(det) < 1e-10;
    const cplx step = det / ddet;
    z -= step;
    if (std::abs(step) < 1e-14 * (1.0 + std::abs(z))) return true;
  }
  return std::abs(char_matrix(nu, z).determinant()) < 1e-8;
}

}  // namespace

CharRootResult lambda0(const SignedMatrixMeasure& nu, double tol, double re_limit) {
  CharRootResult res;
  const double nrm = nu.tv_norm();
  if (re_limit <= 0.0) re_limit = 10.0 * (nrm + 1.0);

  // delay-free special case nu = A delta_0: Q(z) = z I - A, so the
  // characteristic roots are exactly the eigenvalues of A
  if (nu.atoms().size() == 1 && nu.atoms()[0].theta == 0.0 && !nu.has_density()) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(nu.atoms()[0].a);
    int best = 0;
    for (int i = 1; i < es.eigenvalues().size(); ++i)
      if (es.eigenvalues()(i).real() > es.eigenvalues()(best).real()) best = i;
    res.lambda0 = es.eigenvalues()(best).real();
    res.witness = es.eigenvalues()(best);
    res.witness_polished = true;
    res.converged = true;
    res.search_floor = -re_limit;
    return res;
  }

  const double x_right = nrm + 1.0 + 1e-6;
  auto box_height = [&](double x) {
    return std::exp(nu.r0() * std::max(0.0, -x)) * nrm + 1.0371;
  };
  auto strip_count = [&](double x) {
    const double y = box_height(x);
    const long long c = count_roots(nu, x, x_right, -y, y);
    res.counts.push_back({x, x_right, -y, y, c});
    return c;
  };

  // march left until the strip [x, x_right] holds a root
  double hi = x_right, lo = x_right;
  bool found = false;
  for (double step = 1.0; lo > -re_limit; step *= 2.0) {
    hi = lo;
    lo = x_right - step;
    if (lo < -re_limit) lo = -re_limit;
    if (strip_count(lo) >= 1) {
      found = true;
      break;
    }
  }
  if (!found) {
    res.converged = false;
    res.search_floor = -re_limit;
    res.lambda0 = std::numeric_limits<double>::quiet_NaN();
    return res;
  }

  // bisection: strip_count(x) >= 1 iff x <= lambda0
  while (hi - lo > 0.5 * tol) {
    const double mid = 0.5 * (lo + hi);
    if (strip_count(mid) >= 1) lo = mid;
    else hi = mid;
  }
  const double mid = 0.5 * (lo + hi);
  res.lambda0 = mid;
  res.converged = true;
  res.search_floor = -re_limit;

  // Newton-polished witness, seeded from a |det| scan over the strip
  {
    const double y_top = box_height(lo);
    const int nx = 24;
    const int ny = std::min(4000, std::max(32, static_cast<int>(y_top * nu.r0() * 8.0)));
    double best = std::numeric_limits<double>::infinity();
    cplx seed(mid, 0.0);
    for (int i = 0; i <= nx; ++i) {
      const double x = lo - 4.0 * tol + (hi - lo + 8.0 * tol) * i / nx;
      for (int j = 0; j <= ny; ++j) {
        const cplx z(x, y_top * j / ny);
        const double a = std::abs(char_matrix(nu, z).determinant());
        if (a < best) {
          best = a;
          seed = z;
        }
      }
    }
    cplx z = seed;
    if (newton_polish(nu, z) && std::fabs(z.real() - mid) <= std::max(tol, 1e-7)) {
      res.witness = z;
      res.witness_polished = true;
      res.lambda0 = z.real();
    } else {
      res.witness = seed;
      res.witness_polished = false;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// fundamental solution
// ---------------------------------------------------------------------------

Eigen::MatrixXd GammaTable::eval(double s) const {
  const int d = static_cast<int>(entries_[0].rows());
  if (s < -1e-12) return Eigen::MatrixXd::Zero(d, d);
  const double pos = std::max(0.0, s) / h_;
  const auto last = static_cast<double>(entries_.size() - 1);
  if (pos > last + 1e-9)
    throw std::invalid_argument("GammaTable::eval: s beyond tabulated horizon");
  std::size_t j = static_cast<std::size_t>(std::min(pos, last));
  double w = pos - static_cast<double>(j);
  if (j >= entries_.size() - 1) {
    j = entries_.size() - 1;
    w = 0.0;
  }
  if (w < 1e-9) return entries_[j];
  if (w > 1.0 - 1e-9) return entries_[j + 1];
  return (1.0 - w) * entries_[j] + w * entries_[j + 1];
}

double GammaTable::norm(std::size_t j) const {
  if (norms_.empty()) norms_.assign(entries_.size(), -1.0);
  if (norms_[j] < 0.0) norms_[j] = spectral_norm(entries_[j]);
  return norms_[j];
}

GammaTable gamma_solve(const SignedMatrixMeasure& nu, double horizon, double h) {
  const int d = nu.dim();
  const double steps_r0 = nu.r0() / h;
  const int n_r0 = static_cast<int>(steps_r0 + 0.5);
  if (std::fabs(steps_r0 - n_r0) > 1e-9 * steps_r0)
    throw std::invalid_argument("gamma_solve: h must divide r0");
  const int n = static_cast<int>(horizon / h + 0.5);
  if (n < 1) throw std::invalid_argument("gamma_solve: horizon too short");

  std::vector<Eigen::MatrixXd> g;
  g.reserve(n + 1);
  g.push_back(Eigen::MatrixXd::Identity(d, d));

  auto read = [&](double s) -> Eigen::MatrixXd {
    if (s < -1e-12) return Eigen::MatrixXd::Zero(d, d);
    const double pos = std::max(0.0, s) / h;
    const auto j = static_cast<std::size_t>(pos);
    const double w = pos - static_cast<double>(j);
    if (w < 1e-9 || j + 1 >= g.size()) return g[std::min(j, g.size() - 1)];
    return (1.0 - w) * g[j] + w * g[j + 1];
  };

  for (int j = 0; j < n; ++j) {
    const double t = j * h;
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(d, d);
    for (const auto& at : nu.atoms()) s += at.a * read(t + at.theta);
    if (nu.has_density()) {
      const double w = nu.density_cell_width();
      for (std::size_t c = 0; c < nu.density().size(); ++c) {
        const double lo = -nu.r0() + c * w;
        const double hi = lo + w;
        s += nu.density()[c] * (0.5 * w * (read(t + lo) + read(t + hi)));
      }
    }
    g.push_back(g.back() + h * s);
  }
  return GammaTable(nu.r0(), h, std::move(g));
}

Eigen::MatrixXd gamma_fourier(const SignedMatrixMeasure& nu, double lambda, double t,
                              double theta_max, int n_grid) {
  if (!(t > 0.0)) throw std::invalid_argument("gamma_fourier: need t > 0");
  if (!(theta_max > 0.0) || n_grid < 8)
    throw std::invalid_argument("gamma_fourier: bad quadrature parameters");
  const CharRootResult root = lambda0(nu, 1e-9);
  if (!root.converged || !(lambda > root.lambda0 + 1e-10))
    throw std::invalid_argument("gamma_fourier: need lambda > lambda0");
  const double l0 = root.lambda0;
  const int d = nu.dim();
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(d, d);

  // trapezoid over [0, theta_max]; the negative half is the complex conjugate
  const double dth = theta_max / n_grid;
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(d, d);
  for (int i = 0; i <= n_grid; ++i) {
    const double th = i * dth;
    const cplx z(lambda, th);
    const Eigen::MatrixXcd g = char_matrix(nu, z).inverse() - id / (z - l0);
    const double w = (i == 0 || i == n_grid) ? 0.5 : 1.0;
    acc += (w * std::exp(cplx(0.0, t * th))) * g;
  }
  const Eigen::MatrixXd integral = (std::exp(lambda * t) / kPi) * (dth * acc).real();
  return integral + std::exp(l0 * t) * Eigen::MatrixXd::Identity(d, d);
}

Eigen::MatrixXd gamma_fourier_auto(const SignedMatrixMeasure& nu, double lambda, double t,
                                   double tol) {
  const CharRootResult root = lambda0(nu, 1e-9);
  if (!root.converged || !(lambda > root.lambda0 + 1e-10))
    throw std::invalid_argument("gamma_fourier_auto: need lambda > lambda0");
  const double k = std::exp(nu.r0() * std::max(0.0, -lambda)) * nu.tv_norm();
  // ||G(theta)|| <= 2(|lambda0| + K)/theta^2 for |theta| >= 2K gives the tail
  const double tail_c = 2.0 * (std::fabs(root.lambda0) + k);
  double theta_max = 2.0 * tail_c * std::max(1.0, std::exp(lambda * t)) / (kPi * 0.5 * tol);
  theta_max = std::max(theta_max, 4.0 * k + 1.0);
  // resolve the e^{i t theta} oscillation and the resolvent scale
  const double dth = std::min(2.0 * kPi / (48.0 * std::max(t, 0.25)), 0.45e-2 * (1.0 + k));
  const int n = static_cast<int>(std::min(4.0e6, std::max(4096.0, theta_max / dth)));
  return gamma_fourier(nu, lambda, t, theta_max, n);
}

CkResult ck_empirical(const GammaTable& gamma, double k) {
  CkResult r;
  r.horizon = gamma.horizon();
  r.ck = 0.0;
  for (std::size_t j = 0; j < gamma.size(); ++j) {
    const double v = gamma.norm(j) * std::exp(k * (gamma.h() * static_cast<double>(j)));
    if (v > r.ck) {
      r.ck = v;
      r.t_at_max = gamma.h() * static_cast<double>(j);
    }
  }
  return r;
}

PpBound pp_bound(const SignedMatrixMeasure& nu, double lambda, int rho_grid) {
  PpBound b;
  const CharRootResult root = lambda0(nu, 1e-9);
  if (!root.converged) throw std::runtime_error("pp_bound: lambda0 search failed");
  if (!(lambda > root.lambda0) || !(lambda < 0.0))
    throw std::invalid_argument("pp_bound: need lambda in (lambda0, 0)");
  b.lambda = lambda;
  b.lambda0 = root.lambda0;
  b.nu_norm = nu.tv_norm();
  if (!(b.nu_norm > 0.0)) throw std::invalid_argument("pp_bound: need a nonzero measure");
  const double k = std::exp(nu.r0() * std::max(0.0, -lambda)) * b.nu_norm;
  b.t_lambda = 2.0 * k;

  const int d = nu.dim();
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(d, d);
  auto g_norm = [&](double th) {
    const cplx z(lambda, th);
    const Eigen::MatrixXcd g = char_matrix(nu, z).inverse() - id / (z - b.lambda0);
    return spectral_norm(g);
  };

  // coarse max over [0, t_lambda] (G has conjugate-symmetric norm), then
  // golden-section refinement around the argmax
  double best = 0.0, best_th = 0.0;
  for (int i = 0; i < rho_grid; ++i) {
    const double th = b.t_lambda * i / (rho_grid - 1.0);
    const double v = g_norm(th);
    if (v > best) {
      best = v;
      best_th = th;
    }
  }
  if (best > 0.0) {
    const double span = b.t_lambda / (rho_grid - 1.0);
    const double lo = std::max(0.0, best_th - span);
    const double hi = std::min(b.t_lambda, best_th + span);
    const double th_ref = stats::golden_max(g_norm, lo, hi, 1e-12 * b.t_lambda);
    best = std::max(best, g_norm(th_ref));
  }
  b.rho_lambda = best;

  const double gap = lambda - b.lambda0;
  b.arc_term = (gap + 1.0) * kPi / gap;
  b.tail_term = 4.0 * (std::fabs(b.lambda0) + k) / b.t_lambda;
  b.mid_term = 2.0 * b.rho_lambda * b.t_lambda;
  b.prefactor = b.arc_term + b.tail_term + b.mid_term;
  return b;
}

}  // namespace fsde::spectral
