#include "fsde/certify.hpp"

#include <cmath>
#include <stdexcept>

#include "fsde/stats.hpp"

namespace fsde::certify {

RateResult rate_thm11(double lambda1, double lambda2, double r0) {
  if (lambda1 < 0.0 || lambda2 < 0.0 || r0 <= 0.0)
    throw std::invalid_argument("rate_thm11: need lambda1, lambda2 >= 0 and r0 > 0");
  RateResult res;
  auto phi = [&](double s) { return s - lambda2 * std::exp(r0 * s); };

  if (lambda2 == 0.0) {
    res.s_star = lambda1;
  } else {
    // phi is concave; stationary point at s = ln(1/(lambda2 r0))/r0
    const double s_stat = std::log(1.0 / (lambda2 * r0)) / r0;
    res.s_star = std::min(lambda1, std::max(0.0, s_stat));
  }
  res.lambda = phi(res.s_star);
  res.applicable = res.lambda > 0.0;

  // guard the closed form against a dense grid scan of the objective
  if (lambda1 > 0.0) {
    double grid_best = phi(0.0);
    for (int i = 1; i <= 10000; ++i) {
      const double v = phi(lambda1 * i / 10000.0);
      if (v > grid_best) grid_best = v;
    }
    if (grid_best > res.lambda + 1e-7 * (1.0 + std::fabs(res.lambda)))
      throw std::logic_error("rate_thm11: closed form disagrees with grid scan");
  }
  return res;
}

Cor12Result check_cor12(double k1, double k2, double r0) {
  if (!(k1 > 0.0) || k2 < 0.0 || !(r0 > 0.0))
    throw std::invalid_argument("check_cor12: need k1 > 0, k2 >= 0, r0 > 0");
  Cor12Result res;
  const double w = std::sqrt(k1 * k1 * r0 * r0 + 1.0);
  res.threshold = 2.0 * (w - 1.0) / (r0 * r0) * std::exp(w - 1.0 - k1 * r0);
  res.margin = res.threshold - k2 * k2;
  res.s0 = (k1 * r0 + w - 1.0) / r0;
  res.lambda = r0 / (k1 * r0 - 1.0 + w) *
               (2.0 * (w - 1.0) / (r0 * r0) - k2 * k2 * std::exp(1.0 + k1 * r0 - w));
  res.lambda1 = 2.0 * k1 - res.s0;
  res.lambda2 = (k2 == 0.0) ? 0.0 : k2 * k2 / res.s0;
  res.applicable = res.margin > 0.0;

  // consistency: the closed form must match the rate of the induced
  // dissipativity pair at s0
  if (res.applicable) {
    const double via_pair = res.lambda1 - res.lambda2 * std::exp(r0 * res.lambda1);
    if (std::fabs(via_pair - res.lambda) > 1e-9 * (1.0 + std::fabs(res.lambda)))
      throw std::logic_error("check_cor12: closed form inconsistent with (lambda1, lambda2)");
  }
  return res;
}

Thm13Result rate_thm13(const SignedMatrixMeasure& nu, double k2, const Thm13Options& opt) {
  if (k2 < 0.0) throw std::invalid_argument("rate_thm13: need k2 >= 0");
  Thm13Result res;
  res.provider = opt.provider;
  const spectral::CharRootResult root = spectral::lambda0(nu, 1e-8);
  if (!root.converged) throw std::runtime_error("rate_thm13: lambda0 search failed");
  res.lambda0 = root.lambda0;
  if (!(root.lambda0 < 0.0)) return res;  // needs a stable linear part

  const double kmax = (1.0 - 1e-3) * (-root.lambda0);
  const double kmin = 1e-4 * (-root.lambda0);
  const int n = std::max(8, opt.grid);

  std::function<double(double)> ck;
  std::optional<spectral::GammaTable> table;
  if (opt.provider == CkProvider::empirical) {
    const double h = opt.h > 0.0 ? opt.h : nu.r0() / 256.0;
    // the sup of ||Gamma|| e^{kt} for k below kmax settles within a few
    // multiples of the spectral gap time scale
    const double horizon =
        opt.horizon > 0.0 ? opt.horizon : std::max(10.0 * nu.r0(), 40.0 / (-root.lambda0));
    table.emplace(spectral::gamma_solve(nu, horizon, h));
    ck = [&](double k) { return spectral::ck_empirical(*table, k).ck; };
  } else {
    ck = [&](double k) { return spectral::pp_bound(nu, -k).prefactor; };
  }

  auto objective = [&](double k) { return k - ck(k) * k2 * std::exp(k * nu.r0()); };

  // log-uniform scan of (0, -lambda0), then golden refinement near the best k
  double best_k = kmin, best_v = objective(kmin);
  for (int i = 1; i < n; ++i) {
    const double k = kmax * std::pow(kmin / kmax, 1.0 - static_cast<double>(i) / (n - 1));
    const double v = objective(k);
    if (v > best_v) {
      best_v = v;
      best_k = k;
    }
  }
  const double lo = best_k * std::pow(kmax / kmin, -1.5 / (n - 1));
  const double hi = std::min(kmax, best_k * std::pow(kmax / kmin, 1.5 / (n - 1)));
  const double k_ref = stats::golden_max(
      [&](double lk) { return objective(std::exp(lk)); }, std::log(std::max(kmin, lo)),
      std::log(hi), 1e-10);
  if (objective(std::exp(k_ref)) > best_v) {
    best_k = std::exp(k_ref);
    best_v = objective(best_k);
  }

  res.lambda = best_v;
  res.k_star = best_k;
  res.ck_at_star = ck(best_k);
  res.applicable = best_v > 0.0;
  return res;
}

namespace {

// stable evaluation of the two k1-dependent factors
//   A(k1, t) = 2 k1 / (e^{2 k1 t} - 1)                   -> 1/t   as k1 -> 0
//   B(k1, t) = (e^{4k1t} - 1 - 4k1t e^{2k1t})
//              / (2k1 (e^{2k1t} - 1)^2)                  -> t/3   as k1 -> 0
// with u = 2 k1 t; the B numerator cancels catastrophically for small u, so
// a series patch (u^3/3 + u^4/3 + ...) / (u^3/t) = t(1/3 - u^2/90 + O(u^4))
// takes over below |u| = 2e-4.
double factor_a(double k1, double t) {
  const double u = 2.0 * k1 * t;
  if (u == 0.0) return 1.0 / t;
  return 2.0 * k1 / std::expm1(u);
}

double factor_b(double k1, double t) {
  const double u = 2.0 * k1 * t;
  if (std::fabs(u) < 2e-4) return t * (1.0 / 3.0 - u * u / 90.0);
  const double em = std::expm1(u);
  return (std::expm1(2.0 * u) - 2.0 * u * std::exp(u)) / ((u / t) * em * em);
}

}  // namespace

double harnack_exponent(const HarnackParams& hp, double k1, double k2,
                        double sigma_inv_norm, double delta0_sq, double sup_sq,
                        double r0) {
  if (!(hp.p > 1.0)) throw std::invalid_argument("harnack_exponent: need p > 1");
  if (!(hp.delta > 0.0)) throw std::invalid_argument("harnack_exponent: need delta > 0");
  if (!(hp.t > 0.0)) throw std::invalid_argument("harnack_exponent: need t > 0");
  if (delta0_sq > sup_sq * (1.0 + 1e-12))
    throw std::invalid_argument("harnack_exponent: need |xi(0)-eta(0)| <= ||xi-eta||");
  const double a = factor_a(k1, hp.t);
  const double b = factor_b(k1, hp.t);
  const double bracket =
      a * delta0_sq + (k2 * k2 / hp.delta) * (r0 * sup_sq + b * delta0_sq);
  const double c =
      hp.p * hp.p * sigma_inv_norm * sigma_inv_norm * (1.0 + hp.delta) / (2.0 * (hp.p - 1.0));
  return c * bracket;
}

double nw2_exponent(const HarnackParams& hp, double k1, double k2,
                    double sigma_inv_norm, double delta0_sq, double sup_sq,
                    double r0) {
  return harnack_exponent(hp, k1, k2, sigma_inv_norm, delta0_sq, sup_sq, r0) /
         (hp.p - 1.0);
}

BestHarnack best_harnack_exponent(double p, double t, double k1, double k2,
                                  double sigma_inv_norm, double delta0_sq,
                                  double sup_sq, double r0) {
  auto value = [&](double log_delta) {
    HarnackParams hp{p, std::exp(log_delta), t};
    return harnack_exponent(hp, k1, k2, sigma_inv_norm, delta0_sq, sup_sq, r0);
  };
  const double ld = stats::golden_min(value, -20.0, 20.0, 1e-10, 300);
  BestHarnack best;
  best.delta = std::exp(ld);
  best.exponent = value(ld);
  return best;
}

}  // namespace fsde::certify
