#include "fsde/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fsde::stats {

Moments moments(const std::vector<double>& x) {
  Moments m;
  m.n = x.size();
  if (m.n == 0) return m;
  double s = 0.0;
  for (double v : x) s += v;
  m.mean = s / static_cast<double>(m.n);
  if (m.n > 1) {
    double ss = 0.0;
    for (double v : x) ss += (v - m.mean) * (v - m.mean);
    m.var = ss / static_cast<double>(m.n - 1);
    m.stderr_ = std::sqrt(m.var / static_cast<double>(m.n));
  }
  return m;
}

double kolmogorov_sf(double k) {
  if (k <= 0.0) return 1.0;
  // alternating series 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 k^2)
  double s = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = 2.0 * std::exp(-2.0 * j * j * k * k);
    s += (j % 2 == 1) ? term : -term;
    if (term < 1e-16) break;
  }
  return std::min(1.0, std::max(0.0, s));
}

KsResult ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf) {
  if (x.size() < 8) throw std::invalid_argument("ks_one_sample: need at least 8 samples");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max(d, (static_cast<double>(i) + 1.0) / n - f);
    d = std::max(d, f - static_cast<double>(i) / n);
  }
  KsResult r;
  r.d = d;
  r.n1 = x.size();
  // Stephens' small-sample correction to the asymptotic distribution
  const double en = std::sqrt(n);
  r.p_value = kolmogorov_sf(d * (en + 0.12 + 0.11 / en));
  return r;
}

KsResult ks_two_sample(std::vector<double> x, std::vector<double> y) {
  if (x.size() < 8 || y.size() < 8)
    throw std::invalid_argument("ks_two_sample: need at least 8 samples per side");
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < x.size() && j < y.size()) {
    const double xi = x[i], yj = y[j];
    if (xi <= yj) ++i;
    if (yj <= xi) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  KsResult r;
  r.d = d;
  r.n1 = x.size();
  r.n2 = y.size();
  const double ne = std::sqrt(nx * ny / (nx + ny));
  r.p_value = kolmogorov_sf(d * (ne + 0.12 + 0.11 / ne));
  return r;
}

TrendResult mann_kendall(const std::vector<double>& x) {
  TrendResult r;
  const std::size_t n = x.size();
  if (n < 4) throw std::invalid_argument("mann_kendall: need at least 4 points");
  long long s = 0;
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (x[j] > x[i]) ++s;
      else if (x[j] < x[i]) --s;
    }
  r.s = s;
  const double var = static_cast<double>(n) * (n - 1.0) * (2.0 * n + 5.0) / 18.0;
  if (s > 0) r.z = (static_cast<double>(s) - 1.0) / std::sqrt(var);
  else if (s < 0) r.z = (static_cast<double>(s) + 1.0) / std::sqrt(var);
  else r.z = 0.0;
  r.increasing_at_1pct = r.z > 2.326;
  return r;
}

LineFit fit_line(const std::vector<double>& t, const std::vector<double>& y,
                 const std::vector<double>& sigma) {
  const std::size_t n = t.size();
  if (n < 2 || y.size() != n || sigma.size() != n)
    throw std::invalid_argument("fit_line: need matching t/y/sigma with n >= 2");
  double sw = 0, swt = 0, swt2 = 0, swy = 0, swty = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 1.0 / (sigma[i] * sigma[i]);
    sw += w;
    swt += w * t[i];
    swt2 += w * t[i] * t[i];
    swy += w * y[i];
    swty += w * t[i] * y[i];
  }
  const double det = sw * swt2 - swt * swt;
  if (det <= 0) throw std::runtime_error("fit_line: degenerate design");
  LineFit f;
  f.slope = (sw * swty - swt * swy) / det;
  f.intercept = (swt2 * swy - swt * swty) / det;
  f.slope_stderr = std::sqrt(sw / det);
  return f;
}

double golden_min(const std::function<double(double)>& f, double lo, double hi,
                  double tol, int max_iter) {
  if (!(lo < hi)) throw std::invalid_argument("golden_min: need lo < hi");
  const double gr = 0.6180339887498948482;
  double a = lo, b = hi;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < max_iter && (b - a) > tol; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace fsde::stats
