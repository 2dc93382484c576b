#pragma once

// Small statistics toolbox used by the verification checks: sample moments,
// Kolmogorov-Smirnov tests, the Mann-Kendall trend test, weighted linear
// least squares, and scalar golden-section optimization.

#include <cstddef>
#include <functional>
#include <vector>

namespace fsde::stats {

struct Moments {
  double mean = 0.0;
  double var = 0.0;     // unbiased sample variance
  double stderr_ = 0.0; // sqrt(var / n)
  std::size_t n = 0;
};

Moments moments(const std::vector<double>& x);

// One-sample Kolmogorov-Smirnov statistic against a continuous CDF, and the
// (Stephens-corrected) asymptotic p-value.
struct KsResult {
  double d = 0.0;
  double p_value = 0.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;  // 0 for one-sample
};

KsResult ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf);
KsResult ks_two_sample(std::vector<double> x, std::vector<double> y);

// Survival function of the Kolmogorov distribution, P(K > k).
double kolmogorov_sf(double k);

// Mann-Kendall test for a monotone trend in an ordered sequence.
// z > 0 indicates an increasing trend; the test is used one-sided.
struct TrendResult {
  long long s = 0;
  double z = 0.0;
  bool increasing_at_1pct = false;  // z > 2.326
};

TrendResult mann_kendall(const std::vector<double>& x);

// Weighted least squares fit y ~ a + b t.  Weights are 1/sigma_i^2.
struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_stderr = 0.0;
};

LineFit fit_line(const std::vector<double>& t, const std::vector<double>& y,
                 const std::vector<double>& sigma);

// Golden-section minimization of a unimodal function on [lo, hi].
double golden_min(const std::function<double(double)>& f, double lo, double hi,
                  double tol = 1e-10, int max_iter = 200);

// Golden-section refinement of a maximum around a bracketing triple.
inline double golden_max(const std::function<double(double)>& f, double lo, double hi,
                         double tol = 1e-10, int max_iter = 200) {
  return golden_min([&](double x) { return -f(x); }, lo, hi, tol, max_iter);
}

}  // namespace fsde::stats
