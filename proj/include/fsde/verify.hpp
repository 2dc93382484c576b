#pragma once

// Monte Carlo verification of the certified inequalities.  Every check is
// deterministic given (seed, grid, budget): replica i draws from Gaussian
// stream (seed, i) (side streams are derived by hashing), and reductions run
// in replica order.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fsde/certify.hpp"
#include "fsde/coupling.hpp"
#include "fsde/simulate.hpp"
#include "fsde/stats.hpp"

namespace fsde::verify {

// ---- pathwise contraction of synchronous couplings ----
// ||X_t - Y_t||^2 <= ||xi - eta||^2 e^{lambda1 r0 - lambda t} (1 + slack),
// slack = 10 h (lambda1 + lambda2 + 1), lambda from the rate certificate.
struct ContractionResult {
  bool pass = false;
  int violations = 0;
  int replicas = 0;
  double worst_ratio = 0.0;  // max over replicas/time of LHS / RHS
  double worst_t = 0.0;
  double slack = 0.0;
  double lambda = 0.0, lambda1 = 0.0, lambda2 = 0.0;
};

ContractionResult check_contraction(const FsdeModel& m, const DissipativityCert& cert,
                                    const Segment& xi, const Segment& eta, double horizon,
                                    int n, std::uint64_t seed);

// ---- exponential moments of the stationary segment ----
// estimates E exp(eps ||X_t||^2) along t_grid for the largest ladder eps that
// stays finite; passes when the Mann-Kendall trend is not increasing at 1%.
struct ExpMomentResult {
  bool pass = false;
  double eps = 0.0;
  double trend_z = 0.0;
  std::vector<double> t_grid;
  std::vector<double> estimates;
  std::vector<double> stderrs;
  std::vector<double> eps_rejected;  // overflowed rungs
};

ExpMomentResult check_exp_moment(const FsdeModel& m, const Segment& xi,
                                 const std::vector<double>& eps_ladder,
                                 const std::vector<double>& t_grid, int n,
                                 std::uint64_t seed);

// ---- test functionals (strictly positive, bounded) ----
struct TestFunctional {
  std::string name;
  std::function<double(const Segment&)> f;
};

std::vector<TestFunctional> default_functionals(int d, double r0);

// ---- Harnack inequality (P_{t+r0} f(eta))^p <= P_{t+r0} f^p(xi) e^{Phi} ----
struct HarnackResult {
  bool pass = false;
  std::string functional;
  double p = 0.0, delta = 0.0, t = 0.0;
  double exponent = 0.0;      // Phi
  double lhs = 0.0, lhs_stderr = 0.0;
  double rhs = 0.0, rhs_stderr = 0.0;
  int n = 0;
};

HarnackResult check_harnack(const FsdeModel& m, const TestFunctional& f,
                            const certify::HarnackParams& hp, const Segment& xi,
                            const Segment& eta, int n, std::uint64_t seed);

// ---- Girsanov density diagnostics on the coupling ----
struct GirsanovResult {
  bool pass = false;
  int n = 0;
  // (i) martingale property E R = 1
  double mean_r = 0.0, stderr_r = 0.0;
  bool r_pass = false;
  // (ii) moment bound E R^{p/(p-1)} <= exp(nw2 exponent)
  double mean_rq = 0.0, stderr_rq = 0.0, rq_bound = 0.0;
  bool rq_pass = false;
  // (iii) transfer identity E R f(X_{t+r0}) = E f(Y^eta_{t+r0})
  double weighted = 0.0, weighted_stderr = 0.0;
  double plain = 0.0, plain_stderr = 0.0;
  bool identity_pass = false;
  // coupling-time and envelope diagnostics
  double tau_max = 0.0;
  bool tau_pass = false;
  double envelope_excess = 0.0, envelope_slack = 0.0;
  bool envelope_pass = false;
};

GirsanovResult check_girsanov_moments(const FsdeModel& m, const TestFunctional& f,
                                      const certify::HarnackParams& hp, const Segment& xi,
                                      const Segment& eta, int n, std::uint64_t seed);

// ---- ensembles approximating the invariant segment law ----
struct InvariantEnsemble {
  double r0 = 0.0, h = 0.0;
  double burn_in = 0.0, spacing = 0.0;
  std::vector<Segment> segments;
};

// one long run from the zero segment; segments harvested every `spacing`
// after `burn_in` (spacing >= r0 enforced)
InvariantEnsemble sample_invariant(const FsdeModel& m, int n, double burn_in,
                                   double spacing, double h, std::uint64_t seed);

// independent replicas restarted at xi, harvested at t = r0: a deliberately
// non-stationary ensemble for negative controls
InvariantEnsemble restart_ensemble(const FsdeModel& m, const Segment& xi, int n,
                                   std::uint64_t seed);

// ---- one-sample KS of the endpoint marginal against a known law ----
struct KsCheckResult {
  bool pass = false;
  double d = 0.0, p_value = 0.0, level = 0.01;
  std::size_t n = 0;
};

KsCheckResult check_endpoint_law(const InvariantEnsemble& ens, int coordinate,
                                 const std::function<double(double)>& cdf,
                                 double level = 0.01);

// ---- stationarity via shift-invariance of segment marginals ----
// two-sample KS between the theta = 0 marginal and each theta in the grid,
// per coordinate, Bonferroni at level/(#tests)
struct ShiftInvarianceResult {
  bool pass = false;
  double threshold = 0.0;
  std::vector<double> thetas;
  std::vector<double> p_values;  // per (theta, coordinate), coordinate-major
};

ShiftInvarianceResult check_shift_invariance(const InvariantEnsemble& ens,
                                             const std::vector<double>& thetas,
                                             double level = 0.01);

// ---- memory pass-through: f(X_t) = g(X(t - r0)) is deterministic for t <= r0 ----
struct MemoryPassthroughResult {
  bool pass = false;
  std::vector<double> t_checked;
  bool exact = false;          // all replicas bit-identical to g(xi(t - r0))
  double late_variance = 0.0;  // sample variance at t = r0 + h (must be > 0)
};

MemoryPassthroughResult check_memory_passthrough(const FsdeModel& m, const Segment& xi,
                                                 int n, std::uint64_t seed);

// ---- L2 spectral-gap decay: Var_mu(P_t f) <= e^{-lambda t} Var_mu(f) ----
using ConditionalKernel = std::function<double(const Segment&, double)>;  // P_t f (xi)

struct DecayResult {
  bool pass = false;
  bool inconclusive = false;  // noise floor; monotone-decay fallback applied
  double fitted_rate = 0.0, rate_stderr = 0.0, lambda = 0.0;
  std::vector<double> t_grid, variances, variance_stderrs;
  bool used_oracle = false;
};

DecayResult check_l2_decay(const FsdeModel& m, const InvariantEnsemble& ens,
                           const TestFunctional& f, const std::vector<double>& t_grid,
                           double lambda, int n_inner, std::uint64_t seed,
                           const ConditionalKernel& oracle = nullptr);

// ---- hypercontractivity-flavoured moment bound mu((P_t f)^4) <= mu(f^2)^2 ----
struct HyperboundResult {
  bool pass = false;
  double t = 0.0;
  double lhs = 0.0, lhs_stderr = 0.0;
  double rhs = 0.0, rhs_stderr = 0.0;
  bool used_oracle = false;
};

HyperboundResult check_hyperbound(const FsdeModel& m, const InvariantEnsemble& ens,
                                  const TestFunctional& f, double t, int n_inner,
                                  std::uint64_t seed,
                                  const ConditionalKernel& oracle = nullptr);

// ---- restart coupling: a path restarted from xi at time t2 - t1 stays within
//      the contraction envelope of the original at time t2 ----
struct RestartResult {
  bool pass = false;
  int violations = 0, replicas = 0;
  double worst_ratio = 0.0;
  double slack = 0.0;
};

RestartResult check_restart_coupling(const FsdeModel& m, const DissipativityCert& cert,
                                     const Segment& xi, double t1, double t2, int n,
                                     std::uint64_t seed);

// ---- total-variation bound along the contraction ----
// couples synchronously to time t, then runs the Girsanov coupling from the
// time-t segments; 2 E|R - 1| bounds the TV distance of the laws at
// t + hp.t + r0, and should decay at rate ~ lambda/2 in t
struct TvResult {
  bool decay_pass = false;
  bool moment_pass = false;  // E R^2 <= E exp(nw2 exponent at the live pair)
  bool inconclusive = false;
  double fitted_rate = 0.0, rate_stderr = 0.0, lambda = 0.0;
  std::vector<double> t_grid, bound, bound_stderr;
};

TvResult tv_bound_estimate(const FsdeModel& m, const DissipativityCert& cert,
                           const certify::HarnackParams& hp, const Segment& xi,
                           const Segment& eta, const std::vector<double>& t_grid, int n,
                           std::uint64_t seed);

}  // namespace fsde::verify
