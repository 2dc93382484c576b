#pragma once

// Euler-Maruyama simulation of segment processes.  Paths live on the grid
// t_j = j h with the initial segment occupying indices -r0/h .. 0; replica i
// of a run always draws from the Gaussian stream (seed, i), which makes every
// Monte Carlo routine deterministic in (seed, h, T) regardless of scheduling.

#include <cstdint>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "fsde/model.hpp"
#include "fsde/rng.hpp"
#include "fsde/segment.hpp"

namespace fsde::sim {

class PathRecord {
 public:
  PathRecord(const Segment& xi, double horizon);

  int dim() const { return d_; }
  double r0() const { return r0_; }
  double h() const { return h_; }
  double horizon() const { return horizon_; }
  int steps() const { return n_steps_; }     // grid points after time 0
  int history() const { return n_hist_; }    // r0 / h

  // state X(j h); j ranges over -history() .. steps()
  auto state(int j) { return x_.col(j + n_hist_); }
  auto state(int j) const { return x_.col(j + n_hist_); }

  // segment X_t at t = j h (requires 0 <= j <= steps())
  Segment segment_at(int j) const;

  // fills a preallocated segment in place; one contiguous block copy
  void segment_at(int j, Segment& out) const {
    out.matrix() = x_.middleCols(j, n_hist_ + 1);
  }

  const Eigen::MatrixXd& data() const { return x_; }

 private:
  int d_, n_hist_, n_steps_;
  double r0_, h_, horizon_;
  Eigen::MatrixXd x_;  // d x (n_hist + n_steps + 1)
};

// single path from initial segment xi; throws on non-finite states
PathRecord simulate(const FsdeModel& m, const Segment& xi, double horizon,
                    std::uint64_t seed, std::uint64_t replica = 0);
PathRecord simulate(const SemiLinearModel& m, const Segment& xi, double horizon,
                    std::uint64_t seed, std::uint64_t replica = 0);

// X from xi and Y from eta driven by the identical Brownian increments
std::pair<PathRecord, PathRecord> simulate_coupled(const FsdeModel& m, const Segment& xi,
                                                   const Segment& eta, double horizon,
                                                   std::uint64_t seed,
                                                   std::uint64_t replica = 0);

// CSV export: t, x_1, ..., x_d
void write_csv(const PathRecord& p, const std::string& path);

}  // namespace fsde::sim
