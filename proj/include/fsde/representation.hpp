#pragma once

// Path reconstruction through the fundamental solution: for the semi-linear
// equation dX = {int nu(dtheta) X(t+theta) + b(X_t)} dt + sigma dB,
//
//   X(t) = Gamma(t) xi(0)
//        + int nu(dtheta) int_theta^0 Gamma(t + theta - s) xi(s) ds
//        + int_0^t Gamma(t - s) b(X_s) ds
//        + int_0^t Gamma(t - s) sigma dB(s),
//
// evaluated on the simulation grid with the same Brownian increments as
// simulate(m, xi, ...), so the two paths agree at O(h).  The memory integral
// with b is solved by Picard iteration on the grid.

#include <cstdint>

#include "fsde/simulate.hpp"
#include "fsde/spectral.hpp"

namespace fsde::sim {

struct RepresentationOptions {
  double picard_tol = 1e-10;
  int max_sweeps = 50;
};

PathRecord representation_path(const SemiLinearModel& m, const Segment& xi, double horizon,
                               const spectral::GammaTable& gamma, std::uint64_t seed,
                               std::uint64_t replica = 0,
                               const RepresentationOptions& opt = {});

}  // namespace fsde::sim
