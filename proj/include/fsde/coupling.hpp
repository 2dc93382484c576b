#pragma once

// Coupling by change of measure.  X solves the model equation from xi.  Y
// starts from eta and follows
//   dY = { Z(Y) + b(X_s) + g(s) (X(s)-Y(s))/|X(s)-Y(s)| } ds + sigma dB
// until the coupling time tau, after which Y(s) = X(s) (their segments still
// differ until tau + r0).  The control
//   g(s) = |xi(0)-eta(0)| e^{k1 s} / int_0^t e^{2 k1 u} du
// forces |X(s)-Y(s)| under the envelope
//   |xi(0)-eta(0)| e^{k1 s} (e^{2k1(t-s)} - 1)/(e^{2k1 t} - 1),
// so tau <= t up to one grid step.  Removing the added drift by Girsanov,
// the density R = exp(-int <h, dB> - 1/2 int |h|^2 ds) with
//   h(s) = sigma^{-1} { 1_{[0,tau)}(s) g(s) u(s) + b(X_s) - b(Y_s) }
// turns Y into a solution from eta, giving the transfer identity
//   P_{t+r0} f(eta) = E[ R f(X_{t+r0}) ].

#include <cstdint>
#include <vector>

#include "fsde/simulate.hpp"

namespace fsde::sim {

// control schedule g(s), s in [0, t]; stable down to and across k1 = 0
double control_g(double k1, double delta0, double t, double s);

// distance envelope above; envelope(t) = 0
double coupling_envelope(double k1, double delta0, double t, double s);

struct CouplingRun {
  PathRecord x, y;
  double t = 0.0;        // control horizon
  double k1 = 0.0;
  double delta0 = 0.0;   // |xi(0) - eta(0)|
  double tau = 0.0;      // coupling time (grid point)
  bool forced_snap = false;  // coupled by the horizon rule rather than proximity
  double snap_gap = 0.0;     // |X - Y| at the moment of snapping
  double log_r = 0.0;        // over [0, t + r0]
  double r = 1.0;
  double int_h_sq = 0.0;     // discrete int |h(s)|^2 ds
  double max_envelope_excess = 0.0;  // max over s < tau of |X-Y|(s) - envelope(s)
  std::vector<double> g_sched = {};  // g at each grid step while uncoupled
  std::vector<double> h_sq = {};     // |h(s_j)|^2 per step
};

// Requires m.lipschitz (k1 for the control, k2 only through b itself).
// The distance-snap tolerance is max(1e-12, 1e-8 |xi(0)-eta(0)|); a snap is
// also declared when the displacement reverses direction across a step
// (the control overshot zero) and, at the latest, at the first grid point
// >= t, which keeps tau <= t + h always.
CouplingRun girsanov_coupling(const FsdeModel& m, const Segment& xi, const Segment& eta,
                              double t, std::uint64_t seed, std::uint64_t replica = 0,
                              bool keep_schedules = false);

void write_csv(const CouplingRun& run, const std::string& path);

}  // namespace fsde::sim
