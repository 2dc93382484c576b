#include "fsde/coupling.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace fsde::sim {

namespace {

// int_0^t e^{2 k1 u} du, exact at k1 = 0
double control_normalizer(double k1, double t) {
  if (k1 == 0.0) return t;
  return std::expm1(2.0 * k1 * t) / (2.0 * k1);
}

}  // namespace

double control_g(double k1, double delta0, double t, double s) {
  if (!(t > 0.0)) throw std::invalid_argument("control_g: need t > 0");
  if (s < 0.0 || s > t) throw std::invalid_argument("control_g: need s in [0, t]");
  return delta0 * std::exp(k1 * s) / control_normalizer(k1, t);
}

double coupling_envelope(double k1, double delta0, double t, double s) {
  if (!(t > 0.0)) throw std::invalid_argument("coupling_envelope: need t > 0");
  if (s < 0.0 || s > t) throw std::invalid_argument("coupling_envelope: need s in [0, t]");
  if (k1 == 0.0) return delta0 * (t - s) / t;
  return delta0 * std::exp(k1 * s) * std::expm1(2.0 * k1 * (t - s)) /
         std::expm1(2.0 * k1 * t);
}

CouplingRun girsanov_coupling(const FsdeModel& m, const Segment& xi, const Segment& eta,
                              double t, std::uint64_t seed, std::uint64_t replica,
                              bool keep_schedules) {
  if (!m.lipschitz) throw std::invalid_argument("girsanov_coupling: model needs a Lipschitz certificate");
  if (!(t > 0.0)) throw std::invalid_argument("girsanov_coupling: need t > 0");
  xi.require_same_grid(eta);
  const double h = xi.h();
  const int n_ctrl = static_cast<int>(t / h + 0.5);
  if (std::fabs(n_ctrl * h - t) > 1e-9 * t || n_ctrl < 1)
    throw std::invalid_argument("girsanov_coupling: t must be a multiple of h");
  const double k1 = m.lipschitz->k1;
  const double horizon = t + m.r0;

  CouplingRun run{PathRecord(xi, horizon), PathRecord(eta, horizon)};
  run.t = t;
  run.k1 = k1;
  const Eigen::VectorXd diff0 = xi.node(xi.grid_size() - 1) - eta.node(eta.grid_size() - 1);
  const double delta0 = diff0.norm();
  run.delta0 = delta0;
  const double snap_tol = std::max(1e-12, 1e-8 * delta0);

  const Eigen::MatrixXd sigma_inv = m.sigma.inverse();
  const double sqh = std::sqrt(h);
  GaussianStream gs(seed, replica);

  PathRecord& px = run.x;
  PathRecord& py = run.y;
  const int n_steps = px.steps();
  Segment wx = xi, wy = eta;
  Eigen::VectorXd noise(m.d), kick(m.d), diff(m.d), prev_diff(m.d), hvec(m.d), ctrl(m.d);

  bool coupled = false;
  run.tau = horizon;
  prev_diff.setZero();

  for (int j = 0; j < n_steps; ++j) {
    const double s = j * h;
    px.segment_at(j, wx);
    py.segment_at(j, wy);

    if (!coupled) {
      diff = px.state(j) - py.state(j);
      const double dist = diff.norm();
      // coupling-time rules: proximity, overshoot through zero, horizon
      const bool reversed = j > 0 && diff.dot(prev_diff) < 0.0;
      const bool at_horizon = s >= t - 1e-12 * t;
      if (dist <= snap_tol || reversed || at_horizon) {
        coupled = true;
        run.tau = s;
        run.forced_snap = at_horizon && dist > snap_tol && !reversed;
        run.snap_gap = dist;
        py.state(j) = px.state(j);
        py.segment_at(j, wy);
      } else {
        const double env = coupling_envelope(k1, delta0, t, s);
        run.max_envelope_excess = std::max(run.max_envelope_excess, dist - env);
      }
      prev_diff = diff;
    }

    const Eigen::VectorXd bx = m.b_at(wx);
    const Eigen::VectorXd by = m.b_at(wy);
    gs.gauss_fill(noise);
    kick.noalias() = sqh * (m.sigma * noise);

    if (!coupled) {
      const double dist = diff.norm();
      const double g = control_g(k1, delta0, t, s);
      ctrl = (g / dist) * diff;
      hvec.noalias() = sigma_inv * (ctrl + bx - by);
      px.state(j + 1) = px.state(j) + h * (m.z_at(px.state(j)) + bx) + kick;
      py.state(j + 1) = py.state(j) + h * (m.z_at(py.state(j)) + bx + ctrl) + kick;
      if (keep_schedules) run.g_sched.push_back(g);
    } else {
      hvec.noalias() = sigma_inv * (bx - by);
      px.state(j + 1) = px.state(j) + h * (m.z_at(px.state(j)) + bx) + kick;
      py.state(j + 1) = px.state(j + 1);
    }

    const double hsq = hvec.squaredNorm();
    run.log_r -= sqh * hvec.dot(noise) + 0.5 * h * hsq;
    run.int_h_sq += h * hsq;
    if (keep_schedules) run.h_sq.push_back(hsq);

    if (!px.state(j + 1).allFinite() || !py.state(j + 1).allFinite() ||
        !std::isfinite(run.log_r))
      throw std::runtime_error("girsanov_coupling: blow-up at t = " +
                               std::to_string((j + 1) * h));
  }
  run.r = std::exp(run.log_r);
  return run;
}

void write_csv(const CouplingRun& run, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);
  out << "t,dist,envelope,g,h_sq\n";
  out.precision(17);
  const double h = run.x.h();
  for (int j = 0; j <= run.x.steps(); ++j) {
    const double s = j * h;
    const double dist = (run.x.state(j) - run.y.state(j)).norm();
    const double env =
        s <= run.t ? coupling_envelope(run.k1, run.delta0, run.t, s) : 0.0;
    out << s << "," << dist << "," << env << ","
        << (j < static_cast<int>(run.g_sched.size()) ? run.g_sched[j] : 0.0) << ","
        << (j < static_cast<int>(run.h_sq.size()) ? run.h_sq[j] : 0.0) << "\n";
  }
}

}  // namespace fsde::sim
