#include "fsde/simulate.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace fsde::sim {

PathRecord::PathRecord(const Segment& xi, double horizon)
    : d_(xi.dim()), r0_(xi.r0()), h_(xi.h()), horizon_(horizon) {
  n_hist_ = xi.grid_size() - 1;
  const double steps = horizon / h_;
  n_steps_ = static_cast<int>(steps + 0.5);
  if (n_steps_ < 1 || std::fabs(steps - n_steps_) > 1e-9 * std::max(1.0, steps))
    throw std::invalid_argument("PathRecord: horizon must be a multiple of h");
  x_.setZero(d_, n_hist_ + n_steps_ + 1);
  x_.leftCols(n_hist_ + 1) = xi.matrix();
}

Segment PathRecord::segment_at(int j) const {
  if (j < 0 || j > n_steps_) throw std::invalid_argument("segment_at: index out of range");
  return Segment(r0_, h_, x_.middleCols(j, n_hist_ + 1));
}

namespace {

// shared stepping core; Drift is any callable Segment -> VectorXd
template <typename Drift>
PathRecord run_euler(int d, double r0, const Drift& drift, const Eigen::MatrixXd& sigma,
                     const Segment& xi, double horizon, std::uint64_t seed,
                     std::uint64_t replica) {
  if (xi.dim() != d) throw std::invalid_argument("simulate: segment dimension mismatch");
  if (std::fabs(xi.r0() - r0) > 1e-12 * r0)
    throw std::invalid_argument("simulate: segment r0 differs from model r0");
  PathRecord path(xi, horizon);
  const double h = path.h();
  const double sqh = std::sqrt(h);
  GaussianStream gs(seed, replica);

  Segment window = xi;  // reused buffer for the rolling segment
  Eigen::VectorXd noise(d);
  for (int j = 0; j < path.steps(); ++j) {
    path.segment_at(j, window);
    gs.gauss_fill(noise);
    path.state(j + 1) = path.state(j) + h * drift(window) + sqh * (sigma * noise);
    if (!path.state(j + 1).allFinite())
      throw std::runtime_error("simulate: state blew up at t = " +
                               std::to_string((j + 1) * h));
  }
  return path;
}

}  // namespace

PathRecord simulate(const FsdeModel& m, const Segment& xi, double horizon,
                    std::uint64_t seed, std::uint64_t replica) {
  return run_euler(
      m.d, m.r0, [&](const Segment& s) { return m.drift(s); }, m.sigma, xi, horizon, seed,
      replica);
}

PathRecord simulate(const SemiLinearModel& m, const Segment& xi, double horizon,
                    std::uint64_t seed, std::uint64_t replica) {
  return run_euler(
      m.dim(), m.r0(), [&](const Segment& s) { return m.drift(s); }, m.sigma, xi, horizon,
      seed, replica);
}

std::pair<PathRecord, PathRecord> simulate_coupled(const FsdeModel& m, const Segment& xi,
                                                   const Segment& eta, double horizon,
                                                   std::uint64_t seed,
                                                   std::uint64_t replica) {
  xi.require_same_grid(eta);
  PathRecord px(xi, horizon), py(eta, horizon);
  const double h = px.h();
  const double sqh = std::sqrt(h);
  GaussianStream gs(seed, replica);

  Segment wx = xi, wy = eta;
  Eigen::VectorXd noise(m.d), kick(m.d);
  for (int j = 0; j < px.steps(); ++j) {
    px.segment_at(j, wx);
    py.segment_at(j, wy);
    gs.gauss_fill(noise);
    kick.noalias() = sqh * (m.sigma * noise);
    px.state(j + 1) = px.state(j) + h * m.drift(wx) + kick;
    py.state(j + 1) = py.state(j) + h * m.drift(wy) + kick;
    if (!px.state(j + 1).allFinite() || !py.state(j + 1).allFinite())
      throw std::runtime_error("simulate_coupled: state blew up at t = " +
                               std::to_string((j + 1) * h));
  }
  return {std::move(px), std::move(py)};
}

void write_csv(const PathRecord& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);
  out << "t";
  for (int i = 0; i < p.dim(); ++i) out << ",x" << (i + 1);
  out << "\n";
  out.precision(17);
  for (int j = -p.history(); j <= p.steps(); ++j) {
    out << j * p.h();
    for (int i = 0; i < p.dim(); ++i) out << "," << p.state(j)(i);
    out << "\n";
  }
}

}  // namespace fsde::sim
