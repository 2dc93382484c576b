#pragma once

#include <cstdint>
#include <random>
#include <cmath>

#include <Eigen/Dense>

namespace fsde {

// Deterministic Gaussian stream.  mt19937_64 is fully specified by the C++
// standard, but std::normal_distribution is not, so we roll Box-Muller by
// hand to get bit-identical draws on every platform/compiler.
//
// Streams are keyed by (seed, stream_id) so that Monte Carlo replicas can be
// generated independently of loop order or thread count: replica i always
// sees stream (seed, i).
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint64_t stream_id)
      : engine_(mix(seed, stream_id)), spare_(0.0), has_spare_(false) {}

  // one N(0,1) variate
  double gauss() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // Box-Muller on (0,1] uniforms; u1 > 0 guaranteed by the +1 shift.
    const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1p-53;
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1p-53;
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 6.283185307179586476925286766559 * u2;
    spare_ = rad * std::sin(ang);
    has_spare_ = true;
    return rad * std::cos(ang);
  }

  // d-dimensional standard normal
  Eigen::VectorXd gauss_vector(int d) {
    Eigen::VectorXd z(d);
    for (int i = 0; i < d; ++i) z(i) = gauss();
    return z;
  }

  void gauss_fill(Eigen::Ref<Eigen::VectorXd> z) {
    for (int i = 0; i < z.size(); ++i) z(i) = gauss();
  }

  // splitmix64 finalizer; decorrelates (seed, stream) pairs before seeding
  // the engine so that nearby seeds / stream ids do not produce correlated
  // mt19937 states.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream_id) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream_id + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
  double spare_;
  bool has_spare_;
};

}  // namespace fsde
