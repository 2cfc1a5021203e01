#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "sg/linalg.hpp"

namespace sg {

// All randomness in the project flows through this generator: mt19937_64
// seeded from the config, with hand-rolled distributions so sequences do
// not depend on the standard library's distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // uniform in [0, 1)
  double uniform() { return std::ldexp(static_cast<double>(gen_() >> 11), -53); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller, one value per call (no cached spare so
  // that the stream position is a pure function of the call count)
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  Vec3 normal3() {
    const double a = normal(), b = normal(), c = normal();
    return Vec3(a, b, c);
  }

  Vec3 uniform_in_box(const Vec3& lo, const Vec3& hi) {
    const double a = uniform(lo.x(), hi.x());
    const double b = uniform(lo.y(), hi.y());
    const double c = uniform(lo.z(), hi.z());
    return Vec3(a, b, c);
  }

  Vec3 uniform_dir() {
    while (true) {
      const Vec3 v = normal3();
      const double n = v.norm();
      if (n > 1e-12) return v / n;
    }
  }

  // uniform in the ball B(center, radius)
  Vec3 uniform_in_ball(const Vec3& center, double radius) {
    const Vec3 d = uniform_dir();
    const double r = radius * std::cbrt(uniform());
    return center + r * d;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace sg
