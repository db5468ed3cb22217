#pragma once

#include "cql/types.hpp"

#include <cmath>
#include <cstddef>
#include <numbers>

namespace cql::detail {

inline double radical_inverse(std::size_t i, unsigned base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

inline constexpr unsigned kPrimes[] = {2, 3, 5, 7, 11, 13};

// Low-discrepancy point in the ball of radius R; coordinates d, d+1, d+2 of
// the Halton sequence. surface = true places the point on the sphere.
inline Vec3 halton_ball(std::size_t i, double R, bool surface = false, unsigned d = 0) {
  const double s = radical_inverse(i + 1, kPrimes[d]);
  const double v = radical_inverse(i + 1, kPrimes[d + 1]);
  const double w = radical_inverse(i + 1, kPrimes[d + 2]);
  const double r = surface ? R : R * std::cbrt(s);
  const double ct = 1.0 - 2.0 * v;
  const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
  const double ph = 2.0 * std::numbers::pi * w;
  return Vec3(r * st * std::cos(ph), r * st * std::sin(ph), r * ct);
}

}  // namespace cql::detail
