#include "scr/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace scr {

namespace {

inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace

Stream::Stream(std::uint64_t seed, std::uint64_t unit, std::uint64_t channel)
    : k0_(mix64(seed ^ kGolden)),
      k1_(mix64(mix64(unit + kGolden) ^ (channel * 0xc2b2ae3d27d4eb4fULL))) {}

std::uint64_t Stream::next_u64() {
  const std::uint64_t c = ctr_++;
  return mix64(mix64(k0_ + kGolden * (c + 1)) ^ k1_);
}

double Stream::next_double() {
  // 53 mantissa bits, offset half a ulp: strictly inside (0, 1).
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Stream::next_normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  const double u1 = next_double();
  const double u2 = next_double();
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * M_PI * u2;
  cached_normal_ = rad * std::sin(ang);
  has_cached_ = true;
  return rad * std::cos(ang);
}

double Stream::next_exponential() { return -std::log(next_double()); }

double draw_gamma(Stream& s, double shape) {
  if (shape < 0.0) throw std::invalid_argument("draw_gamma: negative shape");
  if (shape == 0.0) return 0.0;
  if (shape < 1.0) {
    // Boost: Gamma(shape) = Gamma(shape + 1) * U^(1/shape).
    const double g = draw_gamma(s, shape + 1.0);
    return g * std::pow(s.next_double(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = s.next_normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = s.next_double();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double rho_max(double theta0, double theta1) {
  if (theta0 < 0.0 || theta1 < 0.0)
    throw std::invalid_argument("rho_max: negative variance");
  if (theta0 == 0.0 || theta1 == 0.0) return 0.0;
  return std::fmin(std::sqrt(theta0 / theta1), std::sqrt(theta1 / theta0));
}

std::pair<double, double> draw_bivariate_gamma(Stream& s, double theta0,
                                               double theta1, double rho) {
  if (theta0 < 0.0 || theta1 < 0.0)
    throw std::invalid_argument("draw_bivariate_gamma: negative variance");
  if (rho < 0.0)
    throw std::invalid_argument("draw_bivariate_gamma: negative correlation");
  const double cap = rho_max(theta0, theta1);
  if (rho > cap + 1e-12)
    throw std::invalid_argument(
        "draw_bivariate_gamma: correlation " + std::to_string(rho) +
        " exceeds the admissible maximum " + std::to_string(cap) +
        " for variances (" + std::to_string(theta0) + ", " +
        std::to_string(theta1) + ")");

  if (theta0 == 0.0 && theta1 == 0.0) return {1.0, 1.0};

  const double shared =
      (theta0 > 0.0 && theta1 > 0.0) ? rho / std::sqrt(theta0 * theta1) : 0.0;
  const double gc = draw_gamma(s, shared);

  auto margin = [&](double theta) {
    if (theta == 0.0) return 1.0;
    const double rest = std::fmax(0.0, 1.0 / theta - shared);
    return theta * (gc + draw_gamma(s, rest));
  };
  const double g0 = margin(theta0);
  const double g1 = margin(theta1);
  return {g0, g1};
}

}  // namespace scr
