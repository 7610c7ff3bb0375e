#pragma once

#include <cstdint>
#include <utility>

namespace scr {

/// Counter-based random stream. Each draw hashes (key, counter), so a stream
/// is a pure function of its construction arguments and the number of values
/// consumed -- results never depend on sharing, ordering, or thread count.
/// Substreams are keyed by (seed, unit, channel); give every simulated
/// subject / covariate row / bootstrap replicate its own unit.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t unit, std::uint64_t channel);

  std::uint64_t next_u64();
  /// Uniform draw strictly inside (0, 1).
  double next_double();
  /// Standard normal via Box-Muller (second value cached).
  double next_normal();
  /// Exponential(1).
  double next_exponential();

 private:
  std::uint64_t k0_, k1_;
  std::uint64_t ctr_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

/// Gamma(shape, 1) via Marsaglia-Tsang squeeze (boosted below shape 1).
/// shape == 0 gives the degenerate value 0.
double draw_gamma(Stream& s, double shape);

/// Largest admissible correlation of the bivariate Gamma pair below.
double rho_max(double theta0, double theta1);

/// Draw a frailty pair (gamma0, gamma1) with Gamma(1/theta_a, theta_a)
/// margins (mean 1, variance theta_a) and correlation rho, built by shared-
/// component reduction: gamma_a = theta_a * (G_common + G_a) with
/// G_common ~ Gamma(rho / sqrt(theta0 * theta1)). theta_a == 0 yields the
/// constant 1 for that margin and requires rho == 0, as does mixing with a
/// degenerate margin. Throws std::invalid_argument when rho exceeds
/// rho_max(theta0, theta1).
std::pair<double, double> draw_bivariate_gamma(Stream& s, double theta0,
                                               double theta1, double rho);

}  // namespace scr
