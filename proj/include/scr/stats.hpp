#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace scr {

/// Digamma function psi(x) for x > 0. Accurate to ~1e-12 via the ascending
/// recurrence followed by the asymptotic series.
double digamma(double x);

/// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a),
/// a > 0, x >= 0. Series expansion for x < a + 1, Lentz continued fraction
/// otherwise.
double gammp(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double gammq(double a, double x);

/// Inverse of P(a, .): returns x with P(a, x) = p. Requires a > 0,
/// p in [0, 1); p = 0 returns 0.
double inv_gammp(double p, double a);

/// Quantile of a Gamma(shape, scale) distribution at probability u in (0,1).
/// shape == 0 is treated as a point mass at zero.
double gamma_quantile(double shape, double scale, double u);

/// Sum with a fixed pairwise reduction order. The result depends only on the
/// contents of the span, never on threading or chunked evaluation upstream,
/// and carries the usual O(log n) pairwise error bound.
double pairwise_sum(std::span<const double> v);

/// Mean via pairwise_sum; 0 for an empty span.
double pairwise_mean(std::span<const double> v);

/// Sample standard deviation (n-1 denominator); 0 when fewer than two values.
double sample_sd(std::span<const double> v);

}  // namespace scr
