#include "scr/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace scr {

double digamma(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("digamma: x must be positive");
  double acc = 0.0;
  // psi(x) = psi(x + 1) - 1/x; push the argument above 6 before expanding.
  while (x < 6.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x, inv2 = inv * inv;
  // Asymptotic series: log x - 1/(2x) - 1/(12x^2) + 1/(120x^4) - 1/(252x^6).
  return acc + std::log(x) - 0.5 * inv -
         inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 / 252.0));
}

namespace {

// Series representation of P(a, x), valid (and fast) for x < a + 1.
double gammp_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int n = 0; n < 10000; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-16)
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw std::runtime_error("gammp: series failed to converge");
}

// Modified Lentz continued fraction for Q(a, x), valid for x >= a + 1.
double gammq_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16)
      return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw std::runtime_error("gammq: continued fraction failed to converge");
}

}  // namespace

double gammp(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw std::invalid_argument("gammp: bad arguments");
  if (x == 0.0) return 0.0;
  return (x < a + 1.0) ? gammp_series(a, x) : 1.0 - gammq_cf(a, x);
}

double gammq(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw std::invalid_argument("gammq: bad arguments");
  if (x == 0.0) return 1.0;
  return (x < a + 1.0) ? 1.0 - gammp_series(a, x) : gammq_cf(a, x);
}

double inv_gammp(double p, double a) {
  if (!(a > 0.0)) throw std::invalid_argument("inv_gammp: shape must be positive");
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("inv_gammp: p outside [0,1)");
  if (p == 0.0) return 0.0;

  const double gln = std::lgamma(a);
  const double a1 = a - 1.0;
  double x;
  if (a > 1.0) {
    // Wilson-Hilferty start from the normal quantile.
    const double pp = (p < 0.5) ? p : 1.0 - p;
    const double t = std::sqrt(-2.0 * std::log(pp));
    double z = (2.30753 + t * 0.27061) / (1.0 + t * (0.99229 + t * 0.04481)) - t;
    if (p < 0.5) z = -z;
    x = std::fmax(1e-3,
                  a * std::pow(1.0 - 1.0 / (9.0 * a) + z / (3.0 * std::sqrt(a)), 3.0));
  } else {
    const double t = 1.0 - a * (0.253 + a * 0.12);
    x = (p < t) ? std::pow(p / t, 1.0 / a) : 1.0 - std::log(1.0 - (p - t) / (1.0 - t));
  }

  const double lna1 = (a > 1.0) ? std::log(a1) : 0.0;
  const double afac = (a > 1.0) ? std::exp(a1 * (lna1 - 1.0) - gln) : 0.0;
  for (int j = 0; j < 24; ++j) {
    if (x <= 0.0) return 0.0;
    const double err = gammp(a, x) - p;
    double t;
    if (a > 1.0)
      t = afac * std::exp(-(x - a1) + a1 * (std::log(x) - lna1));
    else
      t = std::exp(-x + a1 * std::log(x) - gln);
    const double u = err / t;
    // Halley step.
    x -= (t = u / (1.0 - 0.5 * std::fmin(1.0, u * (a1 / x - 1.0))));
    if (x <= 0.0) x = 0.5 * (x + t);
    if (std::fabs(t) < 1e-14 * x) break;
  }
  return x;
}

double gamma_quantile(double shape, double scale, double u) {
  if (shape < 0.0 || scale < 0.0)
    throw std::invalid_argument("gamma_quantile: negative parameter");
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("gamma_quantile: u outside (0,1)");
  if (shape == 0.0) return 0.0;
  // A shape this large is numerically a point mass at the mean.
  if (shape > 5e3) return shape * scale;
  return scale * inv_gammp(u, shape);
}

namespace {

double pairwise_sum_impl(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum_impl(v, half) + pairwise_sum_impl(v + half, n - half);
}

}  // namespace

double pairwise_sum(std::span<const double> v) {
  return pairwise_sum_impl(v.data(), v.size());
}

double pairwise_mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return pairwise_sum(v) / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n < 2) return 0.0;
  const double m = pairwise_mean(v);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = (v[i] - m) * (v[i] - m);
  return std::sqrt(pairwise_sum(sq) / static_cast<double>(n - 1));
}

}  // namespace scr
