#pragma once

#include <cstdint>
#include <vector>

namespace scr {

/// A function of time evaluated on a grid. `defined` marks the whole curve
/// (false when its conditioning stratum is empty); `ok[i]` marks single
/// points (false e.g. for a ratio with zero denominator at that time).
struct Curve {
  std::vector<double> value;
  std::vector<std::uint8_t> ok;
  bool defined = true;

  static Curve undefined_curve(std::size_t n) {
    Curve c;
    c.value.assign(n, 0.0);
    c.ok.assign(n, 0);
    c.defined = false;
    return c;
  }
};

/// Evenly spaced grid {r k / count : k = 1..count} over (0, r].
std::vector<double> default_grid(std::size_t count, double r);

}  // namespace scr
