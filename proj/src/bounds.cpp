#include "scr/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "scr/parallel.hpp"
#include "scr/rng.hpp"
#include "scr/stats.hpp"

namespace scr {

namespace {

constexpr double kSlack = 1e-9;

void check_unit(double v, const char* what) {
  if (!(v >= -kSlack && v <= 1.0 + kSlack) || std::isnan(v))
    throw std::invalid_argument(std::string("functionals: ") + what +
                                " outside [0, 1]");
}

// Ratio with the limiting behavior at a vanishing denominator: the
// difference-scale bound formulas divide a numerator by a stratum-proportion
// bound, and a non-positive proportion sends the ratio to +-1 (after the
// final clip) in the numerator's direction.
double guarded_ratio(double num, double den) {
  if (den > 0.0) return num / den;
  if (num > 0.0) return 1.0;
  if (num < 0.0) return -1.0;
  return 0.0;
}

double clip_unit_interval(double v) { return std::clamp(v, -1.0, 1.0); }

}  // namespace

void validate_functionals(const ObservedFunctionals& f) {
  const double r = f.horizon;
  if (!(r > 0.0 && r <= 1.0))
    throw std::invalid_argument("functionals: horizon must lie in (0, 1]");
  if (f.grid.empty())
    throw std::invalid_argument("functionals: empty grid");
  for (std::size_t i = 0; i < f.grid.size(); ++i) {
    if (!(f.grid[i] > 0.0 && f.grid[i] <= r))
      throw std::invalid_argument("functionals: grid points must lie in (0, horizon]");
    if (i > 0 && f.grid[i] < f.grid[i - 1])
      throw std::invalid_argument("functionals: grid must be nondecreasing");
  }
  for (int a = 0; a < 2; ++a) {
    if (f.ef1[a].size() != f.grid.size())
      throw std::invalid_argument("functionals: curve length does not match grid");
    check_unit(f.epsi[a], "survivor-or-infected proportion");
    check_unit(f.ef1_r[a], "horizon infection risk");
    for (std::size_t i = 0; i < f.ef1[a].size(); ++i) {
      check_unit(f.ef1[a][i], "infection risk");
      if (i > 0 && f.ef1[a][i] < f.ef1[a][i - 1] - kSlack)
        throw std::invalid_argument("functionals: infection risk must be nondecreasing");
    }
    if (f.ef1[a].back() > f.ef1_r[a] + kSlack)
      throw std::invalid_argument(
          "functionals: infection risk on the grid exceeds its horizon value");
    if (f.ef1_r[a] > f.epsi[a] + kSlack)
      throw std::invalid_argument(
          "functionals: horizon infection risk exceeds the "
          "survivor-or-infected proportion");
  }
  check_unit(f.eboth0, "infection-and-death proportion");
  if (f.eboth0 > f.epsi[0] + kSlack)
    throw std::invalid_argument(
        "functionals: infection-and-death proportion exceeds the arm-0 "
        "survivor-or-infected proportion");
}

Falsification falsify_ios_orp(const ObservedFunctionals& f) {
  return f.epsi[0] <= f.epsi[1] ? Falsification::not_falsified
                                : Falsification::falsified;
}

Interval pi_ios_bounds(const ObservedFunctionals& f, OrpAssumption a) {
  const double psi0 = f.epsi[0], psi1 = f.epsi[1];
  switch (a) {
    case OrpAssumption::ios_orp:
      return {psi0, psi0, true, true};
    case OrpAssumption::weak_orp:
      return {std::max(f.ef1_r[0], psi0 + psi1 - 1.0),
              std::min(psi0, psi1 + f.eboth0), true, true};
    case OrpAssumption::none:
    default:
      return {std::max(0.0, psi0 + psi1 - 1.0), std::min(psi0, psi1), true,
              true};
  }
}

FunctionalsAt functionals_at(const ObservedFunctionals& f, std::size_t t_index) {
  if (t_index >= f.grid.size())
    throw std::out_of_range("functionals_at: grid index out of range");
  return {f.ef1[0][t_index], f.ef1[1][t_index], f.epsi[0], f.epsi[1],
          f.ef1_r[0],        f.eboth0};
}

Interval fice_bounds_at(const FunctionalsAt& v, OrpAssumption a) {
  const double psi0 = v.epsi0, psi1 = v.epsi1;
  const double es1_0 = 1.0 - v.ef1_0_t;  // arm-0 uninfected-by-t proportion
  const double es1_1 = 1.0 - v.ef1_1_t;

  // Numerators. The strongest assumption and the weak one share a numerator;
  // without any cross-world restriction both terms loosen.
  double unum, lnum;
  if (a == OrpAssumption::none) {
    unum = std::min(v.ef1_1_t, psi0) - std::max(0.0, psi1 - es1_0);
    lnum = std::max(0.0, psi0 - es1_1) - std::min(v.ef1_0_t, psi1);
  } else {
    unum = std::min(v.ef1_1_t, psi0) - v.ef1_0_t;
    lnum = std::max(0.0, psi0 - es1_1) - v.ef1_0_t;
  }

  // Stratum-proportion bounds the numerators are divided by.
  double pi_lo, pi_hi;
  if (a == OrpAssumption::ios_orp) {
    pi_lo = pi_hi = psi0;
  } else if (a == OrpAssumption::weak_orp) {
    pi_lo = std::max(v.ef1_0_r, psi0 + psi1 - 1.0);
    pi_hi = std::min(psi0, psi1 + v.eboth0);
  } else {
    pi_lo = std::max(0.0, psi0 + psi1 - 1.0);
    pi_hi = std::min(psi0, psi1);
  }

  // A nonnegative numerator is largest against the smallest admissible
  // proportion and smallest against the largest one; a negative numerator
  // dispatches the other way.
  const double upper = guarded_ratio(unum, unum >= 0.0 ? pi_lo : pi_hi);
  const double lower = guarded_ratio(lnum, lnum >= 0.0 ? pi_hi : pi_lo);
  return {clip_unit_interval(lower), clip_unit_interval(upper), true, true};
}

Interval fice_rr_bounds_at(const FunctionalsAt& v, OrpAssumption a) {
  const double psi0 = v.epsi0, psi1 = v.epsi1;
  const double es1_0 = 1.0 - v.ef1_0_t;
  const double es1_1 = 1.0 - v.ef1_1_t;
  const double lnum = std::max(0.0, psi0 - es1_1);
  const double unum = std::min(v.ef1_1_t, psi0);

  Interval out;
  double lden, uden;
  if (a == OrpAssumption::none) {
    lden = std::min(psi1, v.ef1_0_t);
    uden = std::max(0.0, psi1 - es1_0);
  } else {
    // The two cross-world restrictions give one formula: conditioning washes
    // the stratum proportion out of the ratio.
    lden = v.ef1_0_t;
    uden = v.ef1_0_t;
  }
  out.lower_defined = lden > 0.0;
  out.upper_defined = uden > 0.0;
  out.lower = out.lower_defined ? lnum / lden : 0.0;
  out.upper = out.upper_defined ? unum / uden : 0.0;
  return out;
}

BoundsReport bounds_report(const ObservedFunctionals& f) {
  validate_functionals(f);
  BoundsReport rep;
  rep.grid = f.grid;
  rep.horizon = f.horizon;
  rep.falsification = falsify_ios_orp(f);
  const OrpAssumption all[3] = {OrpAssumption::none, OrpAssumption::weak_orp,
                                OrpAssumption::ios_orp};
  for (const OrpAssumption a : all)
    rep.pi[static_cast<int>(a)] = pi_ios_bounds(f, a);
  for (const OrpAssumption a : all) {
    BoundsCurve diff{a, EffectScale::difference, {}};
    BoundsCurve rr{a, EffectScale::risk_ratio, {}};
    diff.bounds.reserve(f.grid.size());
    rr.bounds.reserve(f.grid.size());
    for (std::size_t i = 0; i < f.grid.size(); ++i) {
      const FunctionalsAt v = functionals_at(f, i);
      diff.bounds.push_back(fice_bounds_at(v, a));
      rr.bounds.push_back(fice_rr_bounds_at(v, a));
    }
    rep.curves.push_back(std::move(diff));
    rep.curves.push_back(std::move(rr));
  }
  return rep;
}

ObservedFunctionals functionals_from_fit(const ArmModel& m0, const ArmModel& m1,
                                         const std::vector<std::vector<double>>& rows,
                                         std::span<const double> grid, double r,
                                         int mc_draws, std::uint64_t seed) {
  if (!(r > 0.0 && r <= 1.0))
    throw std::invalid_argument("functionals: horizon must lie in (0, 1]");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0 && grid[i] <= r))
      throw std::invalid_argument("functionals: grid points must lie in (0, horizon]");
    if (i > 0 && grid[i] < grid[i - 1])
      throw std::invalid_argument("functionals: grid must be nondecreasing");
  }
  if (grid.empty()) throw std::invalid_argument("functionals: empty grid");
  if (rows.empty())
    throw std::invalid_argument("functionals: need at least one covariate row");
  if (mc_draws < 2 || mc_draws % 2 != 0)
    throw std::invalid_argument(
        "functionals: mc_draws must be even and at least 2 (draws are "
        "antithetically paired)");

  const std::size_t g = grid.size();
  const std::size_t n_rows = rows.size();
  const std::size_t pairs = static_cast<std::size_t>(mc_draws) / 2;
  const ArmModel* models[2] = {&m0, &m1};

  // Layout per accumulator: two risk curves, then the five scalars.
  const std::size_t n_stats = 2 * g + 5;
  const std::size_t chunk_rows = 64;
  const std::size_t n_chunks = num_chunks(n_rows, chunk_rows);
  std::vector<std::vector<double>> chunk_acc(n_chunks,
                                             std::vector<double>(n_stats, 0.0));

  parallel_chunks(n_rows, chunk_rows, [&](std::size_t ci, std::size_t begin,
                                          std::size_t end) {
    auto& acc = chunk_acc[ci];
    std::vector<double> f1(g), j11(g);
    for (std::size_t row = begin; row < end; ++row) {
      for (int a = 0; a < 2; ++a) {
        const ArmModel& m = *models[a];
        const ConditionalLawEvaluator ev(m, rows[row], grid, r);
        Stream s(seed, row, 0xA0ULL + static_cast<std::uint64_t>(a));
        const double theta = m.theta;
        auto quantile = [&](double u) {
          return theta == 0.0 ? 1.0 : gamma_quantile(1.0 / theta, theta, u);
        };
        for (std::size_t pr = 0; pr < pairs; ++pr) {
          const double u = s.next_double();
          const double gam[2] = {quantile(u), quantile(1.0 - u)};
          for (const double gv : gam) {
            const auto cells = ev.eval(gv, f1.data(), j11.data());
            for (std::size_t i = 0; i < g; ++i)
              acc[static_cast<std::size_t>(a) * g + i] += f1[i];
            acc[2 * g + static_cast<std::size_t>(a)] += cells.psi;
            acc[2 * g + 2 + static_cast<std::size_t>(a)] += cells.f1_r;
            if (a == 0) acc[2 * g + 4] += cells.c10;
          }
        }
      }
    }
  });

  std::vector<double> total(n_stats, 0.0);
  for (const auto& acc : chunk_acc)
    for (std::size_t i = 0; i < n_stats; ++i) total[i] += acc[i];
  const double nd = static_cast<double>(n_rows) * static_cast<double>(2 * pairs);

  ObservedFunctionals f;
  f.grid.assign(grid.begin(), grid.end());
  f.horizon = r;
  for (int a = 0; a < 2; ++a) {
    f.ef1[a].resize(g);
    for (std::size_t i = 0; i < g; ++i)
      f.ef1[a][i] = total[static_cast<std::size_t>(a) * g + i] / nd;
    f.epsi[a] = total[2 * g + static_cast<std::size_t>(a)] / nd;
    f.ef1_r[a] = total[2 * g + 2 + static_cast<std::size_t>(a)] / nd;
  }
  f.eboth0 = total[2 * g + 4] / nd;
  return f;
}

ObservedFunctionals functionals_from_fit(const ArmFit& fit0, const ArmFit& fit1,
                                         const std::vector<std::vector<double>>& rows,
                                         std::span<const double> grid, double r,
                                         int mc_draws, std::uint64_t seed) {
  if (!fit0.converged || !fit1.converged)
    throw std::invalid_argument(
        "functionals: refusing a fit that did not converge");
  return functionals_from_fit(arm_model(fit0), arm_model(fit1), rows, grid, r,
                              mc_draws, seed);
}

}  // namespace scr
