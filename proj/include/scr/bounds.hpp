#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "scr/curve.hpp"
#include "scr/sensitivity.hpp"
#include "scr/survfit.hpp"

namespace scr {

/// Covariate-averaged observed-data functionals: infection-risk curves per
/// arm on `grid`, plus the horizon quantities the partial-identification
/// formulas consume. epsi[a] = Pr(infection by r or survival past r | arm a);
/// ef1_r[a] = infection risk by the horizon; eboth0 = Pr(infection and death
/// by the horizon | arm 0).
struct ObservedFunctionals {
  std::vector<double> grid;
  double horizon = 1.0;
  std::array<double, 2> epsi{0.0, 0.0};
  std::array<std::vector<double>, 2> ef1;
  std::array<double, 2> ef1_r{0.0, 0.0};
  double eboth0 = 0.0;
};

void validate_functionals(const ObservedFunctionals& f);

/// Cross-world restriction imposed when converting functionals to bounds.
enum class OrpAssumption { none, weak_orp, ios_orp };
enum class EffectScale { difference, risk_ratio };
enum class Falsification { not_falsified, falsified };

struct Interval {
  double lower = 0.0, upper = 0.0;
  bool lower_defined = true, upper_defined = true;
};

/// The strongest assumption is refutable: it forces
/// Pr(infected-or-survivor | arm 0) <= Pr(infected-or-survivor | arm 1).
Falsification falsify_ios_orp(const ObservedFunctionals& f);

/// Bounds (a point under ios_orp) on the infected-or-survivor proportion.
Interval pi_ios_bounds(const ObservedFunctionals& f, OrpAssumption a);

/// Scalar functional values feeding the bound formulas at one grid time.
struct FunctionalsAt {
  double ef1_0_t = 0.0, ef1_1_t = 0.0;  // infection risk by t, per arm
  double epsi0 = 0.0, epsi1 = 0.0;      // horizon functionals
  double ef1_0_r = 0.0;                 // arm-0 infection risk by the horizon
  double eboth0 = 0.0;                  // arm-0 infection-and-death by horizon
};

/// Difference-scale bounds on the feasible-infection effect at one time,
/// clipped to [-1, 1].
Interval fice_bounds_at(const FunctionalsAt& v, OrpAssumption a);

/// Risk-ratio-scale bounds; an endpoint with a non-positive denominator is
/// marked undefined. weak_orp and ios_orp share one formula by construction.
Interval fice_rr_bounds_at(const FunctionalsAt& v, OrpAssumption a);

FunctionalsAt functionals_at(const ObservedFunctionals& f, std::size_t t_index);

struct BoundsCurve {
  OrpAssumption assumption = OrpAssumption::none;
  EffectScale scale = EffectScale::difference;
  std::vector<Interval> bounds;  // parallel to the functional grid
};

struct BoundsReport {
  std::vector<double> grid;
  double horizon = 1.0;
  Falsification falsification = Falsification::not_falsified;
  std::array<Interval, 3> pi;       // indexed by OrpAssumption
  std::vector<BoundsCurve> curves;  // 3 assumptions x 2 scales
};

BoundsReport bounds_report(const ObservedFunctionals& f);

/// Marginalize the fitted frailty-conditional curves into observed-data
/// functionals: for every covariate row, average the arm-a curves over
/// mc_draws Gamma(theta_a) frailty draws (inverse-CDF, antithetically
/// paired), then average over rows. Deterministic per-row substreams.
ObservedFunctionals functionals_from_fit(const ArmModel& m0, const ArmModel& m1,
                                         const std::vector<std::vector<double>>& rows,
                                         std::span<const double> grid, double r,
                                         int mc_draws = 200,
                                         std::uint64_t seed = 0);

/// Same, straight from the per-arm fits; refuses fits that did not converge.
ObservedFunctionals functionals_from_fit(const ArmFit& fit0, const ArmFit& fit1,
                                         const std::vector<std::vector<double>>& rows,
                                         std::span<const double> grid, double r,
                                         int mc_draws = 200,
                                         std::uint64_t seed = 0);

}  // namespace scr
