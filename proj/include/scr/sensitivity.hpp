#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "scr/curve.hpp"
#include "scr/simulate.hpp"
#include "scr/survfit.hpp"

namespace scr {

/// Frailty-conditional state-occupancy quantities for one arm, subject, and
/// frailty value, computed exactly for step baselines.
///   f1[i]      = Pr(T1 <= grid[i])
///   joint11[i] = Pr(T1 <= grid[i] and T2 > r)
/// and the four horizon cells: c11 (infected, survived), c10 (infected,
/// dead), c01 (uninfected, survived), c00 (uninfected, dead). The cells sum
/// to one by construction; psi = c11 + c10 + c01.
struct ConditionalCurves {
  std::vector<double> f1, joint11;
  double f1_r = 0.0;
  double c11 = 0.0, c10 = 0.0, c01 = 0.0, c00 = 0.0;
  double psi = 0.0;
};

ConditionalCurves conditional_curves(const CoxComponent& c01,
                                     const CoxComponent& c02,
                                     const CoxComponent& c12,
                                     std::span<const double> x, double gamma,
                                     std::span<const double> grid, double r);

/// One arm's model: three transition components plus the frailty variance.
/// Built from a fitted arm or from known parameters on a discretized grid.
struct ArmModel {
  CoxComponent c01, c02, c12;
  double theta = 0.0;
};

/// The conditional law of one (arm model, covariate row) with the frailty
/// factored out: construction precomputes per-infection-jump exposures, after
/// which each evaluation at a frailty value costs three exponentials per
/// jump. Infection mass sits on the jump times of the 01 baseline;
/// simultaneous jumps of competing transitions resolve infection-first.
class ConditionalLawEvaluator {
 public:
  ConditionalLawEvaluator(const ArmModel& m, std::span<const double> x,
                          std::span<const double> grid, double r);

  /// Horizon cells of the conditional law.
  struct Cells {
    double f1_r = 0.0;
    double c11 = 0.0, c10 = 0.0, c01 = 0.0, c00 = 0.0;
    double psi = 0.0;

    /// Cell probability by horizon status, index (infected, survived).
    double cell(int infected, int survived) const {
      switch ((infected << 1) | survived) {
        case 0: return c00;
        case 1: return c01;
        case 2: return c10;
        default: return c11;
      }
    }
  };

  /// Low-allocation evaluation; f1 and j11 must point at grid-sized buffers:
  ///   f1[i]  = Pr(T1 <= grid[i] | gamma)
  ///   j11[i] = Pr(T1 <= grid[i], T2 > r | gamma)
  Cells eval(double gamma, double* f1, double* j11) const;

  /// Convenience wrapper allocating the output curves.
  ConditionalCurves curves(double gamma) const;

  std::size_t grid_size() const { return grid_.size(); }

 private:
  std::vector<double> grid_;
  std::vector<double> u_, pre_, post_, tail_;
  double zr_ = 0.0;
};

ArmModel arm_model(const ArmFit& fit);
ArmModel arm_model_from_specs(const std::array<TransitionHazardSpec, 3>& hazards,
                              double theta, std::size_t n_jumps, double horizon);

/// An estimand curve with per-point Monte Carlo standard errors (batch-means).
struct EstimandCurve {
  Curve curve;
  std::vector<double> se;
};

/// Everything the cross-world frailty identification yields at one rho.
struct SensitivityReport {
  double rho = 0.0;
  std::vector<double> grid;
  double horizon = 1.0;

  double pi_ios = 0.0, pi_as = 0.0, pi_ai = 0.0;
  double pi_ios_se = 0.0, pi_as_se = 0.0, pi_ai_se = 0.0;
  std::array<double, 16> pt_probs{};  // index 0 <-> patient type 1

  EstimandCurve fice_diff, fice_rr;
  EstimandCurve sace_diff, sace_rr;
  EstimandCurve aice_diff, aice_rr;
  EstimandCurve total_diff, total_rr;
  EstimandCurve pt89_diff;
  double pt89_mass = 0.0;

  // Feasible-infection risk difference and number needed to harm at the
  // horizon.
  double fice_at_horizon = 0.0;
  std::optional<double> nnh;
  double nnh_se = 0.0;

  int mc_draws = 0;
  std::uint64_t seed = 0;
};

/// Monte Carlo evaluation of all cross-world identified quantities at one
/// frailty correlation rho. Frailty pairs are drawn once per covariate row
/// (per-(row, rho) substreams) and shared across every estimand and grid
/// time. Throws std::invalid_argument when rho exceeds the admissible bound
/// for (theta0, theta1).
SensitivityReport identify_report(const ArmModel& m0, const ArmModel& m1,
                                  double rho,
                                  const std::vector<std::vector<double>>& rows,
                                  std::span<const double> grid, double r,
                                  int mc_draws = 2000, std::uint64_t seed = 0);

/// Focused views over identify_report.
struct FiceIdentification {
  double pi_ios = 0.0, pi_ios_se = 0.0;
  EstimandCurve diff, rr;
};
FiceIdentification identify_fice(const ArmModel& m0, const ArmModel& m1,
                                 double rho,
                                 const std::vector<std::vector<double>>& rows,
                                 std::span<const double> grid, double r,
                                 int mc_draws = 2000, std::uint64_t seed = 0);

struct StrataIdentification {
  std::array<double, 16> pt_probs{};
  double pi_as = 0.0, pi_ai = 0.0, pi_ios = 0.0;
};
StrataIdentification identify_strata(const ArmModel& m0, const ArmModel& m1,
                                     double rho,
                                     const std::vector<std::vector<double>>& rows,
                                     double r, int mc_draws = 2000,
                                     std::uint64_t seed = 0);

/// Number needed to harm for a risk difference; empty when the difference is
/// numerically zero.
std::optional<double> nnh(double risk_difference);

}  // namespace scr
