#pragma once

#include <array>
#include <span>
#include <vector>

#include "scr/bounds.hpp"
#include "scr/curve.hpp"
#include "scr/domain.hpp"

namespace scr {

/// A potential-outcome profile carrying a population weight. A list of these
/// is a fully known population over which every estimand is computable
/// exactly -- the ground truth simulated analyses are checked against.
struct WeightedProfile {
  PotentialOutcomeProfile profile;
  double weight = 1.0;
};

struct OracleReport {
  std::vector<double> grid;
  double horizon = 1.0;

  double pi_as = 0.0, pi_ai = 0.0, pi_ios = 0.0;
  std::array<double, 16> pt_probs{};  // index 0 <-> patient type 1

  Curve total_diff, total_rr;
  Curve fice_diff, fice_rr;
  Curve sace_diff, sace_rr;
  Curve aice_diff, aice_rr;
  Curve pt89_diff;
  double pt89_mass = 0.0;
};

/// Exact principal-stratum estimands of a weighted population at horizon r
/// on the given grid (grid must be nondecreasing inside (0, r]).
OracleReport oracle_estimands(std::span<const WeightedProfile> profiles,
                              std::span<const double> grid, double r);

/// Exact observed-data functionals of the same population under
/// randomization with Pr(A=1) = p. Randomization makes both arms' observed
/// laws equal the corresponding potential-outcome laws, so p affects nothing
/// beyond validation.
ObservedFunctionals oracle_observed_functionals(
    std::span<const WeightedProfile> profiles, double p,
    std::span<const double> grid, double r);

/// Convenience: wrap unweighted profiles.
std::vector<WeightedProfile> weight_all(
    std::span<const PotentialOutcomeProfile> profiles);

}  // namespace scr
