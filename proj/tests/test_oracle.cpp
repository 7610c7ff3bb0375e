// Exact ground-truth estimands on fully known populations: a three-profile
// population worked entirely by hand, cross-checks against direct counting on
// a simulated cohort, and input validation.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "scr/domain.hpp"
#include "scr/oracle.hpp"
#include "scr/simulate.hpp"

using namespace scr;
using doctest::Approx;

namespace {

// P1 (w=1/2): never infected, survives past the horizon in both arms.
// P2 (w=1/4): survives both arms, infected at 0.5 under treatment only.
// P3 (w=1/4): dies at 0.5 in both arms, never infected.
std::vector<WeightedProfile> three_profiles() {
  return {
      {PotentialOutcomeProfile{kNever, 2.0, kNever, 2.0}, 0.5},
      {PotentialOutcomeProfile{kNever, 2.0, 0.5, 2.0}, 0.25},
      {PotentialOutcomeProfile{kNever, 0.5, kNever, 0.5}, 0.25},
  };
}

}  // namespace

TEST_CASE("default grid is evenly spaced and ends at the horizon") {
  const auto g = default_grid(52, 1.0);
  REQUIRE(g.size() == 52);
  CHECK(g.front() == Approx(1.0 / 52).epsilon(1e-15));
  CHECK(g.back() == 1.0);
  for (std::size_t i = 1; i < g.size(); ++i)
    CHECK(g[i] - g[i - 1] == Approx(1.0 / 52).epsilon(1e-12));
  const auto h = default_grid(4, 0.5);
  CHECK(h == std::vector<double>{0.125, 0.25, 0.375, 0.5});
}

TEST_CASE("hand-worked three-profile population") {
  const auto pop = three_profiles();
  const std::vector<double> grid = {0.25, 0.5, 0.75, 1.0};
  const OracleReport rep = oracle_estimands(pop, grid, 1.0);

  // Stratum proportions.
  CHECK(rep.pi_as == Approx(0.75).epsilon(1e-15));
  CHECK(rep.pi_ios == Approx(0.75).epsilon(1e-15));
  CHECK(rep.pi_ai == 0.0);

  // Type masses: P1 is never-infected always-survivor, P2 is a
  // survivor infected under treatment only, P3 is doomed either way.
  CHECK(rep.pt_probs[classify_patient_type({false, true, false, true}).value - 1] == 0.5);
  CHECK(rep.pt_probs[classify_patient_type({false, true, true, true}).value - 1] == 0.25);
  CHECK(rep.pt_probs[classify_patient_type({false, false, false, false}).value - 1] == 0.25);
  double mass = 0.0;
  for (double m : rep.pt_probs) mass += m;
  CHECK(mass == Approx(1.0).epsilon(1e-15));

  // Within the infected-or-survivor stratum only P2 is ever infected,
  // treated arm only, from 0.5 on: effect = (1/4)/(3/4) = 1/3.
  REQUIRE(rep.fice_diff.defined);
  CHECK(rep.fice_diff.value[0] == 0.0);
  CHECK(rep.fice_diff.value[1] == Approx(1.0 / 3).epsilon(1e-15));
  CHECK(rep.fice_diff.value[3] == Approx(1.0 / 3).epsilon(1e-15));
  // Always-survivors coincide with that stratum here.
  CHECK(rep.sace_diff.value[3] == Approx(1.0 / 3).epsilon(1e-15));
  // Whole-population infection-risk contrast.
  CHECK(rep.total_diff.value[0] == 0.0);
  CHECK(rep.total_diff.value[3] == Approx(0.25).epsilon(1e-15));

  // Control-arm infection risk is identically zero, so every risk ratio
  // has an empty denominator.
  for (std::size_t j = 0; j < grid.size(); ++j) {
    CHECK_FALSE(rep.fice_rr.ok[j]);
    CHECK_FALSE(rep.total_rr.ok[j]);
  }

  // No always-infected subjects and no mass on the cross-over types.
  CHECK_FALSE(rep.aice_diff.defined);
  CHECK_FALSE(rep.aice_rr.defined);
  CHECK(rep.pt89_mass == 0.0);
  CHECK_FALSE(rep.pt89_diff.defined);

  SUBCASE("observed functionals under randomization") {
    const ObservedFunctionals f =
        oracle_observed_functionals(pop, 0.5, grid, 1.0);
    CHECK(f.epsi[0] == Approx(0.75).epsilon(1e-15));
    CHECK(f.epsi[1] == Approx(0.75).epsilon(1e-15));
    CHECK(f.ef1_r[0] == 0.0);
    CHECK(f.ef1_r[1] == Approx(0.25).epsilon(1e-15));
    CHECK(f.eboth0 == 0.0);
    CHECK(f.ef1[1][0] == 0.0);
    CHECK(f.ef1[1][1] == Approx(0.25).epsilon(1e-15));
    CHECK(f.ef1[0] == std::vector<double>(4, 0.0));
    CHECK_NOTHROW(validate_functionals(f));
    // Randomization probability cannot change population functionals.
    const ObservedFunctionals g2 =
        oracle_observed_functionals(pop, 0.9, grid, 1.0);
    CHECK(g2.epsi[0] == f.epsi[0]);
    CHECK(g2.ef1[1] == f.ef1[1]);
  }
}

TEST_CASE("oracle matches direct counting on a simulated cohort") {
  CohortSpec spec = scenario_spec("scenario-a", 1.0, 0.5, 4000, 19);
  const SimulatedCohort cohort = simulate_cohort(spec);
  const auto pop = weight_all(cohort.profiles);
  REQUIRE(pop.size() == cohort.profiles.size());
  CHECK(pop.front().weight == 1.0);

  const std::vector<double> grid = {0.3, 0.6, 1.0};
  const double r = 1.0;
  const OracleReport rep = oracle_estimands(pop, grid, r);

  const double n = static_cast<double>(pop.size());
  double n_ios = 0, n_as = 0, n_ai = 0, inf1_ios = 0, inf0_ios = 0;
  double inf1_all = 0, inf0_all = 0;
  const double t = grid[1];
  for (const auto& p : cohort.profiles) {
    const auto q = indicators_from_profile(p, r);
    const auto fl = stratum_flags(classify_patient_type(q));
    n_ios += fl.infected_or_survivor;
    n_as += fl.always_survivor;
    n_ai += fl.always_infected;
    if (fl.infected_or_survivor) {
      inf1_ios += p.t1_1 <= t;
      inf0_ios += p.t1_0 <= t;
    }
    inf1_all += p.t1_1 <= t;
    inf0_all += p.t1_0 <= t;
  }
  CHECK(rep.pi_ios == Approx(n_ios / n).epsilon(1e-12));
  CHECK(rep.pi_as == Approx(n_as / n).epsilon(1e-12));
  CHECK(rep.pi_ai == Approx(n_ai / n).epsilon(1e-12));
  REQUIRE(n_ios > 0);
  CHECK(rep.fice_diff.value[1] ==
        Approx((inf1_ios - inf0_ios) / n_ios).epsilon(1e-12));
  CHECK(rep.total_diff.value[1] ==
        Approx((inf1_all - inf0_all) / n).epsilon(1e-12));

  const ObservedFunctionals f = oracle_observed_functionals(pop, 0.5, grid, r);
  double surv_or_inf0 = 0;
  for (const auto& p : cohort.profiles)
    surv_or_inf0 += (p.t1_0 <= r || p.t2_0 > r);
  CHECK(f.epsi[0] == Approx(surv_or_inf0 / n).epsilon(1e-12));
  CHECK(f.ef1[1][1] == Approx(inf1_all / n).epsilon(1e-12));
}

TEST_CASE("oracle input validation") {
  const auto pop = three_profiles();
  CHECK_THROWS_AS(oracle_estimands(pop, std::vector<double>{0.5, 0.4}, 1.0),
                  std::invalid_argument);  // not nondecreasing
  CHECK_THROWS_AS(oracle_estimands(pop, std::vector<double>{0.5, 1.5}, 1.0),
                  std::invalid_argument);  // beyond the horizon
  CHECK_THROWS_AS(oracle_estimands(pop, std::vector<double>{0.0, 0.5}, 1.0),
                  std::invalid_argument);  // grid must sit inside (0, r]
  CHECK_THROWS_AS(
      oracle_estimands(std::vector<WeightedProfile>{}, std::vector<double>{0.5},
                       1.0),
      std::invalid_argument);
  auto neg = pop;
  neg[0].weight = -0.1;
  CHECK_THROWS_AS(oracle_estimands(neg, std::vector<double>{0.5}, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(oracle_observed_functionals(pop, 0.0, std::vector<double>{0.5}, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(oracle_observed_functionals(pop, 1.0, std::vector<double>{0.5}, 1.0),
                  std::invalid_argument);
}
