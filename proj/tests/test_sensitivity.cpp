// Cross-world frailty identification: frailty-conditional laws against
// constant-hazard closed forms, cell coherence, symmetry and degenerate
// reductions of the identified effects, stratum accounting, and determinism
// across seeds and thread counts.

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "scr/domain.hpp"
#include "scr/parallel.hpp"
#include "scr/rng.hpp"
#include "scr/sensitivity.hpp"
#include "scr/simulate.hpp"

using namespace scr;
using doctest::Approx;

namespace {

// Constant-hazard arm: shape-1 transitions so every conditional quantity has
// a closed form against which the step-baseline evaluation is checked.
ArmModel exponential_arm(std::size_t n_jumps) {
  const std::array<TransitionHazardSpec, 3> hz = {
      TransitionHazardSpec{1.0, 0.8, {0.3}},
      TransitionHazardSpec{1.0, 2.0, {-0.2}},
      TransitionHazardSpec{1.0, 1.6, {0.1}},
  };
  return arm_model_from_specs(hz, 1.0, n_jumps, 1.0);
}

struct ClosedForm {
  double a01, a02, a12;  // frailty-and-covariate-scaled constant hazards
  double A() const { return a01 + a02; }
  double f1(double t) const { return a01 / A() * (1.0 - std::exp(-A() * t)); }
  double c01(double r) const { return std::exp(-A() * r); }
  double c11(double r) const {
    return a01 / (A() - a12) * (std::exp(-a12 * r) - std::exp(-A() * r));
  }
  double j11(double t, double r) const {
    return a01 * std::exp(-a12 * r) / (A() - a12) *
           (1.0 - std::exp(-(A() - a12) * t));
  }
};

ClosedForm closed_form(double gamma, double x) {
  return {gamma * std::exp(0.3 * x) / 0.8, gamma * std::exp(-0.2 * x) / 2.0,
          gamma * std::exp(0.1 * x) / 1.6};
}

}  // namespace

TEST_CASE("conditional law matches constant-hazard closed forms") {
  const ArmModel m = exponential_arm(5000);
  const std::vector<double> grid = {0.25, 0.5, 1.0};
  const std::vector<double> x = {0.5};
  const double r = 1.0;
  const ConditionalLawEvaluator ev(m, x, grid, r);
  REQUIRE(ev.grid_size() == 3);

  for (double gamma : {1.0, 2.3}) {
    const ClosedForm cf = closed_form(gamma, 0.5);
    const ConditionalCurves c = ev.curves(gamma);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(c.f1[i] == Approx(cf.f1(grid[i])).epsilon(2e-3));
      CHECK(c.joint11[i] == Approx(cf.j11(grid[i], r)).epsilon(2e-3));
    }
    CHECK(c.c01 == Approx(cf.c01(r)).epsilon(2e-3));
    CHECK(c.c11 == Approx(cf.c11(r)).epsilon(2e-3));

    // Exact structural identities (no discretization error).
    CHECK(c.c11 + c.c10 + c.c01 + c.c00 == Approx(1.0).epsilon(1e-13));
    CHECK(c.f1_r == Approx(c.c11 + c.c10).epsilon(1e-13));
    CHECK(c.psi == Approx(c.f1_r + c.c01).epsilon(1e-13));
    CHECK(c.f1.back() == Approx(c.f1_r).epsilon(1e-13));
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(c.f1[i] >= (i ? c.f1[i - 1] : 0.0) - 1e-15);
      CHECK(c.joint11[i] <= c.f1[i] + 1e-15);
      CHECK(c.joint11[i] <= c.c11 + 1e-15);
    }
    CHECK(c.joint11.back() == Approx(c.c11).epsilon(1e-13));
  }

  SUBCASE("frailty enters as a power on the no-event survivor") {
    const ConditionalCurves c1 = ev.curves(1.0);
    const ConditionalCurves c2 = ev.curves(2.0);
    CHECK(c2.c01 == Approx(c1.c01 * c1.c01).epsilon(1e-12));
  }

  SUBCASE("free-function wrapper agrees with the evaluator") {
    const ConditionalCurves a = ev.curves(1.4);
    const ConditionalCurves b =
        conditional_curves(m.c01, m.c02, m.c12, x, 1.4, grid, r);
    CHECK(a.f1 == b.f1);
    CHECK(a.c11 == b.c11);
    CHECK(a.psi == b.psi);
  }

  SUBCASE("zero baselines mean no events and certain survival") {
    ArmModel z;
    z.theta = 0.5;
    z.c01 = z.c02 = z.c12 = CoxComponent{{0.0}, {0}, StepFunction{}};
    const ConditionalCurves c = ConditionalLawEvaluator(z, x, grid, r).curves(1.7);
    CHECK(c.f1 == std::vector<double>(3, 0.0));
    CHECK(c.c01 == 1.0);
    CHECK(c.psi == 1.0);
  }

  SUBCASE("symmetric unit hazards at a dense grid") {
    // lam01 = lam02 = 1, gamma = 1: F1(1) -> (1 - e^-2)/2.
    const std::array<TransitionHazardSpec, 3> hz = {
        TransitionHazardSpec{1.0, 1.0, {0.0}},
        TransitionHazardSpec{1.0, 1.0, {0.0}},
        TransitionHazardSpec{1.0, 1.0, {0.0}},
    };
    const ArmModel u = arm_model_from_specs(hz, 0.0, 20000, 1.0);
    const std::vector<double> g1 = {1.0};
    const ConditionalCurves c =
        ConditionalLawEvaluator(u, std::vector<double>{0.0}, g1, 1.0).curves(1.0);
    CHECK(c.f1_r == Approx(0.5 * (1.0 - std::exp(-2.0))).epsilon(5e-4));
  }
}

TEST_CASE("identified effects: symmetry, reductions, and accounting") {
  const ArmModel m = exponential_arm(400);
  const std::vector<std::vector<double>> rows = {{0.2}, {0.9}};
  const std::vector<double> grid = default_grid(8, 1.0);
  const double r = 1.0;

  SUBCASE("identical arms at perfectly correlated frailties: exact zero") {
    const SensitivityReport rep =
        identify_report(m, m, 1.0, rows, grid, r, 400, 3);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(rep.fice_diff.curve.value[i] == 0.0);
      CHECK(rep.sace_diff.curve.value[i] == 0.0);
      CHECK(rep.total_diff.curve.value[i] == 0.0);
      if (rep.fice_rr.curve.ok[i])
        CHECK(rep.fice_rr.curve.value[i] == Approx(1.0).epsilon(1e-12));
    }
    CHECK(rep.fice_at_horizon == 0.0);
    CHECK_FALSE(rep.nnh.has_value());
  }

  SUBCASE("identical arms at independent frailties: zero within noise") {
    const SensitivityReport rep =
        identify_report(m, m, 0.0, rows, grid, r, 4000, 3);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      REQUIRE(rep.fice_diff.se[i] > 0.0);
      CHECK(std::fabs(rep.fice_diff.curve.value[i]) <=
            4.0 * rep.fice_diff.se[i] + 1e-9);
    }
  }

  SUBCASE("stratum accounting") {
    const SensitivityReport rep =
        identify_report(m, m, 0.4, rows, grid, r, 2000, 11);
    double total = 0.0, ios = 0.0, as = 0.0, ai = 0.0, m89 = 0.0;
    for (int pt = 1; pt <= 16; ++pt) {
      const double p = rep.pt_probs[pt - 1];
      CHECK(p >= 0.0);
      total += p;
      const StratumFlags fl = stratum_flags(PatientType{pt});
      if (fl.infected_or_survivor) ios += p;
      if (fl.always_survivor) as += p;
      if (fl.always_infected) ai += p;
      if (pt == 8 || pt == 9) m89 += p;
    }
    CHECK(total == Approx(1.0).epsilon(1e-10));
    CHECK(rep.pi_ios == Approx(ios).epsilon(1e-10));
    CHECK(rep.pi_as == Approx(as).epsilon(1e-10));
    CHECK(rep.pi_ai == Approx(ai).epsilon(1e-10));
    CHECK(rep.pt89_mass == Approx(m89).epsilon(1e-10));
    CHECK(rep.pi_ios_se > 0.0);
    // The always-infected contrast closes at the horizon.
    REQUIRE(rep.aice_diff.curve.defined);
    CHECK(std::fabs(rep.aice_diff.curve.value.back()) <=
          3.0 * rep.aice_diff.se.back() + 1e-12);
    CHECK(rep.fice_at_horizon == rep.fice_diff.curve.value.back());
  }

  SUBCASE("no death hazard reduces the effect to the whole-population one") {
    ArmModel live0 = m, live1 = m;
    live0.c02 = live0.c12 = CoxComponent{{0.0}, {0}, StepFunction{}};
    live1 = live0;
    live1.c01 = discretize_weibull(TransitionHazardSpec{1.0, 0.5, {0.3}}, 400, 1.0);
    const SensitivityReport rep =
        identify_report(live0, live1, 0.3, rows, grid, r, 800, 5);
    CHECK(rep.pi_ios == Approx(1.0).epsilon(1e-12));
    CHECK(rep.pi_as == Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(rep.fice_diff.curve.value[i] ==
            Approx(rep.total_diff.curve.value[i]).epsilon(1e-10));
      CHECK(rep.sace_diff.curve.value[i] ==
            Approx(rep.total_diff.curve.value[i]).epsilon(1e-10));
    }
  }

  SUBCASE("focused view slices the full report") {
    const SensitivityReport rep =
        identify_report(m, m, 0.5, rows, grid, r, 600, 9);
    const FiceIdentification fi = identify_fice(m, m, 0.5, rows, grid, r, 600, 9);
    CHECK(fi.pi_ios == rep.pi_ios);
    CHECK(fi.pi_ios_se == rep.pi_ios_se);
    CHECK(fi.diff.curve.value == rep.fice_diff.curve.value);
    CHECK(fi.rr.curve.value == rep.fice_rr.curve.value);
    const StrataIdentification si = identify_strata(m, m, 0.5, rows, r, 600, 9);
    CHECK(si.pi_ios == rep.pi_ios);
    CHECK(si.pt_probs == rep.pt_probs);
  }

  SUBCASE("inadmissible correlation and bad draw counts are rejected") {
    ArmModel hot = m;
    hot.theta = 4.0;  // rho_max(1, 4) = 0.5
    CHECK(rho_max(1.0, 4.0) == Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(identify_report(m, hot, 0.6, rows, grid, r, 400, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(identify_report(m, m, -0.1, rows, grid, r, 400, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(identify_report(m, m, 0.5, rows, grid, r, 3, 1),
                    std::invalid_argument);
    const std::vector<std::vector<double>> no_rows;
    CHECK_THROWS_AS(identify_report(m, m, 0.5, no_rows, grid, r, 400, 1),
                    std::invalid_argument);
  }

  SUBCASE("seed changes the draws, thread count does not") {
    const SensitivityReport a = identify_report(m, m, 0.5, rows, grid, r, 400, 1);
    const SensitivityReport b = identify_report(m, m, 0.5, rows, grid, r, 400, 2);
    CHECK(a.pi_ios != b.pi_ios);
    set_max_threads(4);
    const SensitivityReport c4 = identify_report(m, m, 0.5, rows, grid, r, 400, 1);
    set_max_threads(1);
    const SensitivityReport c1 = identify_report(m, m, 0.5, rows, grid, r, 400, 1);
    set_max_threads(0);
    CHECK(c4.pi_ios == a.pi_ios);
    CHECK(c1.pi_ios == a.pi_ios);
    CHECK(c4.fice_diff.curve.value == a.fice_diff.curve.value);
    CHECK(c1.fice_diff.curve.value == a.fice_diff.curve.value);
  }
}

TEST_CASE("number needed to harm") {
  REQUIRE(nnh(0.25).has_value());
  CHECK(*nnh(0.25) == Approx(4.0).epsilon(1e-14));
  REQUIRE(nnh(-0.1).has_value());
  CHECK(*nnh(-0.1) == Approx(-10.0).epsilon(1e-12));
  CHECK_FALSE(nnh(0.0).has_value());
}
