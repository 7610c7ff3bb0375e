// Cohort simulation: Weibull transition mechanics, latent-race world
// construction, shared-randomness alignment, censoring, and agreement of the
// simulated infection law with its analytic frailty mixture.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "scr/rng.hpp"
#include "scr/simulate.hpp"

using namespace scr;
using doctest::Approx;

namespace {

CohortSpec small_spec(std::size_t n, std::uint64_t seed) {
  CohortSpec spec;
  spec.n = n;
  spec.seed = seed;
  spec.covariates = {{CovariateKind::bernoulli, 0.5, 0.0},
                     {CovariateKind::uniform, 0.0, 1.0}};
  spec.frailty = {1.0, 1.0, 0.5};
  spec.treatment = {true, 0.5, {}};
  spec.hazards[0] = {TransitionHazardSpec{1.5, 0.9, {0.4, -0.3}},
                     TransitionHazardSpec{1.2, 1.6, {0.2, 0.5}},
                     TransitionHazardSpec{1.1, 0.8, {-0.4, 0.3}}};
  spec.hazards[1] = {TransitionHazardSpec{1.5, 1.1, {0.4, -0.3}},
                     TransitionHazardSpec{1.2, 1.9, {0.2, 0.5}},
                     TransitionHazardSpec{1.1, 1.0, {-0.4, 0.3}}};
  return spec;
}

}  // namespace

TEST_CASE("weibull cumulative hazard and its inverse") {
  const TransitionHazardSpec h{2.5, 1.7, {}};
  for (double t : {0.1, 0.9, 1.7, 4.0}) {
    CHECK(h.cum_hazard(t) == Approx(std::pow(t / 1.7, 2.5)).epsilon(1e-12));
    CHECK(h.inverse_cum(h.cum_hazard(t)) == Approx(t).epsilon(1e-10));
  }
  CHECK(h.cum_hazard(0.0) == 0.0);
  // Shape 1 is a constant hazard 1/scale.
  const TransitionHazardSpec e{1.0, 4.0, {}};
  CHECK(e.cum_hazard(2.0) == Approx(0.5).epsilon(1e-12));
}

TEST_CASE("discretized weibull matches the exact cumulative on its grid") {
  const TransitionHazardSpec h{1.8, 0.7, {0.3}};
  const std::size_t m = 64;
  const CoxComponent c = discretize_weibull(h, m, 1.0);
  CHECK(c.beta == h.beta);
  CHECK(c.baseline.times().size() == m);
  const auto& times = c.baseline.times();
  const auto& cum = c.baseline.cumulative();
  for (std::size_t j = 0; j < m; ++j) {
    CHECK(times[j] == Approx(static_cast<double>(j + 1) / m).epsilon(1e-12));
    CHECK(cum[j] == Approx(h.cum_hazard(times[j])).epsilon(1e-10));
  }
  CHECK(times.back() == 1.0);
}

TEST_CASE("one world replays by hand from the same uniforms") {
  const auto spec = small_spec(1, 0);
  const std::vector<double> x = {1.0, 0.25};
  const double gamma = 1.37;

  Stream consumed(42, 9, 2);
  const auto [t1, t2] = simulate_world(spec.hazards[0], x, gamma, consumed);

  Stream replay(42, 9, 2);
  const double u01 = replay.next_double();
  const double u02 = replay.next_double();
  const double u12 = replay.next_double();
  auto lp = [&](const TransitionHazardSpec& h) {
    return h.beta[0] * x[0] + h.beta[1] * x[1];
  };
  const auto& hz = spec.hazards[0];
  const double l01 = hz[0].inverse_cum(-std::log(u01) /
                                       (gamma * std::exp(lp(hz[0]))));
  const double l02 = hz[1].inverse_cum(-std::log(u02) /
                                       (gamma * std::exp(lp(hz[1]))));
  if (l01 <= l02) {
    CHECK(t1 == Approx(l01).epsilon(1e-14));
    const double target = hz[2].cum_hazard(l01) -
                          std::log(u12) / (gamma * std::exp(lp(hz[2])));
    CHECK(t2 == Approx(hz[2].inverse_cum(target)).epsilon(1e-14));
    CHECK(t2 >= t1);
  } else {
    CHECK(std::isinf(t1));
    CHECK(t2 == Approx(l02).epsilon(1e-14));
  }

  SUBCASE("exactly three uniforms are consumed") {
    Stream a(7, 7, 7), b(7, 7, 7);
    simulate_world(spec.hazards[0], x, gamma, a);
    b.next_double();
    b.next_double();
    b.next_double();
    CHECK(a.next_u64() == b.next_u64());
  }
}

TEST_CASE("simulated profiles are valid and deterministic") {
  const auto spec = small_spec(500, 3);
  const SimulatedCohort c1 = simulate_cohort(spec);
  const SimulatedCohort c2 = simulate_cohort(spec);
  REQUIRE(c1.profiles.size() == 500);
  for (std::size_t i = 0; i < 500; ++i) {
    validate_profile(c1.profiles[i]);
    CHECK(c1.profiles[i].t2_0 == c2.profiles[i].t2_0);
    CHECK(c1.gammas[i][0] == c2.gammas[i][0]);
    CHECK(c1.records[i].y2 == c2.records[i].y2);
    CHECK(c1.arm[i] == c2.arm[i]);
    CHECK(c1.records[i].y2 <= 1.0);
  }
}

TEST_CASE("shared randomness aligns identical arms pathwise") {
  auto spec = small_spec(300, 8);
  spec.hazards[1] = spec.hazards[0];
  spec.frailty = {0.8, 0.8, 1.0};
  spec.common_randomness = true;
  const SimulatedCohort c = simulate_cohort(spec);
  for (std::size_t i = 0; i < c.profiles.size(); ++i) {
    CHECK(c.gammas[i][0] == c.gammas[i][1]);
    CHECK(c.profiles[i].t1_0 == c.profiles[i].t1_1);
    CHECK(c.profiles[i].t2_0 == c.profiles[i].t2_1);
  }
}

TEST_CASE("uniform censoring caps the observed records") {
  auto spec = small_spec(400, 9);
  spec.censor_uniform = std::make_pair(0.1, 0.6);
  const SimulatedCohort c = simulate_cohort(spec);
  bool some_censored_death = false;
  for (const auto& r : c.records) {
    CHECK(r.y2 <= 0.6 + 1e-15);
    if (!r.d2) some_censored_death = true;
  }
  CHECK(some_censored_death);
}

TEST_CASE("infection fraction matches the analytic frailty mixture") {
  // One arm, fixed covariates, theta > 0: Pr(T1 <= t) has the closed-form
  // mixture integral  int_0^t  lam01(u) exp(x b01) (1 + th K(u))^(-1/th - 1) du
  // with K(u) the combined out-of-healthy cumulative hazard at x.
  auto spec = small_spec(150000, 123);
  spec.covariates = {{CovariateKind::bernoulli, 1.0, 0.0},
                     {CovariateKind::uniform, 0.25, 0.25}};  // constant x
  const std::vector<double> x = {1.0, 0.25};
  const double th = spec.frailty.theta0;
  const SimulatedCohort c = simulate_cohort(spec);

  const auto& hz = spec.hazards[0];
  const double e01 = std::exp(hz[0].beta[0] * x[0] + hz[0].beta[1] * x[1]);
  const double e02 = std::exp(hz[1].beta[0] * x[0] + hz[1].beta[1] * x[1]);
  auto dens = [&](double u) {
    if (u <= 0.0) return 0.0;
    const double lam01 = e01 * hz[0].shape / hz[0].scale *
                         std::pow(u / hz[0].scale, hz[0].shape - 1.0);
    const double k = hz[0].cum_hazard(u) * e01 + hz[1].cum_hazard(u) * e02;
    return lam01 * std::pow(1.0 + th * k, -1.0 / th - 1.0);
  };
  auto simpson = [&](double t) {
    const int m = 4000;
    double s = dens(0.0) + dens(t);
    for (int j = 1; j < m; ++j)
      s += dens(t * j / m) * (j % 2 ? 4.0 : 2.0);
    return s * t / m / 3.0;
  };

  for (double t : {0.5, 1.0}) {
    std::size_t cnt = 0;
    for (const auto& p : c.profiles) cnt += p.t1_0 <= t;
    const double emp = static_cast<double>(cnt) / c.profiles.size();
    const double exact = simpson(t);
    const double mc_sd = std::sqrt(exact * (1.0 - exact) / c.profiles.size());
    CHECK(std::fabs(emp - exact) < 5.0 * mc_sd + 1e-6);
  }
}

TEST_CASE("built-in scenarios and validation") {
  const CohortSpec a = scenario_spec("scenario-a", 3.0, 0.5, 100, 7);
  CHECK_NOTHROW(validate_cohort_spec(a));
  CHECK(a.n == 100);
  CHECK(a.frailty.theta0 == 3.0);
  const CohortSpec b = scenario_spec("scenario-b", 1.0, 0.0, 50, 7);
  CHECK_NOTHROW(validate_cohort_spec(b));
  CHECK_THROWS_AS(scenario_spec("scenario-c", 1.0, 0.0, 50, 7),
                  std::invalid_argument);

  auto bad = small_spec(100, 1);
  bad.frailty.rho = 1.5;
  CHECK_THROWS_AS(validate_cohort_spec(bad), std::invalid_argument);
  auto bad2 = small_spec(100, 1);
  bad2.hazards[0][0].shape = -1.0;
  CHECK_THROWS_AS(validate_cohort_spec(bad2), std::invalid_argument);
  auto bad3 = small_spec(100, 1);
  bad3.hazards[0][0].beta = {0.1};  // wrong arity for two covariates
  CHECK_THROWS_AS(validate_cohort_spec(bad3), std::invalid_argument);
  auto bad4 = small_spec(100, 1);
  bad4.censor_uniform = std::make_pair(0.9, 0.2);
  CHECK_THROWS_AS(validate_cohort_spec(bad4), std::invalid_argument);
}
