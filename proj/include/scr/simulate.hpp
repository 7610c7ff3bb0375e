#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scr/domain.hpp"
#include "scr/rng.hpp"
#include "scr/survfit.hpp"

namespace scr {

/// Weibull baseline hazard with proportional covariate effects:
/// cumulative baseline L(t) = (t / scale)^shape, so shape 1 is a constant
/// hazard of 1/scale. beta holds one log-hazard-ratio per covariate.
struct TransitionHazardSpec {
  double shape = 1.0;
  double scale = 1.0;
  std::vector<double> beta;

  double cum_hazard(double t) const;
  /// Inverse of the cumulative baseline: smallest t with L(t) = h.
  double inverse_cum(double h) const;
};

void validate_hazard(const TransitionHazardSpec& h);

/// Frailty variances per arm plus the cross-arm correlation. theta == 0
/// degenerates that arm's frailty to the constant 1.
struct FrailtyConfig {
  double theta0 = 0.0;
  double theta1 = 0.0;
  double rho = 0.0;
};

enum class CovariateKind { bernoulli, uniform, normal };
struct CovariateGen {
  CovariateKind kind = CovariateKind::uniform;
  double a = 0.0, b = 1.0;  // bernoulli(a); uniform(a, b); normal(mean a, sd b)
};

/// Treatment assignment: randomized with Pr(A=1) = p, or logistic in the
/// covariates (coef = intercept followed by one slope per covariate).
struct TreatmentMechanism {
  bool randomized = true;
  double p = 0.5;
  std::vector<double> coef;
};

struct CohortSpec {
  std::size_t n = 0;
  std::vector<CovariateGen> covariates;
  /// hazards[arm][k] with k = 0: healthy->infected, 1: healthy->dead,
  /// 2: infected->dead (calendar clock).
  std::array<std::array<TransitionHazardSpec, 3>, 2> hazards;
  FrailtyConfig frailty;
  TreatmentMechanism treatment;
  std::uint64_t seed = 0;
  /// Share the latent uniforms between the two worlds of a subject, so arms
  /// with identical hazard laws produce identical outcomes pathwise.
  bool common_randomness = false;
  /// Optional independent Uniform(lo, hi) censoring of the observed records.
  std::optional<std::pair<double, double>> censor_uniform;
};

void validate_cohort_spec(const CohortSpec& spec);

struct SimulatedCohort {
  std::vector<PotentialOutcomeProfile> profiles;
  std::vector<std::array<double, 2>> gammas;
  std::vector<std::vector<double>> x;
  std::vector<int> arm;
  std::vector<ObservedRecord> records;
};

/// Draw one world's (t1, t2) for a subject: latent race between the two
/// out-of-healthy transitions by inverse transform, then -- if infection
/// wins -- a death time from the post-infection hazard left-truncated at the
/// infection time on the calendar clock. Consumes exactly three uniforms.
std::pair<double, double> simulate_world(
    const std::array<TransitionHazardSpec, 3>& hazards,
    std::span<const double> x, double gamma, Stream& u);

/// Simulate a full cohort. Every subject draws from its own (seed, index)
/// substreams, so output is byte-stable under any thread count and any
/// subject ordering of the computation.
SimulatedCohort simulate_cohort(const CohortSpec& spec);

/// Built-in data-generating designs; name is "scenario-a" or "scenario-b".
/// theta applies to both arms.
CohortSpec scenario_spec(const std::string& name, double theta, double rho,
                         std::size_t n, std::uint64_t seed);

/// Step-function approximation of a Weibull transition on an even time grid
/// over (0, horizon], for evaluating identification formulas at known
/// parameters.
CoxComponent discretize_weibull(const TransitionHazardSpec& h,
                                std::size_t n_jumps, double horizon);

}  // namespace scr
