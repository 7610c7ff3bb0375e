#include "scr/simulate.hpp"

#include <cmath>
#include <stdexcept>

#include "scr/parallel.hpp"

namespace scr {

double TransitionHazardSpec::cum_hazard(double t) const {
  if (t <= 0.0) return 0.0;
  return std::pow(t / scale, shape);
}

double TransitionHazardSpec::inverse_cum(double h) const {
  if (h <= 0.0) return 0.0;
  return scale * std::pow(h, 1.0 / shape);
}

void validate_hazard(const TransitionHazardSpec& h) {
  if (!(h.shape > 0.0) || !std::isfinite(h.shape))
    throw std::invalid_argument("hazard spec: shape must be positive");
  if (!(h.scale > 0.0) || !std::isfinite(h.scale))
    throw std::invalid_argument("hazard spec: scale must be positive");
  for (double b : h.beta)
    if (!std::isfinite(b))
      throw std::invalid_argument("hazard spec: non-finite coefficient");
}

void validate_cohort_spec(const CohortSpec& spec) {
  if (spec.n == 0) throw std::invalid_argument("cohort spec: n must be >= 1");
  const std::size_t p = spec.covariates.size();
  for (const auto& arm : spec.hazards)
    for (const auto& h : arm) {
      validate_hazard(h);
      if (h.beta.size() != p)
        throw std::invalid_argument(
            "cohort spec: coefficient count differs from covariate count");
    }
  for (const auto& c : spec.covariates) {
    switch (c.kind) {
      case CovariateKind::bernoulli:
        if (!(c.a >= 0.0 && c.a <= 1.0))
          throw std::invalid_argument("cohort spec: bernoulli p outside [0,1]");
        break;
      case CovariateKind::uniform:
        if (!(c.a < c.b))
          throw std::invalid_argument("cohort spec: uniform needs a < b");
        break;
      case CovariateKind::normal:
        if (!(c.b > 0.0))
          throw std::invalid_argument("cohort spec: normal needs sd > 0");
        break;
    }
  }
  if (spec.frailty.theta0 < 0.0 || spec.frailty.theta1 < 0.0)
    throw std::invalid_argument("cohort spec: negative frailty variance");
  if (spec.frailty.rho < 0.0 ||
      spec.frailty.rho > rho_max(spec.frailty.theta0, spec.frailty.theta1) + 1e-12)
    throw std::invalid_argument(
        "cohort spec: frailty correlation outside the admissible range");
  if (spec.treatment.randomized) {
    if (!(spec.treatment.p > 0.0 && spec.treatment.p < 1.0))
      throw std::invalid_argument("cohort spec: randomization p outside (0,1)");
  } else if (spec.treatment.coef.size() != p + 1) {
    throw std::invalid_argument(
        "cohort spec: logistic treatment needs intercept + one slope per covariate");
  }
  if (spec.censor_uniform) {
    const auto [lo, hi] = *spec.censor_uniform;
    if (!(lo >= 0.0 && lo < hi))
      throw std::invalid_argument("cohort spec: censoring window needs 0 <= lo < hi");
  }
}

std::pair<double, double> simulate_world(
    const std::array<TransitionHazardSpec, 3>& hazards,
    std::span<const double> x, double gamma, Stream& u) {
  // Fixed draw order keeps worlds aligned under shared randomness.
  const double u01 = u.next_double();
  const double u02 = u.next_double();
  const double u12 = u.next_double();

  auto lp = [&](const TransitionHazardSpec& h) {
    double v = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) v += x[j] * h.beta[j];
    return v;
  };
  const double rate01 = gamma * std::exp(lp(hazards[0]));
  const double rate02 = gamma * std::exp(lp(hazards[1]));

  const double t01 = hazards[0].inverse_cum(-std::log(u01) / rate01);
  const double t02 = hazards[1].inverse_cum(-std::log(u02) / rate02);

  if (t01 <= t02) {  // simultaneous latent arrivals resolve to infection first
    const double rate12 = gamma * std::exp(lp(hazards[2]));
    const double target = hazards[2].cum_hazard(t01) - std::log(u12) / rate12;
    return {t01, hazards[2].inverse_cum(target)};
  }
  return {kNever, t02};
}

SimulatedCohort simulate_cohort(const CohortSpec& spec) {
  validate_cohort_spec(spec);
  const std::size_t n = spec.n;
  const std::size_t p = spec.covariates.size();

  SimulatedCohort out;
  out.profiles.resize(n);
  out.gammas.resize(n);
  out.x.resize(n);
  out.arm.resize(n);
  out.records.resize(n);

  // Substream channels per subject.
  enum : std::uint64_t { chX = 0, chGamma = 1, chWorld0 = 2, chWorld1 = 3,
                         chTreat = 4, chCensor = 5 };

  parallel_chunks(n, 4096, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      std::vector<double>& xi = out.x[i];
      xi.resize(p);
      Stream sx(spec.seed, i, chX);
      for (std::size_t j = 0; j < p; ++j) {
        const auto& c = spec.covariates[j];
        switch (c.kind) {
          case CovariateKind::bernoulli:
            xi[j] = sx.next_double() < c.a ? 1.0 : 0.0;
            break;
          case CovariateKind::uniform:
            xi[j] = c.a + (c.b - c.a) * sx.next_double();
            break;
          case CovariateKind::normal:
            xi[j] = c.a + c.b * sx.next_normal();
            break;
        }
      }

      Stream sg(spec.seed, i, chGamma);
      const auto [g0, g1] = draw_bivariate_gamma(
          sg, spec.frailty.theta0, spec.frailty.theta1, spec.frailty.rho);
      out.gammas[i] = {g0, g1};

      Stream sw0(spec.seed, i, chWorld0);
      Stream sw1(spec.seed, i, spec.common_randomness ? chWorld0 : chWorld1);
      const auto [t1_0, t2_0] = simulate_world(spec.hazards[0], xi, g0, sw0);
      const auto [t1_1, t2_1] = simulate_world(spec.hazards[1], xi, g1, sw1);
      out.profiles[i] = {t1_0, t2_0, t1_1, t2_1};

      Stream st(spec.seed, i, chTreat);
      int a;
      if (spec.treatment.randomized) {
        a = st.next_double() < spec.treatment.p ? 1 : 0;
      } else {
        double lin = spec.treatment.coef[0];
        for (std::size_t j = 0; j < p; ++j)
          lin += spec.treatment.coef[j + 1] * xi[j];
        a = st.next_double() < 1.0 / (1.0 + std::exp(-lin)) ? 1 : 0;
      }
      out.arm[i] = a;

      std::optional<double> censor;
      if (spec.censor_uniform) {
        Stream sc(spec.seed, i, chCensor);
        const auto [lo, hi] = *spec.censor_uniform;
        censor = lo + (hi - lo) * sc.next_double();
      }

      ObservedRecord rec = observe(out.profiles[i], a, censor);
      rec.id = std::to_string(i + 1);
      rec.x = xi;
      out.records[i] = std::move(rec);
    }
  });
  return out;
}

CohortSpec scenario_spec(const std::string& name, double theta, double rho,
                         std::size_t n, std::uint64_t seed) {
  CohortSpec spec;
  spec.n = n;
  spec.seed = seed;
  spec.covariates = {{CovariateKind::bernoulli, 0.5, 0.0},
                     {CovariateKind::uniform, 0.0, 1.0}};
  spec.frailty = {theta, theta, rho};
  spec.treatment = {true, 0.5, {}};

  auto w = [](double shape, double scale, double b1, double b2) {
    return TransitionHazardSpec{shape, scale, {b1, b2}};
  };
  if (name == "scenario-a") {
    spec.hazards[0] = {w(2.50, 2.50, 0.00, -0.69), w(2.10, 2.25, 0.00, 0.69),
                       w(2.10, 2.75, -0.69, 0.69)};
    spec.hazards[1] = {w(2.50, 2.00, -1.39, 1.10), w(2.10, 2.75, -0.29, 0.41),
                       w(2.10, 2.25, 0.00, 0.00)};
  } else if (name == "scenario-b") {
    spec.hazards[0] = {w(1.00, 0.10, 0.00, -0.69), w(0.50, 1.00, 0.00, -0.69),
                       w(0.50, 1.00, 0.00, -0.69)};
    spec.hazards[1] = {w(1.00, 0.10, 0.00, 0.69), w(3.00, 1.00, 0.00, 0.69),
                       w(3.00, 1.00, 0.00, 0.69)};
  } else {
    throw std::invalid_argument("unknown scenario: " + name);
  }
  return spec;
}

CoxComponent discretize_weibull(const TransitionHazardSpec& h,
                                std::size_t n_jumps, double horizon) {
  validate_hazard(h);
  if (n_jumps == 0 || !(horizon > 0.0))
    throw std::invalid_argument("discretize_weibull: bad grid");
  std::vector<double> times(n_jumps), jumps(n_jumps);
  double prev = 0.0;
  for (std::size_t j = 0; j < n_jumps; ++j) {
    const double t = horizon * static_cast<double>(j + 1) /
                     static_cast<double>(n_jumps);
    const double cum = h.cum_hazard(t);
    times[j] = t;
    jumps[j] = cum - prev;
    prev = cum;
  }
  CoxComponent c;
  c.beta = h.beta;
  c.pinned.assign(h.beta.size(), 0);
  c.baseline = StepFunction(std::move(times), std::move(jumps));
  return c;
}

}  // namespace scr
