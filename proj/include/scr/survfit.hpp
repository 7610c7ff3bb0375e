#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "scr/domain.hpp"

namespace scr {

/// Right-continuous nondecreasing step function with jumps at strictly
/// increasing times: at(t) = sum of jumps with time <= t. Evaluation outside
/// the jump range follows from right-continuity (0 before the first jump,
/// the total after the last).
class StepFunction {
 public:
  StepFunction() = default;
  StepFunction(std::vector<double> times, std::vector<double> jumps);

  double at(double t) const;
  double jump_at(double t) const;
  double total() const { return cum_.empty() ? 0.0 : cum_.back(); }
  std::size_t size() const { return times_.size(); }
  bool empty() const { return times_.empty(); }

  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& jumps() const { return jumps_; }
  /// Inclusive prefix sums of the jumps (same length as times()).
  const std::vector<double>& cumulative() const { return cum_; }

 private:
  std::vector<double> times_, jumps_, cum_;
};

/// One fitted transition: log-hazard-ratio coefficients plus a step baseline
/// cumulative hazard. `pinned[j]` marks coefficients frozen at zero (constant
/// column or no events).
struct CoxComponent {
  std::vector<double> beta;
  std::vector<std::uint8_t> pinned;
  StepFunction baseline;
};

/// q-th derivative (q in {0,1,2}) of the Gamma(1/theta, theta) Laplace
/// transform at k >= 0, i.e. E[(-gamma)^q e^(-gamma k)] up to sign:
///   q=0: (1+theta k)^(-1/theta)
///   q=1: -(1+theta k)^(-1/theta-1)
///   q=2: (1+theta)(1+theta k)^(-1/theta-2)
/// theta == 0 gives the degenerate-frailty limits (+-e^(-k)).
double gamma_laplace_deriv(double theta, double k, int q);

/// log of (-1)^q * (q-th Laplace derivative) -- always finite for k >= 0.
double log_gamma_laplace_deriv_abs(double theta, double k, int q);

/// Posterior mean and mean-log of the frailty given a subject's cumulative
/// exposure k and event count delta_prime in {0,1,2}: the posterior is
/// Gamma(1/theta + delta_prime, rate 1/theta + k), so
///   mean     = (1 + theta * delta_prime) / (1 + theta * k)
///   log mean = digamma(1/theta + delta_prime) - log(1/theta + k).
struct FrailtyPosterior {
  double mean = 1.0;
  double mean_log = 0.0;
};
FrailtyPosterior posterior_frailty_moments(double theta, double k,
                                           int delta_prime);

/// Cumulative-hazard exposure of one record under the three fitted
/// transitions: k = L01(y1) e^(x b01) + L02(y1) e^(x b02)
///                 + d1 [L12(y2) - L12(y1)] e^(x b12).
double compute_k(const ObservedRecord& rec, const CoxComponent& c01,
                 const CoxComponent& c02, const CoxComponent& c12);

/// Flat dataset for one Cox fit. Row i is at risk on (entry[i], exit[i]] and
/// has an event at exit[i] when event[i] != 0; offset enters the linear
/// predictor additively. x is row-major with p columns.
struct CoxData {
  std::size_t n = 0, p = 0;
  std::vector<double> entry, exit, offset;
  std::vector<std::uint8_t> event;
  std::vector<double> x;
};

struct CoxOptions {
  double tol = 1e-8;     // max absolute score component at convergence
  int max_iter = 60;
  double beta_cap = 30.0;  // divergence guard (monotone likelihood)
};

struct CoxFitResult {
  std::vector<double> beta;
  std::vector<std::uint8_t> pinned;
  int iterations = 0;
  bool converged = false;
  double max_score = 0.0;
  double loglik = 0.0;
};

/// Breslow-ties Newton-Raphson maximizer of the partial likelihood with
/// left-truncated risk sets and offsets. Constant columns are pinned to zero;
/// a coefficient running past beta_cap with a non-vanishing score throws
/// std::runtime_error (monotone likelihood). Requires at least one event.
CoxFitResult cox_newton(const CoxData& data, const CoxOptions& opts = {},
                        const std::vector<double>* warm_start = nullptr);

/// Breslow baseline cumulative hazard at the fitted coefficients: a jump
/// d(t) / sum_{at risk} e^(x b + offset) at every distinct event time.
StepFunction breslow(const CoxData& data, const std::vector<double>& beta);

/// One subject's E-step state at the fitted parameters.
struct SubjectPosterior {
  double k = 0.0;
  int delta_prime = 0;
  double mean = 1.0;
  double mean_log = 0.0;
};

struct EmOptions {
  double tol = 1e-5;  // relative sup-norm change on (beta, theta)
  int max_iter = 2000;
  double theta_init = 1.0;
  std::optional<double> fixed_theta;  // freeze the frailty variance
  CoxOptions cox;
  // Search window for log(theta) in the variance update.
  double log_theta_lo = -10.0, log_theta_hi = 5.0;
};

/// Fit of one arm's three-transition frailty model.
struct ArmFit {
  int arm = 0;
  std::size_t n = 0, p = 0;
  CoxComponent c01, c02, c12;
  double theta = 0.0;
  std::vector<SubjectPosterior> subjects;
  int iterations = 0;
  bool converged = false;
  double final_change = 0.0;
  double final_loglik_change = 0.0;
  double loglik = 0.0;
  std::vector<double> loglik_path;  // marginal log-likelihood after each M-step
  std::vector<std::string> warnings;
};

/// Both arms, fit independently.
struct FrailtyIllnessDeathFit {
  ArmFit arm0, arm1;
};

/// Thrown when the EM hits max_iter; carries the last iterate.
class EmNotConverged : public std::runtime_error {
 public:
  EmNotConverged(std::string msg, ArmFit last)
      : std::runtime_error(std::move(msg)), last_iterate(std::move(last)) {}
  ArmFit last_iterate;
};

/// EM fit of the Gamma-frailty illness-death model on one arm's records
/// (all records must carry the same arm). E-step: closed-form posterior
/// frailty moments. M-step: three offset Cox fits + Breslow baselines, then
/// a one-dimensional search for the frailty variance. The marginal
/// log-likelihood ascends every iteration.
ArmFit em_fit(const std::vector<ObservedRecord>& records,
              const EmOptions& opts = {});

/// Observed-data (marginal) log-likelihood of the given parameters, with the
/// baseline hazard mass at event times taken from the step-function jumps.
/// Throws if some subject has an event where its baseline carries no jump.
double marginal_loglik(const std::vector<ObservedRecord>& records,
                       const CoxComponent& c01, const CoxComponent& c02,
                       const CoxComponent& c12, double theta);

/// Convenience: em_fit per arm over a mixed-arm dataset.
FrailtyIllnessDeathFit fit_both_arms(const std::vector<ObservedRecord>& records,
                                     const EmOptions& opts = {});

}  // namespace scr
