#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scr/domain.hpp"

namespace scr {

/// Logistic model for Pr(A = 1 | X), intercept first. Redundant design
/// columns are pinned to zero (with a warning); complete separation raises.
struct PropensityModel {
  std::vector<double> coefficients;  // size p + 1, intercept first
  std::vector<std::uint8_t> pinned;  // parallel to coefficients
  std::vector<double> fitted;        // per record, in (0, 1)
  int iterations = 0;
  bool converged = false;
  double max_score = 0.0;
  std::vector<std::string> warnings;
};

struct PropensityOptions {
  double tol_per_obs = 1e-8;  // max |score| / n at convergence
  int max_iter = 100;
  double beta_cap = 30.0;  // divergence guard (separation)
};

PropensityModel fit_propensity(const std::vector<ObservedRecord>& records,
                               const PropensityOptions& opts = {});

struct MatchedPair {
  std::size_t index0 = 0, index1 = 0;  // record indices, by arm
  double distance = 0.0;
};

/// One-to-one match of arm-0 subjects to arm-1 subjects without replacement.
struct MatchedSet {
  std::vector<MatchedPair> pairs;
  double caliper_sd = 0.3;     // caliper in propensity-score SD units
  double caliper_width = 0.0;  // caliper_sd * sd(PS over all subjects)
  std::size_t unmatched0 = 0, unmatched1 = 0;
  bool ps_only = false;
};

/// Greedy nearest-neighbor matching without replacement: arm-0 subjects in
/// ascending propensity order each take the closest unclaimed arm-1 subject
/// (Mahalanobis distance on the raw covariates; |PS| distance when ps_only)
/// among those within the propensity caliper. Equidistant candidates break
/// toward the smaller record index; subjects with no candidate stay
/// unmatched. The covariate covariance is pooled over all subjects and
/// ridge-regularized by 1e-8 * trace / p when near-singular.
MatchedSet mahalanobis_match(const std::vector<ObservedRecord>& records,
                             const PropensityModel& ps, double caliper_sd = 0.3,
                             bool ps_only = false);

/// Standardized mean difference (mean1 - mean0) / sqrt((var1 + var0) / 2)
/// per covariate; 0 by convention when the pooled variance vanishes.
struct SmdRow {
  std::size_t covariate = 0;           // 0-based column
  double before = 0.0;                 // full sample
  std::optional<double> after;         // matched sample, when provided
};

std::vector<SmdRow> smd_table(const std::vector<ObservedRecord>& records,
                              const MatchedSet* matched = nullptr);

/// Pair-level bootstrap: resample pair indices with replacement, apply the
/// statistic, and summarize with Wald intervals.
struct BootstrapResult {
  std::vector<double> point;  // statistic on the original pairs
  std::vector<double> se;
  std::vector<double> ci_lower, ci_upper;
  int replicates = 0;  // requested
  int used = 0;        // successful
  int failures = 0;
};

/// The statistic maps a resampled list of pair indices (values in
/// [0, n_pairs)) to a fixed-length vector; it must not mutate shared state.
/// A replicate whose statistic throws is recorded and skipped; more than 10%
/// failures aborts. Replicates draw from per-replicate substreams and may run
/// in parallel.
BootstrapResult pair_bootstrap(
    std::size_t n_pairs,
    const std::function<std::vector<double>(std::span<const std::size_t>)>& statistic,
    int b = 200, std::uint64_t seed = 0);

}  // namespace scr
