#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace scr {

/// Sentinel for "the non-terminal event never occurs within follow-up".
inline constexpr double kNever = std::numeric_limits<double>::infinity();

/// Joint potential outcomes of one subject under both treatment arms.
/// t1_a is the infection time under arm a (kNever if none); t2_a is the
/// death time under arm a (always finite and positive, possibly far past
/// the follow-up horizon). Death truncates infection: t1_a <= t2_a whenever
/// t1_a is finite.
struct PotentialOutcomeProfile {
  double t1_0 = kNever;
  double t2_0 = 0.0;
  double t1_1 = kNever;
  double t2_1 = 0.0;
};

/// Horizon-r event indicators: i_a = infection by r, s_a = survival past r.
struct IndicatorQuadruple {
  bool i0 = false, s0 = false, i1 = false, s1 = false;
};

/// One of the 16 joint patterns an IndicatorQuadruple can take, numbered in
/// the canonical table order used throughout this project.
struct PatientType {
  int value = 0;  // 1..16
  friend bool operator==(PatientType a, PatientType b) { return a.value == b.value; }
};

/// Principal-stratum memberships determined by the patient type.
struct StratumFlags {
  bool always_survivor = false;    // s0 and s1
  bool always_infected = false;    // i0 and i1
  bool infected_or_survivor = false;  // (i0 or s0) and (i1 or s1)
};

/// Cross-world restrictions a patient type can violate.
enum class ExclusionRule { orp, ios_orp, weak_orp, monotonicity };

/// One row of an observed semi-competing-risks dataset. y1 is the earlier of
/// infection/death/censoring/end-of-follow-up, y2 the earlier of
/// death/censoring/end-of-follow-up; d1, d2 flag whether infection and death
/// were observed. Covariates x follow the dataset's column order.
struct ObservedRecord {
  std::string id;
  int arm = 0;  // 0 or 1
  double y1 = 0.0;
  bool d1 = false;
  double y2 = 0.0;
  bool d2 = false;
  std::vector<double> x;
};

/// Throws std::invalid_argument unless 0 < t2_a, t1_a > 0, and t1_a <= t2_a
/// whenever finite, for both arms.
void validate_profile(const PotentialOutcomeProfile& p);

/// Event indicators of a profile at horizon r in (0, 1].
IndicatorQuadruple indicators_from_profile(const PotentialOutcomeProfile& p,
                                           double r);

/// Bijection between indicator quadruples and the 16 patient types.
PatientType classify_patient_type(const IndicatorQuadruple& q);
IndicatorQuadruple quadruple_of_type(PatientType pt);

StratumFlags stratum_flags(PatientType pt);

/// Whether the given cross-world restriction rules the patient type out.
bool excluded_by(PatientType pt, ExclusionRule rule);

/// Map a profile to the record observed under `arm`, with optional censoring
/// and administrative end of follow-up at `admin_horizon` (default 1).
/// Ties are resolved in favour of the event: an event at exactly the
/// censoring time is observed. Simultaneous infection and death (t1 == t2)
/// records infection first (d1 = d2 = 1, y1 == y2).
ObservedRecord observe(const PotentialOutcomeProfile& p, int arm,
                       std::optional<double> censor = std::nullopt,
                       double admin_horizon = 1.0);

}  // namespace scr
