#include "scr/domain.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace scr {

namespace {

void check_arm_times(double t1, double t2, const char* arm) {
  if (std::isnan(t1) || std::isnan(t2))
    throw std::invalid_argument(std::string("profile: NaN time under arm ") + arm);
  if (!(t2 > 0.0) || std::isinf(t2))
    throw std::invalid_argument(std::string("profile: death time under arm ") + arm +
                                " must be finite and positive");
  if (!(t1 > 0.0))
    throw std::invalid_argument(std::string("profile: infection time under arm ") +
                                arm + " must be positive");
  if (std::isfinite(t1) && t1 > t2)
    throw std::invalid_argument(std::string("profile: infection after death under arm ") +
                                arm);
}

inline int quad_index(const IndicatorQuadruple& q) {
  return (q.i0 << 3) | (q.s0 << 2) | (q.i1 << 1) | static_cast<int>(q.s1);
}

// Patient type by (i0, s0, i1, s1) bit pattern, canonical table order.
constexpr std::array<int, 16> kTypeOfIndex = {
    1, 5, 4, 7, 3, 11, 9, 15, 2, 8, 10, 13, 6, 14, 12, 16};

constexpr std::array<int, 17> kIndexOfType = [] {
  std::array<int, 17> inv{};
  for (int idx = 0; idx < 16; ++idx) inv[kTypeOfIndex[idx]] = idx;
  return inv;
}();

void check_type(PatientType pt) {
  if (pt.value < 1 || pt.value > 16)
    throw std::invalid_argument("patient type outside 1..16");
}

}  // namespace

void validate_profile(const PotentialOutcomeProfile& p) {
  check_arm_times(p.t1_0, p.t2_0, "0");
  check_arm_times(p.t1_1, p.t2_1, "1");
}

IndicatorQuadruple indicators_from_profile(const PotentialOutcomeProfile& p,
                                           double r) {
  if (!(r > 0.0 && r <= 1.0))
    throw std::invalid_argument("horizon must lie in (0, 1]");
  validate_profile(p);
  return {p.t1_0 <= r, p.t2_0 > r, p.t1_1 <= r, p.t2_1 > r};
}

PatientType classify_patient_type(const IndicatorQuadruple& q) {
  return {kTypeOfIndex[quad_index(q)]};
}

IndicatorQuadruple quadruple_of_type(PatientType pt) {
  check_type(pt);
  const int idx = kIndexOfType[pt.value];
  return {(idx & 8) != 0, (idx & 4) != 0, (idx & 2) != 0, (idx & 1) != 0};
}

StratumFlags stratum_flags(PatientType pt) {
  const IndicatorQuadruple q = quadruple_of_type(pt);
  return {q.s0 && q.s1, q.i0 && q.i1, (q.i0 || q.s0) && (q.i1 || q.s1)};
}

bool excluded_by(PatientType pt, ExclusionRule rule) {
  const IndicatorQuadruple q = quadruple_of_type(pt);
  switch (rule) {
    case ExclusionRule::orp:
      // Infected under arm 0 must stay infected under arm 1.
      return q.i0 && !q.i1;
    case ExclusionRule::ios_orp:
      return (q.i0 || q.s0) && !(q.i1 || q.s1);
    case ExclusionRule::weak_orp:
      return q.i0 && !(q.i1 || q.s1);
    case ExclusionRule::monotonicity:
      // Survival must not be harmed by arm 1.
      return q.s0 && !q.s1;
  }
  throw std::logic_error("unreachable");
}

ObservedRecord observe(const PotentialOutcomeProfile& p, int arm,
                       std::optional<double> censor, double admin_horizon) {
  validate_profile(p);
  if (arm != 0 && arm != 1) throw std::invalid_argument("arm must be 0 or 1");
  if (!(admin_horizon > 0.0))
    throw std::invalid_argument("administrative horizon must be positive");
  if (censor && !(*censor > 0.0))
    throw std::invalid_argument("censoring time must be positive");

  const double t1 = arm == 0 ? p.t1_0 : p.t1_1;
  const double t2 = arm == 0 ? p.t2_0 : p.t2_1;
  const double cut = std::fmin(censor.value_or(admin_horizon), admin_horizon);

  ObservedRecord rec;
  rec.arm = arm;
  rec.y2 = std::fmin(t2, cut);
  rec.y1 = std::fmin(std::isfinite(t1) ? t1 : rec.y2, rec.y2);
  rec.d1 = std::isfinite(t1) && t1 <= cut;  // ties go to the event
  rec.d2 = t2 <= cut;
  return rec;
}

}  // namespace scr
