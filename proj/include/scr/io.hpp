#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "scr/bounds.hpp"
#include "scr/design.hpp"
#include "scr/domain.hpp"
#include "scr/oracle.hpp"
#include "scr/sensitivity.hpp"
#include "scr/survfit.hpp"

namespace scr {

using Json = nlohmann::ordered_json;

/// File-level failure (missing, unreadable, or unwritable file). Content
/// problems (bad header, malformed field) raise std::invalid_argument with
/// the offending line number instead.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal form that re-parses to the same bits.
std::string format_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// 64-bit FNV-1a content hash as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);
std::string hash_file(const std::string& path);

// ---- observed-data CSV: header `id,treat,y1,d1,y2,d2,x1..xp` ----
std::string observed_csv(const std::vector<ObservedRecord>& records);
std::vector<ObservedRecord> parse_observed_csv(const std::string& content);
void write_observed_csv(const std::string& path,
                        const std::vector<ObservedRecord>& records);
std::vector<ObservedRecord> read_observed_csv(const std::string& path);

// ---- potential-outcomes CSV: `id,t1_0,t2_0,t1_1,t2_1,gamma0,gamma1` ----
// A never-infected time serializes as an empty field.
struct PotentialTable {
  std::vector<PotentialOutcomeProfile> profiles;
  std::vector<std::array<double, 2>> gammas;
};
std::string potential_csv(const std::vector<PotentialOutcomeProfile>& profiles,
                          const std::vector<std::array<double, 2>>& gammas);
PotentialTable parse_potential_csv(const std::string& content);
void write_potential_csv(const std::string& path,
                         const std::vector<PotentialOutcomeProfile>& profiles,
                         const std::vector<std::array<double, 2>>& gammas);
PotentialTable read_potential_csv(const std::string& path);

// ---- config files: `key = value` lines, `#` comments, blank lines ----
std::map<std::string, std::string> parse_config(const std::string& content);
std::map<std::string, std::string> read_config(const std::string& path);

// ---- canonical names used across all emitted files ----
std::string assumption_name(OrpAssumption a);
std::string scale_name(EffectScale s);

// ---- JSON serialization (insertion-ordered, numbers round-trip) ----
Json to_json(const StepFunction& f);
Json to_json(const CoxComponent& c);
Json to_json(const ArmFit& fit);
Json to_json(const FrailtyIllnessDeathFit& fit);
Json to_json(const Interval& iv);
Json to_json(const BoundsReport& rep);
Json to_json(const Curve& c);
Json to_json(const EstimandCurve& ec);
Json to_json(const SensitivityReport& rep);
Json to_json(const OracleReport& rep);
Json to_json(const PropensityModel& m);
Json to_json(const MatchedSet& m);
Json to_json(const BootstrapResult& b);

void write_json(const std::string& path, const Json& j);

// ---- plot-data CSVs (header row; undefined values as empty fields) ----
std::string bounds_csv(const BoundsReport& rep);
std::string sensitivity_csv(const std::vector<SensitivityReport>& reps);
std::string oracle_csv(const OracleReport& rep);
std::string matched_csv(const MatchedSet& m,
                        const std::vector<ObservedRecord>& records,
                        const PropensityModel& ps);
std::string smd_csv(const std::vector<SmdRow>& rows);

}  // namespace scr
