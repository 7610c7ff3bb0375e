#include "scr/io.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace scr {

namespace {

std::invalid_argument line_error(std::size_t line_no, const std::string& what) {
  return std::invalid_argument("line " + std::to_string(line_no) + ": " + what);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

// Iterate non-empty lines, tolerating a trailing newline and CRLF endings.
template <typename Fn>
void for_each_line(const std::string& content, Fn&& fn) {
  std::size_t start = 0, line_no = 0;
  while (start <= content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string::npos) end = content.size();
    std::string_view line(content.data() + start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    if (!line.empty()) fn(line_no, line);
    if (end == content.size()) break;
    start = end + 1;
  }
}

double parse_double_field(std::string_view field, std::size_t line_no,
                          const char* what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw line_error(line_no, std::string("cannot parse ") + what + " from '" +
                                  std::string(field) + "'");
  return v;
}

int parse_binary_field(std::string_view field, std::size_t line_no,
                       const char* what) {
  if (field == "0") return 0;
  if (field == "1") return 1;
  throw line_error(line_no, std::string(what) + " must be 0 or 1, got '" +
                                std::string(field) + "'");
}

void append_double(std::string& out, double v) { out += format_double(v); }

Json curve_values(const Curve& c) {
  Json values = Json::array();
  for (std::size_t i = 0; i < c.value.size(); ++i) {
    if (c.ok.size() > i && !c.ok[i])
      values.push_back(nullptr);
    else
      values.push_back(c.value[i]);
  }
  return values;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error while reading '" + path + "'");
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw IoError("error while writing '" + path + "'");
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf, 16);
}

std::string hash_file(const std::string& path) {
  return fnv1a_hex(read_text_file(path));
}

std::string observed_csv(const std::vector<ObservedRecord>& records) {
  const std::size_t p = records.empty() ? 0 : records[0].x.size();
  std::string out = "id,treat,y1,d1,y2,d2";
  for (std::size_t j = 0; j < p; ++j) out += ",x" + std::to_string(j + 1);
  out += '\n';
  for (const auto& rec : records) {
    if (rec.x.size() != p)
      throw std::invalid_argument("observed_csv: inconsistent covariate lengths");
    out += rec.id;
    out += ',';
    out += rec.arm ? '1' : '0';
    out += ',';
    append_double(out, rec.y1);
    out += ',';
    out += rec.d1 ? '1' : '0';
    out += ',';
    append_double(out, rec.y2);
    out += ',';
    out += rec.d2 ? '1' : '0';
    for (std::size_t j = 0; j < p; ++j) {
      out += ',';
      append_double(out, rec.x[j]);
    }
    out += '\n';
  }
  return out;
}

std::vector<ObservedRecord> parse_observed_csv(const std::string& content) {
  std::vector<ObservedRecord> records;
  std::size_t p = 0;
  bool saw_header = false;
  for_each_line(content, [&](std::size_t line_no, std::string_view line) {
    const auto fields = split(line, ',');
    if (!saw_header) {
      if (fields.size() < 6 || fields[0] != "id" || fields[1] != "treat" ||
          fields[2] != "y1" || fields[3] != "d1" || fields[4] != "y2" ||
          fields[5] != "d2")
        throw line_error(line_no,
                         "expected header id,treat,y1,d1,y2,d2[,x1..xp]");
      p = fields.size() - 6;
      for (std::size_t j = 0; j < p; ++j)
        if (fields[6 + j] != "x" + std::to_string(j + 1))
          throw line_error(line_no, "covariate columns must be named x1..xp");
      saw_header = true;
      return;
    }
    if (fields.size() != 6 + p)
      throw line_error(line_no, "expected " + std::to_string(6 + p) +
                                    " fields, got " +
                                    std::to_string(fields.size()));
    ObservedRecord rec;
    rec.id = std::string(fields[0]);
    if (rec.id.empty()) throw line_error(line_no, "empty id");
    rec.arm = parse_binary_field(fields[1], line_no, "treat");
    rec.y1 = parse_double_field(fields[2], line_no, "y1");
    rec.d1 = parse_binary_field(fields[3], line_no, "d1") != 0;
    rec.y2 = parse_double_field(fields[4], line_no, "y2");
    rec.d2 = parse_binary_field(fields[5], line_no, "d2") != 0;
    if (!(rec.y1 > 0.0) || !(rec.y2 > 0.0) || rec.y1 > rec.y2)
      throw line_error(line_no, "times must satisfy 0 < y1 <= y2");
    if (!rec.d1 && rec.y1 != rec.y2)
      throw line_error(line_no, "without an infection, y1 must equal y2");
    rec.x.reserve(p);
    for (std::size_t j = 0; j < p; ++j)
      rec.x.push_back(parse_double_field(fields[6 + j], line_no, "covariate"));
    records.push_back(std::move(rec));
  });
  if (!saw_header) throw std::invalid_argument("observed CSV is empty");
  return records;
}

void write_observed_csv(const std::string& path,
                        const std::vector<ObservedRecord>& records) {
  write_text_file(path, observed_csv(records));
}

std::vector<ObservedRecord> read_observed_csv(const std::string& path) {
  return parse_observed_csv(read_text_file(path));
}

std::string potential_csv(const std::vector<PotentialOutcomeProfile>& profiles,
                          const std::vector<std::array<double, 2>>& gammas) {
  if (profiles.size() != gammas.size())
    throw std::invalid_argument("potential_csv: profiles/gammas length mismatch");
  std::string out = "id,t1_0,t2_0,t1_1,t2_1,gamma0,gamma1\n";
  auto time_field = [&](double t) {
    if (!std::isinf(t)) append_double(out, t);  // empty field encodes never
  };
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    out += std::to_string(i + 1);
    out += ',';
    time_field(profiles[i].t1_0);
    out += ',';
    append_double(out, profiles[i].t2_0);
    out += ',';
    time_field(profiles[i].t1_1);
    out += ',';
    append_double(out, profiles[i].t2_1);
    out += ',';
    append_double(out, gammas[i][0]);
    out += ',';
    append_double(out, gammas[i][1]);
    out += '\n';
  }
  return out;
}

PotentialTable parse_potential_csv(const std::string& content) {
  PotentialTable table;
  bool saw_header = false;
  for_each_line(content, [&](std::size_t line_no, std::string_view line) {
    const auto fields = split(line, ',');
    if (!saw_header) {
      if (fields.size() != 7 || fields[0] != "id" || fields[1] != "t1_0" ||
          fields[2] != "t2_0" || fields[3] != "t1_1" || fields[4] != "t2_1" ||
          fields[5] != "gamma0" || fields[6] != "gamma1")
        throw line_error(line_no,
                         "expected header id,t1_0,t2_0,t1_1,t2_1,gamma0,gamma1");
      saw_header = true;
      return;
    }
    if (fields.size() != 7)
      throw line_error(line_no, "expected 7 fields, got " +
                                    std::to_string(fields.size()));
    auto never_or_time = [&](std::string_view f, const char* what) {
      if (f.empty() || f == "inf") return kNever;
      return parse_double_field(f, line_no, what);
    };
    PotentialOutcomeProfile prof;
    prof.t1_0 = never_or_time(fields[1], "t1_0");
    prof.t2_0 = parse_double_field(fields[2], line_no, "t2_0");
    prof.t1_1 = never_or_time(fields[3], "t1_1");
    prof.t2_1 = parse_double_field(fields[4], line_no, "t2_1");
    validate_profile(prof);
    table.profiles.push_back(prof);
    table.gammas.push_back({parse_double_field(fields[5], line_no, "gamma0"),
                            parse_double_field(fields[6], line_no, "gamma1")});
  });
  if (!saw_header) throw std::invalid_argument("potential-outcomes CSV is empty");
  return table;
}

void write_potential_csv(const std::string& path,
                         const std::vector<PotentialOutcomeProfile>& profiles,
                         const std::vector<std::array<double, 2>>& gammas) {
  write_text_file(path, potential_csv(profiles, gammas));
}

PotentialTable read_potential_csv(const std::string& path) {
  return parse_potential_csv(read_text_file(path));
}

std::map<std::string, std::string> parse_config(const std::string& content) {
  std::map<std::string, std::string> out;
  auto trim = [](std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
      s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t'))
      s.remove_suffix(1);
    return s;
  };
  for_each_line(content, [&](std::size_t line_no, std::string_view line) {
    const std::string_view stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') return;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string_view::npos)
      throw line_error(line_no, "expected 'key = value'");
    const std::string key(trim(stripped.substr(0, eq)));
    const std::string value(trim(stripped.substr(eq + 1)));
    if (key.empty()) throw line_error(line_no, "empty key");
    if (!out.emplace(key, value).second)
      throw line_error(line_no, "duplicate key '" + key + "'");
  });
  return out;
}

std::map<std::string, std::string> read_config(const std::string& path) {
  return parse_config(read_text_file(path));
}

std::string assumption_name(OrpAssumption a) {
  switch (a) {
    case OrpAssumption::ios_orp: return "ios-orp";
    case OrpAssumption::weak_orp: return "weak-orp";
    case OrpAssumption::none: default: return "none";
  }
}

std::string scale_name(EffectScale s) {
  return s == EffectScale::difference ? "difference" : "risk-ratio";
}

Json to_json(const StepFunction& f) {
  return Json{{"times", f.times()}, {"jumps", f.jumps()}};
}

Json to_json(const CoxComponent& c) {
  return Json{{"beta", c.beta},
              {"pinned", c.pinned},
              {"baseline", to_json(c.baseline)}};
}

Json to_json(const ArmFit& fit) {
  return Json{{"arm", fit.arm},
              {"n", fit.n},
              {"p", fit.p},
              {"transition_01", to_json(fit.c01)},
              {"transition_02", to_json(fit.c02)},
              {"transition_12", to_json(fit.c12)},
              {"theta", fit.theta},
              {"iterations", fit.iterations},
              {"converged", fit.converged},
              {"final_change", fit.final_change},
              {"final_loglik_change", fit.final_loglik_change},
              {"loglik", fit.loglik},
              {"warnings", fit.warnings}};
}

Json to_json(const FrailtyIllnessDeathFit& fit) {
  return Json{{"arm0", to_json(fit.arm0)}, {"arm1", to_json(fit.arm1)}};
}

Json to_json(const Interval& iv) {
  Json j;
  j["lower"] = iv.lower_defined ? Json(iv.lower) : Json(nullptr);
  j["upper"] = iv.upper_defined ? Json(iv.upper) : Json(nullptr);
  return j;
}

Json to_json(const BoundsReport& rep) {
  Json pi;
  pi["none"] = to_json(rep.pi[static_cast<int>(OrpAssumption::none)]);
  pi["weak-orp"] = to_json(rep.pi[static_cast<int>(OrpAssumption::weak_orp)]);
  pi["ios-orp"] = to_json(rep.pi[static_cast<int>(OrpAssumption::ios_orp)]);
  Json curves = Json::array();
  for (const auto& c : rep.curves) {
    Json lower = Json::array(), upper = Json::array();
    for (const auto& iv : c.bounds) {
      lower.push_back(iv.lower_defined ? Json(iv.lower) : Json(nullptr));
      upper.push_back(iv.upper_defined ? Json(iv.upper) : Json(nullptr));
    }
    curves.push_back(Json{{"assumption", assumption_name(c.assumption)},
                          {"scale", scale_name(c.scale)},
                          {"lower", lower},
                          {"upper", upper}});
  }
  return Json{{"grid", rep.grid},
              {"horizon", rep.horizon},
              {"falsified", rep.falsification == Falsification::falsified},
              {"pi_ios", pi},
              {"curves", curves}};
}

Json to_json(const Curve& c) {
  Json j;
  j["defined"] = c.defined;
  j["values"] = c.defined ? curve_values(c) : Json(nullptr);
  return j;
}

Json to_json(const EstimandCurve& ec) {
  Json j = to_json(ec.curve);
  j["mc_se"] = ec.curve.defined ? Json(ec.se) : Json(nullptr);
  return j;
}

Json to_json(const SensitivityReport& rep) {
  Json j;
  j["rho"] = rep.rho;
  j["grid"] = rep.grid;
  j["horizon"] = rep.horizon;
  j["pi_ios"] = rep.pi_ios;
  j["pi_ios_mc_se"] = rep.pi_ios_se;
  j["pi_as"] = rep.pi_as;
  j["pi_as_mc_se"] = rep.pi_as_se;
  j["pi_ai"] = rep.pi_ai;
  j["pi_ai_mc_se"] = rep.pi_ai_se;
  j["pt_probs"] = rep.pt_probs;
  j["fice_difference"] = to_json(rep.fice_diff);
  j["fice_risk_ratio"] = to_json(rep.fice_rr);
  j["sace_difference"] = to_json(rep.sace_diff);
  j["sace_risk_ratio"] = to_json(rep.sace_rr);
  j["aice_difference"] = to_json(rep.aice_diff);
  j["aice_risk_ratio"] = to_json(rep.aice_rr);
  j["total_difference"] = to_json(rep.total_diff);
  j["total_risk_ratio"] = to_json(rep.total_rr);
  j["pt89_difference"] = to_json(rep.pt89_diff);
  j["pt89_mass"] = rep.pt89_mass;
  j["fice_at_horizon"] = rep.fice_at_horizon;
  j["nnh"] = rep.nnh ? Json(*rep.nnh) : Json(nullptr);
  j["nnh_mc_se"] = rep.nnh ? Json(rep.nnh_se) : Json(nullptr);
  j["mc_draws"] = rep.mc_draws;
  j["seed"] = rep.seed;
  return j;
}

Json to_json(const OracleReport& rep) {
  Json j;
  j["grid"] = rep.grid;
  j["horizon"] = rep.horizon;
  j["pi_as"] = rep.pi_as;
  j["pi_ai"] = rep.pi_ai;
  j["pi_ios"] = rep.pi_ios;
  j["pt_probs"] = rep.pt_probs;
  j["total_difference"] = to_json(rep.total_diff);
  j["total_risk_ratio"] = to_json(rep.total_rr);
  j["fice_difference"] = to_json(rep.fice_diff);
  j["fice_risk_ratio"] = to_json(rep.fice_rr);
  j["sace_difference"] = to_json(rep.sace_diff);
  j["sace_risk_ratio"] = to_json(rep.sace_rr);
  j["aice_difference"] = to_json(rep.aice_diff);
  j["aice_risk_ratio"] = to_json(rep.aice_rr);
  j["pt89_difference"] = to_json(rep.pt89_diff);
  j["pt89_mass"] = rep.pt89_mass;
  return j;
}

Json to_json(const PropensityModel& m) {
  return Json{{"coefficients", m.coefficients},
              {"pinned", m.pinned},
              {"iterations", m.iterations},
              {"converged", m.converged},
              {"max_score", m.max_score},
              {"warnings", m.warnings}};
}

Json to_json(const MatchedSet& m) {
  return Json{{"pairs", m.pairs.size()},
              {"caliper_sd", m.caliper_sd},
              {"caliper_width", m.caliper_width},
              {"unmatched_arm0", m.unmatched0},
              {"unmatched_arm1", m.unmatched1},
              {"ps_only", m.ps_only}};
}

Json to_json(const BootstrapResult& b) {
  return Json{{"point", b.point},          {"se", b.se},
              {"ci_lower", b.ci_lower},    {"ci_upper", b.ci_upper},
              {"replicates", b.replicates}, {"used", b.used},
              {"failures", b.failures}};
}

void write_json(const std::string& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

namespace {

void interval_fields(std::string& out, const Interval& iv) {
  if (iv.lower_defined) append_double(out, iv.lower);
  out += ',';
  if (iv.upper_defined) append_double(out, iv.upper);
}

void curve_rows(std::string& out, const std::string& prefix,
                std::span<const double> grid, const Curve& c,
                std::span<const double> se, const char* estimand,
                const char* scale) {
  if (!c.defined) return;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out += prefix;
    append_double(out, grid[i]);
    out += ',';
    out += estimand;
    out += ',';
    out += scale;
    out += ',';
    if (c.ok.empty() || c.ok[i]) append_double(out, c.value[i]);
    out += ',';
    if ((c.ok.empty() || c.ok[i]) && i < se.size()) append_double(out, se[i]);
    out += '\n';
  }
}

}  // namespace

std::string bounds_csv(const BoundsReport& rep) {
  std::string out = "t,assumption,scale,lower,upper\n";
  for (const auto& c : rep.curves) {
    for (std::size_t i = 0; i < rep.grid.size(); ++i) {
      append_double(out, rep.grid[i]);
      out += ',';
      out += assumption_name(c.assumption);
      out += ',';
      out += scale_name(c.scale);
      out += ',';
      interval_fields(out, c.bounds[i]);
      out += '\n';
    }
  }
  return out;
}

std::string sensitivity_csv(const std::vector<SensitivityReport>& reps) {
  std::string out = "rho,t,estimand,scale,value,mc_se\n";
  for (const auto& rep : reps) {
    const std::string prefix = format_double(rep.rho) + ",";
    const auto add = [&](const EstimandCurve& ec, const char* estimand,
                         const char* scale) {
      curve_rows(out, prefix, rep.grid, ec.curve, ec.se, estimand, scale);
    };
    add(rep.fice_diff, "fice", "difference");
    add(rep.fice_rr, "fice", "risk-ratio");
    add(rep.sace_diff, "sace", "difference");
    add(rep.sace_rr, "sace", "risk-ratio");
    add(rep.aice_diff, "aice", "difference");
    add(rep.aice_rr, "aice", "risk-ratio");
    add(rep.total_diff, "total", "difference");
    add(rep.total_rr, "total", "risk-ratio");
    add(rep.pt89_diff, "pt89", "difference");
  }
  return out;
}

std::string oracle_csv(const OracleReport& rep) {
  std::string out = "t,estimand,scale,value\n";
  std::string scratch;
  const auto add = [&](const Curve& c, const char* estimand,
                       const char* scale) {
    // Reuse the sensitivity row writer with an empty SE column, then strip
    // the trailing comma of each row.
    scratch.clear();
    curve_rows(scratch, "", rep.grid, c, {}, estimand, scale);
    std::size_t start = 0;
    while (start < scratch.size()) {
      std::size_t end = scratch.find('\n', start);
      out.append(scratch, start, end - start - 1);  // drop the empty SE field
      out += '\n';
      start = end + 1;
    }
  };
  add(rep.fice_diff, "fice", "difference");
  add(rep.fice_rr, "fice", "risk-ratio");
  add(rep.sace_diff, "sace", "difference");
  add(rep.sace_rr, "sace", "risk-ratio");
  add(rep.aice_diff, "aice", "difference");
  add(rep.aice_rr, "aice", "risk-ratio");
  add(rep.total_diff, "total", "difference");
  add(rep.total_rr, "total", "risk-ratio");
  add(rep.pt89_diff, "pt89", "difference");
  return out;
}

std::string matched_csv(const MatchedSet& m,
                        const std::vector<ObservedRecord>& records,
                        const PropensityModel& ps) {
  std::string out = "pair_id,id0,id1,ps0,ps1,distance\n";
  for (std::size_t k = 0; k < m.pairs.size(); ++k) {
    const auto& pr = m.pairs[k];
    out += std::to_string(k + 1);
    out += ',';
    out += records[pr.index0].id;
    out += ',';
    out += records[pr.index1].id;
    out += ',';
    append_double(out, ps.fitted[pr.index0]);
    out += ',';
    append_double(out, ps.fitted[pr.index1]);
    out += ',';
    append_double(out, pr.distance);
    out += '\n';
  }
  return out;
}

std::string smd_csv(const std::vector<SmdRow>& rows) {
  std::string out = "covariate,smd_before,smd_after\n";
  for (const auto& row : rows) {
    out += "x" + std::to_string(row.covariate + 1);
    out += ',';
    append_double(out, row.before);
    out += ',';
    if (row.after) append_double(out, *row.after);
    out += '\n';
  }
  return out;
}

}  // namespace scr
