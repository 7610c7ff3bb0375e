// Command-line front end: simulate cohorts, run the full analysis pipeline
// (propensity matching, frailty illness-death fits, partial-identification
// bounds, cross-world sensitivity), and evaluate exact oracles on known
// potential outcomes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "scr/bounds.hpp"
#include "scr/design.hpp"
#include "scr/domain.hpp"
#include "scr/io.hpp"
#include "scr/oracle.hpp"
#include "scr/parallel.hpp"
#include "scr/sensitivity.hpp"
#include "scr/simulate.hpp"
#include "scr/stats.hpp"
#include "scr/survfit.hpp"

namespace fs = std::filesystem;
using scr::Json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitConvergence = 3;
constexpr int kExitIo = 4;

std::vector<double> parse_double_list(const std::string& text,
                                      const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string("cannot parse ") + what +
                                  " entry '" + tok + "'");
    }
  }
  if (out.empty())
    throw std::invalid_argument(std::string(what) + " list is empty");
  return out;
}

std::vector<double> whitespace_doubles(const std::string& text,
                                       const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (ss >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw std::invalid_argument("config key '" + key +
                                  "': cannot parse number '" + tok + "'");
    }
  }
  return out;
}

// ---- cohort-spec config files (key = value; see README for the schema) ----

scr::CovariateGen parse_covariate(const std::string& tok) {
  const auto open = tok.find('(');
  const auto close = tok.rfind(')');
  if (open == std::string::npos || close != tok.size() - 1 || close < open)
    throw std::invalid_argument("covariates: expected name(args), got '" + tok +
                                "'");
  const std::string name = tok.substr(0, open);
  std::string args = tok.substr(open + 1, close - open - 1);
  for (auto& c : args)
    if (c == ',') c = ' ';
  const std::vector<double> v = whitespace_doubles(args, "covariates");
  scr::CovariateGen gen;
  if (name == "bernoulli") {
    if (v.size() != 1)
      throw std::invalid_argument("covariates: bernoulli takes one argument");
    gen.kind = scr::CovariateKind::bernoulli;
    gen.a = v[0];
  } else if (name == "uniform") {
    if (v.size() != 2)
      throw std::invalid_argument("covariates: uniform takes two arguments");
    gen.kind = scr::CovariateKind::uniform;
    gen.a = v[0];
    gen.b = v[1];
  } else if (name == "normal") {
    if (v.size() != 2)
      throw std::invalid_argument("covariates: normal takes two arguments");
    gen.kind = scr::CovariateKind::normal;
    gen.a = v[0];
    gen.b = v[1];
  } else {
    throw std::invalid_argument("covariates: unknown generator '" + name + "'");
  }
  return gen;
}

scr::CohortSpec cohort_spec_from_config(
    const std::map<std::string, std::string>& cfg) {
  scr::CohortSpec spec;
  std::map<std::string, std::string> remaining = cfg;
  auto take = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = remaining.find(key);
    if (it == remaining.end()) return std::nullopt;
    std::string v = it->second;
    remaining.erase(it);
    return v;
  };
  auto require = [&](const std::string& key) {
    auto v = take(key);
    if (!v) throw std::invalid_argument("spec file: missing key '" + key + "'");
    return *v;
  };

  spec.n = static_cast<std::size_t>(std::stoull(require("n")));
  if (auto v = take("seed")) spec.seed = std::stoull(*v);
  {
    std::stringstream ss(require("covariates"));
    std::string tok;
    while (ss >> tok) spec.covariates.push_back(parse_covariate(tok));
  }
  spec.frailty.theta0 = std::stod(require("theta0"));
  spec.frailty.theta1 = std::stod(require("theta1"));
  spec.frailty.rho = std::stod(require("rho"));
  for (int a = 0; a < 2; ++a) {
    const char* names[3] = {"01", "02", "12"};
    for (int k = 0; k < 3; ++k) {
      const std::string key =
          "hazard_" + std::to_string(a) + "_" + names[k];
      const std::vector<double> v = whitespace_doubles(require(key), key);
      if (v.size() < 2)
        throw std::invalid_argument("config key '" + key +
                                    "': need shape scale [coefficients...]");
      auto& h = spec.hazards[a][k];
      h.shape = v[0];
      h.scale = v[1];
      h.beta.assign(v.begin() + 2, v.end());
    }
  }
  {
    std::stringstream ss(require("treatment"));
    std::string kind;
    ss >> kind;
    std::string tok;
    std::vector<double> v;
    while (ss >> tok) v.push_back(std::stod(tok));
    if (kind == "randomized") {
      spec.treatment.randomized = true;
      if (v.size() != 1)
        throw std::invalid_argument("treatment: randomized takes one probability");
      spec.treatment.p = v[0];
    } else if (kind == "logistic") {
      spec.treatment.randomized = false;
      spec.treatment.coef = v;
    } else {
      throw std::invalid_argument("treatment: unknown mechanism '" + kind + "'");
    }
  }
  if (auto v = take("common_randomness"))
    spec.common_randomness = *v == "1" || *v == "true";
  if (auto v = take("censor_uniform")) {
    const std::vector<double> w = whitespace_doubles(*v, "censor_uniform");
    if (w.size() != 2)
      throw std::invalid_argument("censor_uniform: need low high");
    spec.censor_uniform = std::make_pair(w[0], w[1]);
  }
  if (!remaining.empty())
    throw std::invalid_argument("spec file: unknown key '" +
                                remaining.begin()->first + "'");
  return spec;
}

Json spec_to_json(const scr::CohortSpec& spec) {
  Json cov = Json::array();
  for (const auto& g : spec.covariates) {
    const char* name = g.kind == scr::CovariateKind::bernoulli ? "bernoulli"
                       : g.kind == scr::CovariateKind::uniform ? "uniform"
                                                               : "normal";
    cov.push_back(Json{{"kind", name}, {"a", g.a}, {"b", g.b}});
  }
  Json hazards = Json::array();
  for (int a = 0; a < 2; ++a) {
    const char* names[3] = {"01", "02", "12"};
    for (int k = 0; k < 3; ++k) {
      const auto& h = spec.hazards[a][k];
      hazards.push_back(Json{{"arm", a},
                             {"transition", names[k]},
                             {"shape", h.shape},
                             {"scale", h.scale},
                             {"beta", h.beta}});
    }
  }
  Json j{{"n", spec.n},
         {"seed", spec.seed},
         {"covariates", cov},
         {"theta0", spec.frailty.theta0},
         {"theta1", spec.frailty.theta1},
         {"rho", spec.frailty.rho},
         {"hazards", hazards},
         {"common_randomness", spec.common_randomness}};
  if (spec.treatment.randomized) {
    j["treatment"] = Json{{"mechanism", "randomized"}, {"p", spec.treatment.p}};
  } else {
    j["treatment"] =
        Json{{"mechanism", "logistic"}, {"coef", spec.treatment.coef}};
  }
  j["censor_uniform"] =
      spec.censor_uniform
          ? Json{spec.censor_uniform->first, spec.censor_uniform->second}
          : Json(nullptr);
  return j;
}

void write_manifest(const fs::path& out_dir, const std::string& command,
                    const Json& config, const Json& inputs,
                    const std::vector<std::string>& outputs) {
  Json m{{"command", command},
         {"config", config},
         {"inputs", inputs},
         {"outputs", outputs}};
  scr::write_json((out_dir / "manifest.json").string(), m);
}

std::vector<double> resolve_grid(int grid_count, const std::string& grid_points,
                                 double horizon) {
  if (!grid_points.empty()) {
    std::vector<double> g = parse_double_list(grid_points, "grid");
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!(g[i] > 0.0 && g[i] <= horizon))
        throw std::invalid_argument("grid points must lie in (0, horizon]");
      if (i > 0 && g[i] < g[i - 1])
        throw std::invalid_argument("grid points must be nondecreasing");
    }
    return g;
  }
  if (grid_count < 1)
    throw std::invalid_argument("grid count must be positive");
  return scr::default_grid(static_cast<std::size_t>(grid_count), horizon);
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string scenario;
  std::string spec_file;
  double theta = 1.0;
  double rho = 0.0;
  std::uint64_t n = 10000;
  std::uint64_t seed = 0;
  bool common_randomness = false;
  std::string censor;
  std::string out_dir = ".";
  int threads = 0;
};

int cmd_simulate(const SimulateArgs& args) {
  scr::set_max_threads(args.threads);
  scr::CohortSpec spec;
  if (!args.spec_file.empty()) {
    spec = cohort_spec_from_config(scr::read_config(args.spec_file));
  } else if (!args.scenario.empty()) {
    spec = scr::scenario_spec(args.scenario, args.theta, args.rho, args.n,
                              args.seed);
  } else {
    throw std::invalid_argument("simulate: give --scenario or --spec");
  }
  if (args.common_randomness) spec.common_randomness = true;
  if (!args.censor.empty()) {
    const std::vector<double> w = parse_double_list(args.censor, "censor");
    if (w.size() != 2)
      throw std::invalid_argument("--censor needs 'low,high'");
    spec.censor_uniform = std::make_pair(w[0], w[1]);
  }
  scr::validate_cohort_spec(spec);

  const scr::SimulatedCohort cohort = scr::simulate_cohort(spec);

  const fs::path out_dir(args.out_dir);
  fs::create_directories(out_dir);
  const std::string observed_path = (out_dir / "observed.csv").string();
  const std::string potential_path = (out_dir / "potential.csv").string();
  scr::write_observed_csv(observed_path, cohort.records);
  scr::write_potential_csv(potential_path, cohort.profiles, cohort.gammas);

  write_manifest(out_dir, "simulate", spec_to_json(spec),
                 Json{{"spec_file",
                       args.spec_file.empty()
                           ? Json(nullptr)
                           : Json(scr::hash_file(args.spec_file))}},
                 {"observed.csv", "potential.csv"});
  std::cout << "simulated " << cohort.records.size() << " subjects -> "
            << observed_path << "\n";
  return kExitOk;
}

// ----------------------------------------------------------------- analyze

struct AnalyzeArgs {
  std::string data;
  std::string out_dir = ".";
  double horizon = 1.0;
  int grid_count = 52;
  std::string grid_points;
  std::string rho_list = "0,0.5,1";
  int mc_draws = 2000;
  int functional_draws = 200;
  int boot = 200;
  bool fast_boot = false;
  bool boot_sensitivity = false;
  double caliper = 0.3;
  bool ps_only = false;
  bool skip_matching = false;
  std::uint64_t seed = 0;
  int threads = 0;
};

Json functionals_to_json(const scr::ObservedFunctionals& f) {
  return Json{{"grid", f.grid},
              {"horizon", f.horizon},
              {"epsi", f.epsi},
              {"ef1_arm0", f.ef1[0]},
              {"ef1_arm1", f.ef1[1]},
              {"ef1_horizon", f.ef1_r},
              {"eboth0", f.eboth0}};
}

// Execution details (--out, --threads) are deliberately left out: they do
// not affect the numbers, and embedding them would break byte-identical
// reruns across thread counts.
Json analyze_config_json(const AnalyzeArgs& args) {
  return Json{{"data", args.data},
              {"horizon", args.horizon},
              {"grid", args.grid_count},
              {"grid_points", args.grid_points},
              {"rho", args.rho_list},
              {"mc_draws", args.mc_draws},
              {"functional_draws", args.functional_draws},
              {"boot", args.boot},
              {"fast_boot", args.fast_boot},
              {"boot_sensitivity", args.boot_sensitivity},
              {"caliper", args.caliper},
              {"ps_only", args.ps_only},
              {"skip_matching", args.skip_matching},
              {"seed", args.seed}};
}

int cmd_analyze(const AnalyzeArgs& args) {
  scr::set_max_threads(args.threads);
  if (args.data.empty()) throw std::invalid_argument("analyze: --data is required");
  const std::vector<double> rhos = parse_double_list(args.rho_list, "rho");
  const std::vector<double> grid =
      resolve_grid(args.grid_count, args.grid_points, args.horizon);
  if (args.boot < 0 || args.mc_draws < 1 || args.functional_draws < 2)
    throw std::invalid_argument("analyze: nonsensical draw counts");

  const std::string input_hash = scr::hash_file(args.data);
  const std::vector<scr::ObservedRecord> all_records =
      scr::read_observed_csv(args.data);
  if (all_records.empty()) throw std::invalid_argument("analyze: empty dataset");

  const fs::path out_dir(args.out_dir);
  fs::create_directories(out_dir);
  std::vector<std::string> outputs;

  Json report;
  report["input"] = Json{{"path", args.data},
                         {"fnv1a", input_hash},
                         {"n", all_records.size()},
                         {"p", all_records[0].x.size()}};

  // ---- design phase ----
  std::vector<scr::ObservedRecord> analysis;
  std::vector<std::pair<std::size_t, std::size_t>> pair_rows;  // into analysis
  if (args.skip_matching) {
    analysis = all_records;
    report["propensity"] = nullptr;
    report["matching"] = nullptr;
  } else {
    const scr::PropensityModel ps = scr::fit_propensity(all_records);
    const scr::MatchedSet matched =
        scr::mahalanobis_match(all_records, ps, args.caliper, args.ps_only);
    if (matched.pairs.empty())
      throw std::invalid_argument(
          "analyze: matching produced no pairs; widen the caliper or use "
          "--skip-matching");
    const std::vector<scr::SmdRow> smd = scr::smd_table(all_records, &matched);

    analysis.reserve(2 * matched.pairs.size());
    for (const auto& pr : matched.pairs) {
      analysis.push_back(all_records[pr.index0]);
      analysis.push_back(all_records[pr.index1]);
      pair_rows.emplace_back(analysis.size() - 2, analysis.size() - 1);
    }
    report["propensity"] = scr::to_json(ps);
    report["matching"] = scr::to_json(matched);
    scr::write_text_file((out_dir / "matched.csv").string(),
                         scr::matched_csv(matched, all_records, ps));
    scr::write_text_file((out_dir / "smd.csv").string(), scr::smd_csv(smd));
    outputs.push_back("matched.csv");
    outputs.push_back("smd.csv");
    Json smd_json = Json::array();
    for (const auto& row : smd)
      smd_json.push_back(Json{{"covariate", row.covariate + 1},
                              {"before", row.before},
                              {"after", row.after ? Json(*row.after) : Json()}});
    report["smd"] = smd_json;
  }

  // ---- model phase ----
  scr::FrailtyIllnessDeathFit fit;
  try {
    fit = scr::fit_both_arms(analysis);
  } catch (const std::runtime_error& e) {
    report["error"] = std::string("estimation failed: ") + e.what();
    report["fits"] = nullptr;
    report["config"] = analyze_config_json(args);
    scr::write_json((out_dir / "report.json").string(), report);
    write_manifest(out_dir, "analyze", analyze_config_json(args),
                   Json{{"data", input_hash}}, {"report.json"});
    std::cerr << "analyze: " << e.what() << "\n";
    return kExitConvergence;
  }
  report["fits"] = scr::to_json(fit);

  std::vector<std::vector<double>> rows;
  rows.reserve(analysis.size());
  for (const auto& rec : analysis) rows.push_back(rec.x);

  // ---- partial identification ----
  const scr::ObservedFunctionals functionals = scr::functionals_from_fit(
      fit.arm0, fit.arm1, rows, grid, args.horizon,
      args.functional_draws, args.seed);
  const scr::BoundsReport bounds = scr::bounds_report(functionals);
  report["functionals"] = functionals_to_json(functionals);
  report["falsified"] =
      bounds.falsification == scr::Falsification::falsified;
  report["bounds"] = scr::to_json(bounds);
  scr::write_text_file((out_dir / "bounds.csv").string(),
                       scr::bounds_csv(bounds));
  outputs.push_back("bounds.csv");

  // ---- cross-world sensitivity ----
  const scr::ArmModel m0 = scr::arm_model(fit.arm0);
  const scr::ArmModel m1 = scr::arm_model(fit.arm1);
  std::vector<scr::SensitivityReport> sens;
  sens.reserve(rhos.size());
  Json sens_json = Json::array();
  for (const double rho : rhos) {
    sens.push_back(scr::identify_report(m0, m1, rho, rows, grid, args.horizon,
                                        args.mc_draws, args.seed));
    sens_json.push_back(scr::to_json(sens.back()));
  }
  report["sensitivity"] = sens_json;
  scr::write_text_file((out_dir / "sensitivity.csv").string(),
                       scr::sensitivity_csv(sens));
  outputs.push_back("sensitivity.csv");

  // ---- pair-level bootstrap of the partial-identification outputs ----
  if (args.boot >= 2) {
    const std::size_t n_units =
        pair_rows.empty() ? analysis.size() : pair_rows.size();
    const std::size_t g = grid.size();
    // Statistic layout: 5 stratum-proportion entries, then lower/upper for
    // each assumption x scale curve, then (optionally) the fice difference
    // curve at each rho.
    const auto statistic = [&](std::span<const std::size_t> idx) {
      std::vector<scr::ObservedRecord> resampled;
      resampled.reserve(2 * idx.size());
      for (const std::size_t u : idx) {
        if (pair_rows.empty()) {
          resampled.push_back(analysis[u]);
        } else {
          resampled.push_back(analysis[pair_rows[u].first]);
          resampled.push_back(analysis[pair_rows[u].second]);
        }
      }
      scr::FrailtyIllnessDeathFit bfit;
      if (args.fast_boot) {
        std::vector<scr::ObservedRecord> a0, a1;
        for (const auto& rec : resampled)
          (rec.arm == 0 ? a0 : a1).push_back(rec);
        scr::EmOptions o0;
        o0.fixed_theta = fit.arm0.theta;
        scr::EmOptions o1;
        o1.fixed_theta = fit.arm1.theta;
        bfit.arm0 = scr::em_fit(a0, o0);
        bfit.arm1 = scr::em_fit(a1, o1);
      } else {
        bfit = scr::fit_both_arms(resampled);
      }
      std::vector<std::vector<double>> brows;
      brows.reserve(resampled.size());
      for (const auto& rec : resampled) brows.push_back(rec.x);
      const scr::ObservedFunctionals bf = scr::functionals_from_fit(
          bfit.arm0, bfit.arm1, brows, grid, args.horizon,
          args.functional_draws, args.seed);
      const scr::BoundsReport br = scr::bounds_report(bf);

      std::vector<double> stat;
      stat.reserve(5 + br.curves.size() * 2 * g +
                   (args.boot_sensitivity ? rhos.size() * g : 0));
      const auto& pi_ios =
          br.pi[static_cast<int>(scr::OrpAssumption::ios_orp)];
      const auto& pi_weak =
          br.pi[static_cast<int>(scr::OrpAssumption::weak_orp)];
      const auto& pi_none = br.pi[static_cast<int>(scr::OrpAssumption::none)];
      stat.push_back(pi_ios.lower);
      stat.push_back(pi_weak.lower);
      stat.push_back(pi_weak.upper);
      stat.push_back(pi_none.lower);
      stat.push_back(pi_none.upper);
      const double nanv = std::numeric_limits<double>::quiet_NaN();
      for (const auto& c : br.curves)
        for (std::size_t i = 0; i < g; ++i) {
          stat.push_back(c.bounds[i].lower_defined ? c.bounds[i].lower : nanv);
          stat.push_back(c.bounds[i].upper_defined ? c.bounds[i].upper : nanv);
        }
      if (args.boot_sensitivity) {
        const scr::ArmModel bm0 = scr::arm_model(bfit.arm0);
        const scr::ArmModel bm1 = scr::arm_model(bfit.arm1);
        for (const double rho : rhos) {
          const scr::FiceIdentification fid = scr::identify_fice(
              bm0, bm1, rho, brows, grid, args.horizon,
              std::max(200, args.mc_draws / 10), args.seed);
          for (std::size_t i = 0; i < g; ++i)
            stat.push_back(fid.diff.curve.defined ? fid.diff.curve.value[i]
                                                  : nanv);
        }
      }
      return stat;
    };

    const scr::BootstrapResult boot =
        scr::pair_bootstrap(n_units, statistic, args.boot, args.seed);
    Json bj = scr::to_json(boot);
    bj["unit"] = pair_rows.empty() ? "subject" : "pair";
    bj["fast"] = args.fast_boot;
    bj["layout"] =
        Json{{"pi", "indices 0-4: pi-ios point, weak lower/upper, "
                    "none lower/upper"},
             {"curves",
              "then per assumption x scale (none/weak-orp/ios-orp x "
              "difference/risk-ratio), per grid time: lower, upper"},
             {"sensitivity", args.boot_sensitivity
                                 ? Json("then per rho, fice difference per "
                                        "grid time")
                                 : Json(nullptr)}};
    report["bootstrap"] = bj;
  } else {
    report["bootstrap"] = nullptr;
  }

  report["config"] = analyze_config_json(args);
  scr::write_json((out_dir / "report.json").string(), report);
  outputs.push_back("report.json");
  write_manifest(out_dir, "analyze", analyze_config_json(args),
                 Json{{"data", input_hash}}, outputs);
  std::cout << "analysis written to " << (out_dir / "report.json").string()
            << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------ oracle

struct OracleArgs {
  std::string po_file;
  std::string out_dir = ".";
  double horizon = 1.0;
  int grid_count = 52;
  std::string grid_points;
  double randomization_p = 0.5;
  std::string compare;
  int threads = 0;
};

int cmd_oracle(const OracleArgs& args) {
  scr::set_max_threads(args.threads);
  if (args.po_file.empty()) throw std::invalid_argument("oracle: --po is required");
  const std::vector<double> grid =
      resolve_grid(args.grid_count, args.grid_points, args.horizon);
  const std::string input_hash = scr::hash_file(args.po_file);
  const scr::PotentialTable table = scr::read_potential_csv(args.po_file);
  const std::vector<scr::WeightedProfile> weighted =
      scr::weight_all(table.profiles);

  const scr::OracleReport rep =
      scr::oracle_estimands(weighted, grid, args.horizon);
  const scr::ObservedFunctionals funcs = scr::oracle_observed_functionals(
      weighted, args.randomization_p, grid, args.horizon);

  const fs::path out_dir(args.out_dir);
  fs::create_directories(out_dir);
  std::vector<std::string> outputs = {"oracle.json", "oracle.csv"};
  Json j = scr::to_json(rep);
  j["functionals"] = functionals_to_json(funcs);
  j["input"] = Json{{"path", args.po_file},
                    {"fnv1a", input_hash},
                    {"n", table.profiles.size()}};

  if (!args.compare.empty()) {
    // Sup-t gaps between the oracle difference curves and each sensitivity
    // block of an analysis report evaluated on the same grid.
    const Json analysis = Json::parse(scr::read_text_file(args.compare));
    if (!analysis.contains("sensitivity"))
      throw std::invalid_argument("compare: report has no sensitivity block");
    std::string csv = "rho,estimand,scale,sup_gap\n";
    Json gaps = Json::array();
    for (const auto& block : analysis["sensitivity"]) {
      const std::vector<double> bgrid =
          block["grid"].get<std::vector<double>>();
      if (bgrid != rep.grid)
        throw std::invalid_argument(
            "compare: analysis grid differs from the oracle grid");
      const double rho = block["rho"].get<double>();
      const auto gap_for = [&](const char* key, const scr::Curve& oracle_curve)
          -> std::optional<double> {
        if (!oracle_curve.defined || block[key]["values"].is_null())
          return std::nullopt;
        double sup = 0.0;
        const auto& vals = block[key]["values"];
        for (std::size_t i = 0; i < rep.grid.size(); ++i) {
          if (vals[i].is_null() || (!oracle_curve.ok.empty() && !oracle_curve.ok[i]))
            continue;
          sup = std::max(sup,
                         std::fabs(vals[i].get<double>() - oracle_curve.value[i]));
        }
        return sup;
      };
      const std::pair<const char*, const scr::Curve*> items[] = {
          {"fice_difference", &rep.fice_diff},
          {"sace_difference", &rep.sace_diff},
          {"aice_difference", &rep.aice_diff},
          {"total_difference", &rep.total_diff},
          {"pt89_difference", &rep.pt89_diff}};
      for (const auto& [key, curve] : items) {
        const std::optional<double> gap = gap_for(key, *curve);
        const std::string estimand(key, std::strlen(key) - 11);
        csv += scr::format_double(rho) + "," + estimand + ",difference,";
        if (gap) csv += scr::format_double(*gap);
        csv += '\n';
        gaps.push_back(Json{{"rho", rho},
                            {"estimand", estimand},
                            {"scale", "difference"},
                            {"sup_gap", gap ? Json(*gap) : Json(nullptr)}});
      }
    }
    scr::write_text_file((out_dir / "comparison.csv").string(), csv);
    outputs.push_back("comparison.csv");
    j["comparison"] = gaps;
  }

  scr::write_json((out_dir / "oracle.json").string(), j);
  scr::write_text_file((out_dir / "oracle.csv").string(), scr::oracle_csv(rep));
  write_manifest(out_dir, "oracle",
                 Json{{"po", args.po_file},
                      {"horizon", args.horizon},
                      {"grid", args.grid_count},
                      {"grid_points", args.grid_points},
                      {"randomization_p", args.randomization_p},
                      {"compare", args.compare}},
                 Json{{"po", input_hash}}, outputs);
  std::cout << "oracle written to " << (out_dir / "oracle.json").string()
            << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Causal analysis of semi-competing-risks data: simulation, "
      "frailty illness-death estimation, partial-identification bounds, and "
      "cross-world sensitivity analysis"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "configuration file with 'key = value' lines; command-line "
                 "flags override file values");

  SimulateArgs sim;
  CLI::App* s = app.add_subcommand("simulate",
                                   "Generate a cohort from a built-in scenario "
                                   "or a cohort-spec file");
  s->add_option("--scenario", sim.scenario,
                "built-in design: scenario-a or scenario-b");
  s->add_option("--spec", sim.spec_file, "cohort-spec config file");
  s->add_option("--theta", sim.theta, "frailty variance for both arms")
      ->capture_default_str();
  s->add_option("--rho", sim.rho, "cross-world frailty correlation")
      ->capture_default_str();
  s->add_option("--n", sim.n, "number of subjects")->capture_default_str();
  s->add_option("--seed", sim.seed, "random seed")->capture_default_str();
  s->add_flag("--common-randomness", sim.common_randomness,
              "share latent uniforms between the two worlds");
  s->add_option("--censor", sim.censor,
                "uniform censoring window 'low,high' on the observed records");
  s->add_option("--out", sim.out_dir, "output directory")
      ->capture_default_str();
  s->add_option("--threads", sim.threads, "worker threads (0 = auto)")
      ->capture_default_str();

  AnalyzeArgs an;
  CLI::App* a = app.add_subcommand(
      "analyze", "Run the full pipeline on an observed-data CSV");
  a->add_option("--data", an.data, "observed-data CSV")->required();
  a->add_option("--out", an.out_dir, "output directory")->capture_default_str();
  a->add_option("--horizon", an.horizon, "evaluation horizon r in (0, 1]")
      ->capture_default_str();
  a->add_option("--grid", an.grid_count, "number of evenly spaced grid times")
      ->capture_default_str();
  a->add_option("--grid-points", an.grid_points,
                "explicit comma-separated grid times (overrides --grid)");
  a->add_option("--rho", an.rho_list,
                "comma-separated cross-world correlations for the sensitivity "
                "analysis")
      ->capture_default_str();
  a->add_option("--mc-draws", an.mc_draws,
                "Monte Carlo frailty draws per covariate row (sensitivity)")
      ->capture_default_str();
  a->add_option("--functional-draws", an.functional_draws,
                "Monte Carlo frailty draws per covariate row (functionals; "
                "antithetic, must be even)")
      ->capture_default_str();
  a->add_option("--boot", an.boot,
                "bootstrap replicates (0 disables the bootstrap)")
      ->capture_default_str();
  a->add_flag("--fast-boot", an.fast_boot,
              "freeze the frailty variances at their point estimates inside "
              "bootstrap replicates");
  a->add_flag("--boot-sensitivity", an.boot_sensitivity,
              "also bootstrap the sensitivity fice curves (slow)");
  a->add_option("--caliper", an.caliper,
                "propensity caliper in standard-deviation units")
      ->capture_default_str();
  a->add_flag("--ps-only", an.ps_only,
              "match on the propensity score alone instead of Mahalanobis "
              "distance");
  a->add_flag("--skip-matching", an.skip_matching,
              "analyze all records without matching (randomized data)");
  a->add_option("--seed", an.seed, "random seed")->capture_default_str();
  a->add_option("--threads", an.threads, "worker threads (0 = auto)")
      ->capture_default_str();

  OracleArgs orc;
  CLI::App* o = app.add_subcommand(
      "oracle", "Exact estimands from a potential-outcomes CSV");
  o->add_option("--po", orc.po_file, "potential-outcomes CSV")->required();
  o->add_option("--out", orc.out_dir, "output directory")->capture_default_str();
  o->add_option("--horizon", orc.horizon, "evaluation horizon r in (0, 1]")
      ->capture_default_str();
  o->add_option("--grid", orc.grid_count, "number of evenly spaced grid times")
      ->capture_default_str();
  o->add_option("--grid-points", orc.grid_points,
                "explicit comma-separated grid times (overrides --grid)");
  o->add_option("--randomization-p", orc.randomization_p,
                "treatment probability used for the observed functionals")
      ->capture_default_str();
  o->add_option("--compare", orc.compare,
                "analysis report.json to compare against (sup-t gap table)");
  o->add_option("--threads", orc.threads, "worker threads (0 = auto)")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (s->parsed()) return cmd_simulate(sim);
    if (a->parsed()) return cmd_analyze(an);
    if (o->parsed()) return cmd_oracle(orc);
    std::cerr << "no subcommand given\n";
    return kExitValidation;
  } catch (const scr::EmNotConverged& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const scr::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    std::cerr << "error: " << msg << "\n";
    if (msg.find("converge") != std::string::npos ||
        msg.find("separat") != std::string::npos ||
        msg.find("diverg") != std::string::npos)
      return kExitConvergence;
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}
