// Serialization layer: CSV round-trips (including infinite infection times
// as empty fields), line-numbered parse errors, config parsing, exact
// double formatting, content hashing, and JSON shapes.

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "scr/bounds.hpp"
#include "scr/domain.hpp"
#include "scr/io.hpp"
#include "scr/oracle.hpp"

using namespace scr;
using doctest::Approx;

TEST_CASE("shortest round-trip double formatting") {
  for (double v : {0.1, 1.0 / 3, 1e-300, -2.5e17, 0.0, 52.0, 0.017452406437283512}) {
    const std::string s = format_double(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(-3.0) == "-3");
  CHECK(std::stod(format_double(std::numeric_limits<double>::infinity())) ==
        std::numeric_limits<double>::infinity());
}

TEST_CASE("content hashing is stable and sensitive") {
  // FNV-1a 64 reference values.
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("hello") != fnv1a_hex("hellp"));
  CHECK(fnv1a_hex("hello").size() == 16);
}

TEST_CASE("observed-data CSV round-trip") {
  std::vector<ObservedRecord> rs = {
      {"s1", 0, 0.25, true, 0.75, true, {1.0, -0.5}},
      {"s2", 1, 1.0, false, 1.0, false, {0.0, 0.125}},
  };
  const std::string csv = observed_csv(rs);
  CHECK(csv.rfind("id,treat,y1,d1,y2,d2,x1,x2\n", 0) == 0);
  const auto back = parse_observed_csv(csv);
  REQUIRE(back.size() == 2);
  CHECK(back[0].id == "s1");
  CHECK(back[0].arm == 0);
  CHECK(back[0].y1 == 0.25);
  CHECK(back[0].d1);
  CHECK(back[0].x == rs[0].x);
  CHECK(back[1].arm == 1);
  CHECK_FALSE(back[1].d2);
  CHECK(back[1].x == rs[1].x);

  SUBCASE("file round-trip") {
    const std::string path = "/tmp/scr_io_observed_test.csv";
    write_observed_csv(path, rs);
    const auto again = read_observed_csv(path);
    REQUIRE(again.size() == 2);
    CHECK(again[1].x == rs[1].x);
    CHECK(hash_file(path) == fnv1a_hex(csv));
    std::remove(path.c_str());
  }

  SUBCASE("errors carry line numbers and reasons") {
    CHECK_THROWS_AS(parse_observed_csv("wrong,header\n"), std::invalid_argument);
    const std::string bad_field =
        "id,treat,y1,d1,y2,d2,x1\naa,0,0.1,1,xyz,1,0.5\n";
    CHECK_THROWS_WITH_AS(parse_observed_csv(bad_field),
                         doctest::Contains("line 2"), std::invalid_argument);
    const std::string bad_arm = "id,treat,y1,d1,y2,d2,x1\naa,7,0.1,1,0.2,1,0.5\n";
    CHECK_THROWS_AS(parse_observed_csv(bad_arm), std::invalid_argument);
    const std::string short_row = "id,treat,y1,d1,y2,d2,x1\naa,0,0.1,1\n";
    CHECK_THROWS_AS(parse_observed_csv(short_row), std::invalid_argument);
    CHECK_THROWS_AS(read_observed_csv("/nonexistent/nowhere.csv"), IoError);
  }
}

TEST_CASE("potential-outcomes CSV round-trip with empty infinite fields") {
  std::vector<PotentialOutcomeProfile> ps = {
      {0.25, 0.5, kNever, 2.0},
      {kNever, 1.5, 0.125, 0.25},
  };
  std::vector<std::array<double, 2>> gs = {{1.0, 2.0}, {0.5, 0.75}};
  const std::string csv = potential_csv(ps, gs);
  CHECK(csv.rfind("id,t1_0,t2_0,t1_1,t2_1,gamma0,gamma1\n", 0) == 0);
  // A never-infected time is an empty field, not "inf".
  CHECK(csv.find("inf") == std::string::npos);
  const PotentialTable back = parse_potential_csv(csv);
  REQUIRE(back.profiles.size() == 2);
  CHECK(back.profiles[0].t1_0 == 0.25);
  CHECK(std::isinf(back.profiles[0].t1_1));
  CHECK(std::isinf(back.profiles[1].t1_0));
  CHECK(back.profiles[1].t1_1 == 0.125);
  CHECK(back.profiles[1].t2_1 == 0.25);
  CHECK(back.gammas == gs);

  SUBCASE("file round-trip") {
    const std::string path = "/tmp/scr_io_potential_test.csv";
    write_potential_csv(path, ps, gs);
    const PotentialTable again = read_potential_csv(path);
    CHECK(again.profiles[1].t2_0 == 1.5);
    std::remove(path.c_str());
  }

  SUBCASE("mismatched lengths and bad rows raise") {
    CHECK_THROWS_AS(potential_csv(ps, {{1.0, 1.0}}), std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        parse_potential_csv(
            "id,t1_0,t2_0,t1_1,t2_1,gamma0,gamma1\np0,0.1,zz,,1,1,1\n"),
        doctest::Contains("line 2"), std::invalid_argument);
  }
}

TEST_CASE("config parsing") {
  const std::string text =
      "# cohort settings\n"
      "n = 100\n"
      "seed=7\n"
      "  covariates = bernoulli(0.5) uniform(-1,1)  \n"
      "\n"
      "theta0 = 1.0\n";
  const auto kv = parse_config(text);
  CHECK(kv.size() == 4);
  CHECK(kv.at("n") == "100");
  CHECK(kv.at("seed") == "7");
  CHECK(kv.at("covariates") == "bernoulli(0.5) uniform(-1,1)");
  CHECK(kv.at("theta0") == "1.0");
  CHECK_THROWS_AS(parse_config("n = 1\nn = 2\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("just a bare line\n"), std::invalid_argument);
  CHECK_THROWS_AS(read_config("/nonexistent/nowhere.cfg"), IoError);
}

TEST_CASE("canonical names") {
  CHECK(assumption_name(OrpAssumption::none) == "none");
  CHECK(assumption_name(OrpAssumption::weak_orp) == "weak-orp");
  CHECK(assumption_name(OrpAssumption::ios_orp) == "ios-orp");
  CHECK(scale_name(EffectScale::difference) == "difference");
  CHECK(scale_name(EffectScale::risk_ratio) == "risk-ratio");
}

TEST_CASE("JSON shapes") {
  SUBCASE("curve with per-point gaps") {
    Curve c;
    c.value = {0.5, 0.25};
    c.ok = {1, 0};
    const Json j = to_json(c);
    CHECK(j["defined"] == true);
    CHECK(j["values"][0] == 0.5);
    CHECK(j["values"][1].is_null());
    Curve u = Curve::undefined_curve(3);
    const Json ju = to_json(u);
    CHECK(ju["defined"] == false);
    CHECK(ju["values"].is_null());
  }

  SUBCASE("interval and bounds report") {
    Interval iv{-0.25, 0.5, true, true};
    const Json j = to_json(iv);
    CHECK(j["lower"] == -0.25);
    CHECK(j["upper"] == 0.5);
    Interval undef{0.0, 0.0, false, false};
    const Json ju = to_json(undef);
    CHECK(ju["lower"].is_null());
    CHECK(ju["upper"].is_null());

    ObservedFunctionals f;
    f.grid = {0.5, 1.0};
    f.horizon = 1.0;
    f.epsi = {0.7, 0.8};
    f.ef1 = {std::vector<double>{0.1, 0.2}, std::vector<double>{0.15, 0.3}};
    f.ef1_r = {0.2, 0.3};
    f.eboth0 = 0.05;
    const BoundsReport rep = bounds_report(f);
    const Json jr = to_json(rep);
    CHECK(jr["grid"].size() == 2);
    CHECK(jr["falsified"] == false);
    CHECK(jr["pi_ios"].contains("ios-orp"));
    CHECK(jr["pi_ios"].contains("weak-orp"));
    CHECK(jr["pi_ios"].contains("none"));
    CHECK(jr["curves"].size() == 6);
    bool saw_ios_diff = false;
    for (const auto& c : jr["curves"]) {
      if (c["assumption"] == "ios-orp" && c["scale"] == "difference") {
        saw_ios_diff = true;
        CHECK(c["lower"].size() == 2);
        CHECK(c["upper"].size() == 2);
      }
    }
    CHECK(saw_ios_diff);

    SUBCASE("bounds CSV mirrors the report") {
      const std::string csv = bounds_csv(rep);
      CHECK(csv.rfind("t,assumption,scale,lower,upper\n", 0) == 0);
      std::size_t lines = 0;
      for (char ch : csv) lines += ch == '\n';
      CHECK(lines == 1 + 6 * 2);  // header + 6 curves x 2 grid points
      CHECK(csv.find("ios-orp") != std::string::npos);
      CHECK(csv.find("risk-ratio") != std::string::npos);
    }
  }

  SUBCASE("oracle report and CSV") {
    const std::vector<WeightedProfile> pop = {
        {PotentialOutcomeProfile{kNever, 2.0, kNever, 2.0}, 0.5},
        {PotentialOutcomeProfile{kNever, 2.0, 0.5, 2.0}, 0.25},
        {PotentialOutcomeProfile{kNever, 0.5, kNever, 0.5}, 0.25},
    };
    const std::vector<double> grid = {0.5, 1.0};
    const OracleReport rep = oracle_estimands(pop, grid, 1.0);
    const Json j = to_json(rep);
    CHECK(j["pi_ios"] == 0.75);
    CHECK(j["pt_probs"].size() == 16);
    CHECK(j["fice_difference"]["values"][1] == Approx(1.0 / 3).epsilon(1e-12));
    CHECK(j["aice_difference"]["defined"] == false);
    const std::string csv = oracle_csv(rep);
    CHECK(csv.rfind("t,estimand,scale,value\n", 0) == 0);
    // Undefined points serialize as empty value fields.
    CHECK(csv.find("aice") != std::string::npos);
  }

  SUBCASE("step function") {
    const StepFunction f({0.5, 1.0}, {0.25, 0.5});
    const Json j = to_json(f);
    CHECK(j["times"].size() == 2);
    CHECK(j["jumps"][1] == 0.5);
  }
}
