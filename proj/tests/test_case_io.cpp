#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "acdcflow/case_io.hpp"

#include <algorithm>
#include <cmath>
#include <string>

using namespace acdcflow;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string bundled(const std::string& name) {
  return std::string(ACDCFLOW_CASE_DIR) + "/" + name;
}

bool mentions(const grid::Diagnostics& d, const std::string& needle) {
  for (const auto& e : d.errors) {
    if (e.find(needle) != std::string::npos) return true;
  }
  return false;
}

// Minimal valid hybrid document used as the base for mutations.
const char* kTinyHybrid = R"({
  "name": "tiny",
  "base": {"s_mva": 1.0, "u_ac_kv": 10.0},
  "ac_buses": [
    {"id": 1, "kind": "slack", "v_set": 1.0},
    {"id": 2, "p": -0.05, "q": -0.01}
  ],
  "ac_lines": [{"from": 1, "to": 2, "r": 0.01, "x": 0.03}],
  "dc_buses": [{"id": 1}],
  "converters": [
    {"id": 1, "pcc_bus": 2, "dc_bus": 1,
     "z_tr": [0.002, 0.1], "b_f": 0.05, "z_c": [0.001, 0.15],
     "loss_resistance": 0.01, "mode": "udc_q", "u_dc": 1.0, "q_s": 0.0}
  ]
})";

}  // namespace

TEST_CASE("a missing file is reported, not thrown") {
  const auto r = io::load_case_file("/nonexistent/nowhere.json");
  CHECK_FALSE(r.parse_ok);
  CHECK_FALSE(r.usable());
  CHECK(mentions(r.diagnostics, "cannot open file"));
}

TEST_CASE("syntax errors carry the offending line number") {
  const std::string text = "{\n  \"name\": \"x\",\n  \"ac_buses\": [,]\n}\n";
  const auto r = io::parse_case_text(text, "broken.json");
  CHECK_FALSE(r.parse_ok);
  CHECK(mentions(r.diagnostics, "broken.json: line 3"));
}

TEST_CASE("field-level type errors name the json path") {
  std::string text = kTinyHybrid;
  const auto pos = text.find("[0.002, 0.1]");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 12, "\"wrong\"");
  const auto r = io::parse_case_text(text, "t.json");
  CHECK_FALSE(r.parse_ok);
  CHECK(mentions(r.diagnostics, "converters[0].z_tr"));
}

TEST_CASE("a parsable document can still fail validation") {
  std::string text = kTinyHybrid;
  const auto pos = text.find("\"kind\": \"slack\", ");
  REQUIRE(pos != std::string::npos);
  text.erase(pos, 17);  // no slack bus left
  const auto r = io::parse_case_text(text, "t.json");
  CHECK(r.parse_ok);
  CHECK_FALSE(r.usable());
  CHECK_FALSE(r.diagnostics.ok());
}

TEST_CASE("scenario controls retarget converter modes and setpoints") {
  std::string text = kTinyHybrid;
  std::string with_scenario = text.substr(0, text.rfind('}'));
  with_scenario +=
      ",\n  \"scenario\": {\"controls\": [{\"converter\": 1, \"mode\": \"udc_us\","
      " \"u_dc\": 1.02, \"u_s\": 0.99}]}\n}";
  const auto r = io::parse_case_text(with_scenario, "t.json");
  REQUIRE_MESSAGE(r.usable(), r.diagnostics.joined());
  REQUIRE(r.net.converters.size() == 1);
  CHECK(r.net.converters[0].mode == grid::ControlMode::UdcUs);
  CHECK(r.net.converters[0].set.u_dc == doctest::Approx(1.02));
  CHECK(r.net.converters[0].set.u_s == doctest::Approx(0.99));
}

TEST_CASE("a scenario naming an unknown converter fails validation only") {
  std::string with_scenario = std::string(kTinyHybrid);
  with_scenario = with_scenario.substr(0, with_scenario.rfind('}'));
  with_scenario += ",\n  \"scenario\": {\"controls\": [{\"converter\": 9}]}\n}";
  const auto r = io::parse_case_text(with_scenario, "t.json");
  CHECK(r.parse_ok);
  CHECK_FALSE(r.usable());
  CHECK(mentions(r.diagnostics, "unknown converter"));
}

TEST_CASE("a scalar rho expands to an equicorrelation matrix") {
  const auto r = io::load_case_file(bundled("mtdc3_corr02.json"));
  REQUIRE_MESSAGE(r.usable(), r.diagnostics.joined());
  REQUIRE(r.net.stochastic.groups.size() == 1);
  const auto& g = r.net.stochastic.groups[0];
  REQUIRE(g.rho.rows() == 2);
  REQUIRE(g.rho.cols() == 2);
  CHECK(g.rho(0, 0) == 1.0);
  CHECK(g.rho(1, 1) == 1.0);
  CHECK(g.rho(0, 1) == doctest::Approx(0.2));
  CHECK(g.rho(1, 0) == doctest::Approx(0.2));
}

TEST_CASE("bundled scenario files land on the advertised control modes") {
  const auto r = io::load_case_file(bundled("mtdc3_sc3.json"));
  REQUIRE_MESSAGE(r.usable(), r.diagnostics.joined());
  const auto it = std::find_if(r.net.converters.begin(), r.net.converters.end(),
                               [](const grid::Converter& c) { return c.id == 2; });
  REQUIRE(it != r.net.converters.end());
  CHECK(it->mode == grid::ControlMode::PUs);
  CHECK(it->set.u_s == doctest::Approx(1.0));
  CHECK(it->set.p_s == doctest::Approx(0.11));
}

TEST_CASE("dc loads cannot carry reactive power") {
  std::string text = std::string(kTinyHybrid);
  text = text.substr(0, text.rfind('}'));
  text +=
      ",\n  \"stochastic\": {\"loads\": [{\"name\": \"ld\", \"bus\": 1, \"dc\": true,"
      " \"mu_p\": 0.05, \"sigma_p\": 0.01, \"mu_q\": 0.01, \"sigma_q\": 0.001}]}\n}";
  const auto r = io::parse_case_text(text, "t.json");
  CHECK_FALSE(r.parse_ok);
  CHECK(mentions(r.diagnostics, "reactive"));
}

TEST_CASE("a load expands to signed gaussian p and q sources") {
  std::string text = std::string(kTinyHybrid);
  text = text.substr(0, text.rfind('}'));
  text +=
      ",\n  \"stochastic\": {\"loads\": [{\"name\": \"ld\", \"bus\": 2,"
      " \"mu_p\": 0.05, \"sigma_p\": 0.01, \"mu_q\": 0.02, \"sigma_q\": 0.002}]}\n}";
  const auto r = io::parse_case_text(text, "t.json");
  REQUIRE_MESSAGE(r.usable(), r.diagnostics.joined());
  REQUIRE(r.net.stochastic.sources.size() == 2);
  const auto& p = r.net.stochastic.sources[0];
  const auto& q = r.net.stochastic.sources[1];
  CHECK(p.name == "ld:p");
  CHECK(p.kind == stoch::InjectionKind::AcP);
  CHECK(p.sign == -1.0);
  CHECK(q.name == "ld:q");
  CHECK(q.kind == stoch::InjectionKind::AcQ);
  const auto* gm = std::get_if<stoch::GaussianModel>(&p.model);
  REQUIRE(gm != nullptr);
  CHECK(gm->mu == doctest::Approx(0.05));
  CHECK(gm->sigma == doctest::Approx(0.01));
}

TEST_CASE("bus angles are given in degrees") {
  std::string text = std::string(kTinyHybrid);
  const auto pos = text.find("\"p\": -0.05");
  REQUIRE(pos != std::string::npos);
  text.insert(pos, "\"angle_deg\": 90.0, ");
  const auto r = io::parse_case_text(text, "t.json");
  REQUIRE(r.parse_ok);
  CHECK(r.net.ac_buses[1].angle_set == doctest::Approx(kPi / 2.0).epsilon(1e-12));
}

TEST_CASE("an unnamed case takes its file stem as its name") {
  std::string text = std::string(kTinyHybrid);
  const auto pos = text.find("\"name\": \"tiny\",");
  REQUIRE(pos != std::string::npos);
  text.erase(pos, 15);
  const auto r = io::parse_case_text(text, "/some/dir/station_demo.json");
  REQUIRE(r.parse_ok);
  CHECK(r.net.name == "station_demo");
}

TEST_CASE("a converter loss estimate is folded into an equivalent resistance") {
  std::string text = std::string(kTinyHybrid);
  const auto pos = text.find("\"loss_resistance\": 0.01");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 23, "\"loss_estimate\": {\"p_ac\": 0.3, \"p_dc\": 0.29}");
  const auto r = io::parse_case_text(text, "t.json");
  REQUIRE_MESSAGE(r.usable(), r.diagnostics.joined());
  CHECK(r.net.converters[0].loss_resistance == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("optional fields default sensibly") {
  const auto r = io::parse_case_text(kTinyHybrid, "t.json");
  REQUIRE_MESSAGE(r.usable(), r.diagnostics.joined());
  CHECK(r.net.ac_buses[1].kind == grid::AcBusKind::PQ);  // kind defaults to pq
  CHECK(r.net.ac_buses[1].v_set == 1.0);
  CHECK(r.net.ac_lines[0].b_shunt == 0.0);
  CHECK(r.net.dc_buses[0].p_inject == 0.0);
  CHECK(r.net.name == "tiny");
}

TEST_CASE("every bundled case parses, validates and converges structurally") {
  const char* names[] = {"mtdc3_sc1.json",    "mtdc3_sc3.json",   "mtdc3_sc4.json",
                         "mtdc3_sc5.json",    "mtdc3_sc6.json",   "mtdc3_corr02.json",
                         "mtdc3_corr05.json", "mtdc3_corr08.json", "mtdc5.json",
                         "mtdc5c.json"};
  for (const char* n : names) {
    const auto r = io::load_case_file(bundled(n));
    CHECK_MESSAGE(r.usable(), (std::string(n) + ": " + r.diagnostics.joined()));
  }
}
