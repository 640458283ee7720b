#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "acdcflow.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string bundled(const std::string& name) {
  return std::string(ACDCFLOW_CASE_DIR) + "/" + name;
}

struct CaseHandle {
  acdc_case* c = nullptr;
  ~CaseHandle() { acdc_case_free(c); }
};

struct SolutionHandle {
  acdc_solution* s = nullptr;
  ~SolutionHandle() { acdc_solution_free(s); }
};

}  // namespace

TEST_CASE("version and error strings are always valid pointers") {
  REQUIRE(acdc_version() != nullptr);
  CHECK(std::strlen(acdc_version()) >= 5);  // semantic version
  REQUIRE(acdc_last_error() != nullptr);
}

TEST_CASE("loading a bundled case exposes its counts and name") {
  CaseHandle h;
  REQUIRE(acdc_case_load(bundled("mtdc3_sc1.json").c_str(), &h.c) == ACDC_OK);
  REQUIRE(h.c != nullptr);
  CHECK(std::string(acdc_case_name(h.c)) == "mtdc3_sc1");
  CHECK(acdc_case_ac_bus_count(h.c) == 10);
  CHECK(acdc_case_dc_bus_count(h.c) == 3);
  CHECK(acdc_case_converter_count(h.c) == 3);
}

TEST_CASE("parse failures return null handles and set the thread error") {
  acdc_case* c = reinterpret_cast<acdc_case*>(0x1);
  const acdc_status st = acdc_case_parse("{ not json", "bad.json", &c);
  CHECK(st == ACDC_PARSE_FAILED);
  CHECK(c == nullptr);
  CHECK(std::strlen(acdc_last_error()) > 0);
}

TEST_CASE("validation failures are distinguished from parse failures") {
  acdc_case* c = nullptr;
  const acdc_status st =
      acdc_case_parse(R"({"ac_buses": [{"id": 1}, {"id": 2}]})", "v.json", &c);
  CHECK(st == ACDC_VALIDATION_FAILED);
  CHECK(c == nullptr);
}

TEST_CASE("null arguments are rejected, never dereferenced") {
  CHECK(acdc_case_load(nullptr, nullptr) == ACDC_INVALID_ARGS);
  CHECK(acdc_solve(nullptr, 0, 0.0, nullptr) == ACDC_INVALID_ARGS);
  acdc_case_free(nullptr);      // must be no-ops
  acdc_solution_free(nullptr);
}

TEST_CASE("a solve honours defaults and satisfies the power balance") {
  CaseHandle h;
  REQUIRE(acdc_case_load(bundled("mtdc3_sc1.json").c_str(), &h.c) == ACDC_OK);
  SolutionHandle s;
  REQUIRE(acdc_solve(h.c, 0, 0.0, &s.s) == ACDC_OK);
  REQUIRE(s.s != nullptr);

  CHECK(acdc_solution_iterations(s.s) >= 1);
  CHECK(acdc_solution_iterations(s.s) <= 20);
  CHECK(acdc_solution_max_mismatch(s.s) < 1e-8);
  CHECK(std::fabs(acdc_solution_balance_residual(s.s)) < 1e-7);

  double mag = 0.0, ang = 1.0;
  REQUIRE(acdc_solution_ac_voltage(s.s, 1, &mag, &ang) == ACDC_OK);
  CHECK(mag == doctest::Approx(1.0));   // slack holds its setpoint
  CHECK(ang == doctest::Approx(0.0));

  double udc = 0.0;
  REQUIRE(acdc_solution_dc_voltage(s.s, 1, &udc) == ACDC_OK);
  CHECK(udc == doctest::Approx(1.0));   // constant-voltage station setpoint

  CHECK(acdc_solution_ac_voltage(s.s, 99, &mag, &ang) == ACDC_INVALID_ARGS);
  CHECK(acdc_solution_dc_voltage(s.s, 99, &udc) == ACDC_INVALID_ARGS);
}

TEST_CASE("a tightened tolerance tightens the mismatch") {
  CaseHandle h;
  REQUIRE(acdc_case_load(bundled("mtdc5.json").c_str(), &h.c) == ACDC_OK);
  SolutionHandle s;
  REQUIRE(acdc_solve(h.c, 30, 1e-11, &s.s) == ACDC_OK);
  CHECK(acdc_solution_max_mismatch(s.s) < 1e-11);
}

TEST_CASE("the run entry point drives the batch pipeline") {
  const fs::path dir = fs::temp_directory_path() / "acdcflow_capi_run";
  fs::remove_all(dir);
  acdc_run_options opt = {};
  opt.method = "flow";
  const std::string out_dir = dir.string();
  opt.out_dir = out_dir.c_str();
  CHECK(acdc_run(bundled("mtdc3_sc1.json").c_str(), &opt) == ACDC_OK);
  CHECK(fs::exists(dir / "buses.csv"));
  CHECK(fs::exists(dir / "balance.csv"));

  CHECK(acdc_run(bundled("missing.json").c_str(), &opt) == ACDC_PARSE_FAILED);
  opt.method = "bogus";
  CHECK(acdc_run(bundled("mtdc3_sc1.json").c_str(), &opt) == ACDC_INVALID_ARGS);
  fs::remove_all(dir);
}
