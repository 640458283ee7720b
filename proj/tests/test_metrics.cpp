#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "acdcflow/case_io.hpp"
#include "acdcflow/metrics.hpp"

#include <cmath>
#include <string>

using namespace acdcflow;

namespace {

grid::NetworkCase load_case(const std::string& name) {
  auto r = io::load_case_file(std::string(ACDCFLOW_CASE_DIR) + "/" + name);
  REQUIRE_MESSAGE(r.usable(), r.diagnostics.joined());
  return r.net;
}

}  // namespace

TEST_CASE("relative error is percent of the oracle value") {
  const auto a = metrics::relative_error(2.0, 1.0);
  CHECK(a.defined);
  CHECK(a.percent == doctest::Approx(100.0));
  const auto b = metrics::relative_error(0.95, 1.0);
  CHECK(b.percent == doctest::Approx(5.0));
  const auto c = metrics::relative_error(1.0, 1.0);
  CHECK(c.percent == doctest::Approx(0.0));
  const auto undef = metrics::relative_error(1.0, 0.0);
  CHECK_FALSE(undef.defined);
}

TEST_CASE("arms divides the root of summed squares by the point count") {
  const int n = 100;
  Eigen::VectorXd a = Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);
  Eigen::VectorXd b = a.array() + 0.1;
  // sqrt(100 * 0.01) / 100 * 100
  CHECK(metrics::arms(a, b) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(metrics::arms(a, a) == doctest::Approx(0.0));
  Eigen::VectorXd short_b = b.head(50);
  CHECK_THROWS_AS(metrics::arms(a, short_b), std::invalid_argument);
}

TEST_CASE("tic is bounded on [0,1] with the documented landmarks") {
  Eigen::VectorXd c = Eigen::VectorXd::LinSpaced(64, 0.1, 2.0);
  const Eigen::VectorXd twice = 2.0 * c;
  CHECK(metrics::tic(c, c) == doctest::Approx(0.0));
  CHECK(metrics::tic(c, twice) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(64);
  CHECK(metrics::tic(zero, zero) == doctest::Approx(0.0));
  CHECK(metrics::tic(zero, c) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(metrics::tic(c, zero) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("band probabilities read the series cdf at the standard thresholds") {
  Eigen::VectorXd cums(2);
  cums << 1.05, 0.05 * 0.05;  // normal centered exactly on the OVP threshold
  const auto curve = gc::build_curve(cums, 2, 513);
  const auto b = metrics::band_probabilities(curve);
  REQUIRE(b.defined);
  CHECK(b.ovp == doctest::Approx(0.5).epsilon(1e-4));
  const auto phi = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
  CHECK(b.lvp_hi == doctest::Approx(phi(1.0)).epsilon(1e-4));    // F(1.10)
  CHECK(b.lvp_lo == doctest::Approx(phi(-3.0)).epsilon(1e-3));   // F(0.90)
}

TEST_CASE("band probabilities fall back to exact counts on raw samples") {
  Eigen::VectorXd sorted(4);
  sorted << 0.8, 0.95, 1.06, 1.2;
  const auto b = metrics::band_probabilities_from_samples(sorted);
  CHECK(b.ovp == doctest::Approx(0.5));      // 2 of 4 above 1.05
  CHECK(b.lvp_hi == doctest::Approx(0.75));  // 3 of 4 below 1.10
  CHECK(b.lvp_lo == doctest::Approx(0.25));  // 1 of 4 below 0.90
}

TEST_CASE("off-grid thresholds clamp to certainty once the tails saturate") {
  Eigen::VectorXd cums(2);
  cums << 0.5, 1e-8;  // curve spans 0.5 +/- 6e-4: every threshold is off-grid
  const auto curve = gc::build_curve(cums, 2, 65);
  REQUIRE_FALSE(curve.degenerate);
  const auto b = metrics::band_probabilities(curve);
  // Every threshold sits above the grid, so F clamps to 1 at each of them:
  // no overvoltage mass, and the whole distribution is below both low bands.
  CHECK(b.defined);
  CHECK(b.ovp == doctest::Approx(0.0));
  CHECK(b.lvp_hi == doctest::Approx(1.0));
  CHECK(b.lvp_lo == doctest::Approx(1.0));
}

TEST_CASE("comparison requires identical monitored lists") {
  const auto net = load_case("mtdc3_sc1.json");
  const auto mon_u = solver::default_monitors(net, "U");
  const auto mon_u9 = solver::default_monitors(net, "U:9");

  plf::PlfOptions popt;
  popt.grid_points = 65;
  const auto cm = plf::run_plf_cm(net, popt, mon_u);
  REQUIRE(cm.ok);

  mcs::McsOptions mopt;
  mopt.samples = 200;
  const auto oracle = mcs::run_mcs(net, mopt, mon_u9);
  REQUIRE(oracle.ok);

  CHECK_THROWS_AS(metrics::compare(cm, oracle), std::invalid_argument);
}

TEST_CASE("comparison rows carry both sides and the class rollup") {
  const auto net = load_case("mtdc3_sc1.json");
  const auto mon = solver::default_monitors(net, "U:9,Udc:2");

  plf::PlfOptions popt;
  popt.grid_points = 65;
  const auto cm = plf::run_plf_cm(net, popt, mon);
  REQUIRE(cm.ok);

  mcs::McsOptions mopt;
  mopt.samples = 2000;
  const auto oracle = mcs::run_mcs(net, mopt, mon);
  REQUIRE(oracle.ok);

  const auto rep = metrics::compare(cm, oracle);
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0].id == "U:9");
  CHECK(rep.rows[0].cls == "U");
  CHECK(rep.rows[1].id == "Udc:2");

  for (const auto& row : rep.rows) {
    REQUIRE(row.eps_mu.defined);
    CHECK(row.eps_mu.percent < 1.0);  // means agree far inside the 2% gate
    CHECK(row.mean_cm == doctest::Approx(row.mean_mcs).epsilon(0.01));
    CHECK(row.tic_val >= 0.0);
    CHECK(row.tic_val <= 1.0);
    CHECK(row.arms_pct >= 0.0);
  }

  REQUIRE(rep.classes.size() == 2);
  CHECK(rep.classes[0].cls == "U");
  CHECK(rep.classes[1].cls == "Udc");
  CHECK(rep.classes[0].count == 1);
  CHECK(rep.classes[0].eps_mu_max == doctest::Approx(rep.rows[0].eps_mu.percent));
  CHECK(rep.classes[0].tic_mean == doctest::Approx(rep.rows[0].tic_val));
}
