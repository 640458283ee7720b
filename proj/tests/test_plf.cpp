#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "acdcflow/case_io.hpp"
#include "acdcflow/plf.hpp"

#include <cmath>
#include <string>

using namespace acdcflow;

namespace {

grid::NetworkCase chain_case() {
  grid::NetworkCase net;
  net.name = "chain";
  net.base = grid::make_bases(1.0, 10.0);
  net.ac_buses = {{1, grid::AcBusKind::Slack, 0.0, 0.0, 1.0, 0.0},
                  {2, grid::AcBusKind::PQ, 0.0, 0.0, 1.0, 0.0},
                  {3, grid::AcBusKind::PQ, 0.0, -0.02, 1.0, 0.0}};
  net.ac_lines = {{1, 2, 0.01, 0.03, 0.0}, {2, 3, 0.01, 0.03, 0.0}};
  return net;
}

stoch::Source gauss_load(const std::string& name, int bus, double mu, double sigma,
                         const std::string& group = "") {
  stoch::Source s;
  s.name = name;
  s.node = bus;
  s.kind = stoch::InjectionKind::AcP;
  s.sign = -1.0;
  s.model = stoch::GaussianModel{mu, sigma};
  s.group = group;
  return s;
}

grid::NetworkCase load_case(const std::string& name) {
  auto r = io::load_case_file(std::string(ACDCFLOW_CASE_DIR) + "/" + name);
  REQUIRE_MESSAGE(r.usable(), r.diagnostics.joined());
  return r.net;
}

}  // namespace

TEST_CASE("mean injection deltas carry signed source means") {
  auto net = load_case("mtdc3_sc1.json");
  const solver::Problem p(net);
  const auto deltas = plf::mean_injection_deltas(p);
  REQUIRE_FALSE(deltas.empty());

  auto total = [&](solver::InjectionDelta::Kind kind, int bus_index) {
    double v = 0.0;
    for (const auto& d : deltas) {
      if (d.kind == kind && d.bus == bus_index) v += d.value;
    }
    return v;
  };

  const double beta_mean = 0.6799 / (0.6799 + 1.7787);
  // bus 9: beta pv (+0.10 r_m) and a gaussian load (-0.15)
  CHECK(total(solver::InjectionDelta::Kind::AcP, p.ac_bus_index(9)) ==
        doctest::Approx(0.10 * beta_mean - 0.15).epsilon(1e-12));
  CHECK(total(solver::InjectionDelta::Kind::AcQ, p.ac_bus_index(9)) ==
        doctest::Approx(-0.05).epsilon(1e-12));
  // dc bus 2: beta pv at r_m 0.06; dc bus 3: gaussian load
  CHECK(total(solver::InjectionDelta::Kind::DcP, p.dc_bus_index(2)) ==
        doctest::Approx(0.06 * beta_mean).epsilon(1e-12));
  CHECK(total(solver::InjectionDelta::Kind::DcP, p.dc_bus_index(3)) ==
        doctest::Approx(-0.05).epsilon(1e-12));
}

TEST_CASE("first cumulant is the base solution at expected injections") {
  auto net = chain_case();
  net.stochastic.sources = {gauss_load("ld2", 2, 0.10, 1e-8)};
  REQUIRE(grid::validate_case(net).ok());

  const auto monitored = solver::default_monitors(net);
  const auto res = plf::run_plf_cm(net, {}, monitored);
  REQUIRE_MESSAGE(res.ok, (res.stage + ": " + res.error));
  REQUIRE(res.base.converged);

  const Eigen::VectorXd base =
      solver::monitored_values(solver::Problem(net), res.base.state, monitored);
  for (size_t i = 0; i < res.variables.size(); ++i) {
    CHECK(res.variables[i].cumulants[0] == doctest::Approx(base[i]).epsilon(1e-12));
    if (!res.variables[i].curve.degenerate) {
      CHECK(res.variables[i].curve.mean ==
            doctest::Approx(res.variables[i].cumulants[0]).epsilon(1e-12));
    }
  }
}

TEST_CASE("all-gaussian correlated groups propagate the exact covariance") {
  auto net = chain_case();
  net.stochastic.sources = {gauss_load("ld2", 2, 0.10, 0.02, "g"),
                            gauss_load("ld3", 3, 0.08, 0.015, "g")};
  Eigen::MatrixXd rho(2, 2);
  rho << 1.0, 0.5, 0.5, 1.0;
  net.stochastic.groups = {{"g", rho}};
  REQUIRE(grid::validate_case(net).ok());

  const auto monitored = solver::default_monitors(net, "U");
  const auto res = plf::run_plf_cm(net, {}, monitored);
  REQUIRE_MESSAGE(res.ok, (res.stage + ": " + res.error));
  CHECK(res.sampled_groups == 0);

  Eigen::MatrixXd cov(2, 2);
  cov << 0.02 * 0.02, 0.5 * 0.02 * 0.015, 0.5 * 0.02 * 0.015, 0.015 * 0.015;
  const int ca = res.sens.column_of(solver::InjectionDelta::Kind::AcP, 1);
  const int cb = res.sens.column_of(solver::InjectionDelta::Kind::AcP, 2);
  REQUIRE(ca >= 0);
  REQUIRE(cb >= 0);
  for (size_t i = 0; i < res.variables.size(); ++i) {
    Eigen::Vector2d t(res.sens.t0(i, ca), res.sens.t0(i, cb));
    const double want = t.dot(cov * t);
    CHECK(res.variables[i].cumulants[1] == doctest::Approx(want).epsilon(1e-10));
    // gaussian sources leave all higher cumulants at zero
    for (int k = 2; k < res.variables[i].cumulants.size(); ++k) {
      CHECK(std::abs(res.variables[i].cumulants[k]) < 1e-14);
    }
  }
}

TEST_CASE("identity correlation groups behave exactly like independent sources") {
  auto grouped = chain_case();
  grouped.stochastic.sources = {gauss_load("ld2", 2, 0.10, 0.02, "g"),
                                gauss_load("ld3", 3, 0.08, 0.015, "g")};
  grouped.stochastic.groups = {{"g", Eigen::MatrixXd::Identity(2, 2)}};
  REQUIRE(grid::validate_case(grouped).ok());

  auto indep = chain_case();
  indep.stochastic.sources = {gauss_load("ld2", 2, 0.10, 0.02),
                              gauss_load("ld3", 3, 0.08, 0.015)};
  REQUIRE(grid::validate_case(indep).ok());

  const auto monitored = solver::default_monitors(grouped);
  const auto a = plf::run_plf_cm(grouped, {}, monitored);
  const auto b = plf::run_plf_cm(indep, {}, monitored);
  REQUIRE(a.ok);
  REQUIRE(b.ok);
  CHECK(a.sampled_groups == 0);
  for (size_t i = 0; i < a.variables.size(); ++i) {
    const auto& ca = a.variables[i].cumulants;
    const auto& cb = b.variables[i].cumulants;
    for (int k = 0; k < ca.size(); ++k) {
      CHECK(std::abs(ca[k] - cb[k]) <= 1e-12 * std::max(1.0, std::abs(cb[k])));
    }
  }
}

TEST_CASE("correlation between beta plants widens the output spread monotonically") {
  auto with_rho = [&](double r) {
    auto net = chain_case();
    stoch::Source pv;
    pv.name = "pv_a";
    pv.node = 3;
    pv.kind = stoch::InjectionKind::AcP;
    pv.model = stoch::BetaPvModel{0.6799, 1.7787, 0.2};
    pv.group = "pv";
    stoch::Source pv2 = pv;
    pv2.name = "pv_b";
    net.stochastic.sources = {pv, pv2};
    Eigen::MatrixXd rho(2, 2);
    rho << 1.0, r, r, 1.0;
    net.stochastic.groups = {{"pv", rho}};
    REQUIRE(grid::validate_case(net).ok());
    const auto monitored = solver::default_monitors(net, "U:3");
    const auto res = plf::run_plf_cm(net, {}, monitored);
    REQUIRE_MESSAGE(res.ok, (res.stage + ": " + res.error));
    CHECK(res.sampled_groups == 1);
    return std::sqrt(res.variables[0].cumulants[1]);
  };

  const double s1 = with_rho(0.1), s5 = with_rho(0.5), s9 = with_rho(0.9);
  CHECK(s1 < s5);
  CHECK(s5 < s9);
  // perfectly correlated equal plants double the spread of one; 0.9 is close
  CHECK(s9 / s1 > 1.2);
}

TEST_CASE("full three-terminal case produces well-formed curves") {
  const auto net = load_case("mtdc3_sc1.json");
  const auto monitored = solver::default_monitors(net);
  plf::PlfOptions opt;
  opt.grid_points = 129;
  const auto res = plf::run_plf_cm(net, opt, monitored);
  REQUIRE_MESSAGE(res.ok, (res.stage + ": " + res.error));
  REQUIRE(res.variables.size() == monitored.size());
  int live = 0, warned = 0;
  for (const auto& v : res.variables) {
    if (v.curve.degenerate) continue;
    ++live;
    warned += v.curve.quality_warning ? 1 : 0;
    CHECK(v.curve.x.size() == 129);
    CHECK(v.curve.sigma > 0.0);
    // cdf ends where a distribution should
    CHECK(v.curve.cdf[0] < 0.01);
    CHECK(v.curve.cdf[v.curve.cdf.size() - 1] > 0.99);
  }
  CHECK(live > 20);
  // the strongly skewed source legitimately flags a few curves, not the bulk
  CHECK(warned < live / 2);
}

TEST_CASE("order two truncates every curve to its matching normal") {
  const auto net = load_case("mtdc3_sc1.json");
  const auto monitored = solver::default_monitors(net, "U:9");
  plf::PlfOptions lo, hi;
  lo.order = 2;
  hi.order = 8;
  const auto a = plf::run_plf_cm(net, lo, monitored);
  const auto b = plf::run_plf_cm(net, hi, monitored);
  REQUIRE(a.ok);
  REQUIRE(b.ok);
  CHECK(a.variables[0].cumulants.size() == 2);
  CHECK(b.variables[0].cumulants.size() == 8);
  CHECK(a.variables[0].cumulants[1] ==
        doctest::Approx(b.variables[0].cumulants[1]).epsilon(1e-12));
}
