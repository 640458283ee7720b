#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "acdcflow/rng.hpp"
#include "acdcflow/stochastics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace acdcflow;
using namespace acdcflow::stoch;

TEST_CASE("rng substreams are deterministic and index-separated") {
  rng::Stream a(42, rng::kSaltMcsSample, 7);
  rng::Stream b(42, rng::kSaltMcsSample, 7);
  rng::Stream c(42, rng::kSaltMcsSample, 8);
  bool all_equal = true, any_equal_to_c = false;
  for (int i = 0; i < 100; ++i) {
    const double ua = a.uniform01(), ub = b.uniform01(), uc = c.uniform01();
    all_equal = all_equal && (ua == ub);
    any_equal_to_c = any_equal_to_c || (ua == uc);
    CHECK(ua > 0.0);
    CHECK(ua < 1.0);
  }
  CHECK(all_equal);
  CHECK_FALSE(any_equal_to_c);
  CHECK(rng::substream_seed(1, 2, 3) == rng::substream_seed(1, 2, 3));
  CHECK(rng::substream_seed(1, 2, 3) != rng::substream_seed(1, 2, 4));
}

TEST_CASE("normal quantile and cdf are mutual inverses") {
  CHECK(rng::normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rng::normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rng::normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
  for (double p : {0.001, 0.1, 0.3, 0.7, 0.9, 0.999}) {
    CHECK(rng::normal_cdf(rng::normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
}

TEST_CASE("beta origin moments follow the product formula") {
  const double a = 0.6799, b = 1.7787;
  const auto m = beta_origin_moments(a, b, 1.0, 6);
  CHECK(m[0] == doctest::Approx(a / (a + b)).epsilon(1e-14));
  CHECK(m[0] == doctest::Approx(0.2765395).epsilon(1e-6));
  CHECK(m[0] == doctest::Approx(0.276536).epsilon(1e-4));
  CHECK(m[1] == doctest::Approx(m[0] * (a + 1) / (a + b + 1)).epsilon(1e-14));

  // scaling to [0, r_m] multiplies moment k by r_m^k
  const auto ms = beta_origin_moments(a, b, 0.25, 6);
  for (int k = 0; k < 6; ++k) {
    CHECK(ms[k] == doctest::Approx(m[k] * std::pow(0.25, k + 1)).epsilon(1e-13));
  }
}

TEST_CASE("moment-to-cumulant recursion reproduces gaussian and exponential identities") {
  // Gaussian origin moments: m_k = mu m_{k-1} + (k-1) sigma^2 m_{k-2}
  const double mu = 2.0, sigma = 3.0;
  Eigen::VectorXd m(8);
  double prev2 = 1.0, prev1 = mu;
  m[0] = mu;
  for (int k = 2; k <= 8; ++k) {
    const double mk = mu * prev1 + (k - 1) * sigma * sigma * prev2;
    m[k - 1] = mk;
    prev2 = prev1;
    prev1 = mk;
  }
  const auto g = moments_to_cumulants(m);
  const auto want = gaussian_cumulants(mu, sigma, 8);
  CHECK(g[0] == doctest::Approx(mu).epsilon(1e-12));
  CHECK(g[1] == doctest::Approx(sigma * sigma).epsilon(1e-12));
  for (int k = 2; k < 8; ++k) {
    CHECK(std::abs(g[k] - want[k]) < 1e-10 * std::pow(sigma, k + 1));
  }

  // Exponential(1): origin moments k!, cumulants (k-1)!
  Eigen::VectorXd ex(8);
  double fact = 1.0;
  for (int k = 1; k <= 8; ++k) {
    fact *= k;
    ex[k - 1] = fact;
  }
  const auto gex = moments_to_cumulants(ex);
  double want_fact = 1.0;
  for (int k = 1; k <= 8; ++k) {
    if (k > 1) want_fact *= (k - 1);
    CHECK(gex[k - 1] == doctest::Approx(want_fact).epsilon(1e-10));
  }
}

TEST_CASE("beta cumulants match the moment path analytically") {
  const double a = 0.6799, b = 1.7787;
  const auto g = moments_to_cumulants(beta_origin_moments(a, b, 1.0, 8));
  CHECK(g[0] == doctest::Approx(a / (a + b)).epsilon(1e-13));
  const double var = a * b / ((a + b) * (a + b) * (a + b + 1));
  CHECK(g[1] == doctest::Approx(var).epsilon(1e-12));
  const double skew = 2 * (b - a) * std::sqrt(a + b + 1) / ((a + b + 2) * std::sqrt(a * b));
  CHECK(g[2] / std::pow(g[1], 1.5) == doctest::Approx(skew).epsilon(1e-10));
}

TEST_CASE("sample cumulants are exactly affine-equivariant") {
  rng::Stream st(11);
  std::vector<double> x(20000);
  for (auto& v : x) v = st.normal01() * 0.7 + 0.2 * st.uniform01();
  std::vector<double> y(x.size());
  const double a = -2.5, b = 0.4;
  for (size_t i = 0; i < x.size(); ++i) y[i] = a * x[i] + b;

  const auto cx = sample_cumulants(x, 8);
  const auto cy = sample_cumulants(y, 8);
  const auto want = scale_cumulants(cx, a, b);
  for (int k = 0; k < 8; ++k) {
    CHECK(std::abs(cy[k] - want[k]) <= 1e-10 * std::max(1.0, std::abs(want[k])));
  }
}

TEST_CASE("scale_cumulants applies degree-k homogeneity") {
  Eigen::VectorXd c(4);
  c << 1.0, 4.0, 8.0, 16.0;
  const auto s = scale_cumulants(c, 0.5, 3.0);
  CHECK(s[0] == doctest::Approx(3.5));
  CHECK(s[1] == doctest::Approx(1.0));
  CHECK(s[2] == doctest::Approx(1.0));
  CHECK(s[3] == doctest::Approx(1.0));
}

TEST_CASE("beta parameter fit inverts the mean/variance formulas") {
  const auto p = beta_params_from_stats(0.5, std::sqrt(0.05));
  CHECK(p.alpha == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(p.beta == doctest::Approx(2.0).epsilon(1e-12));

  const auto q = beta_params_from_stats(0.3, 0.1);
  CHECK(q.alpha / (q.alpha + q.beta) == doctest::Approx(0.3).epsilon(1e-12));
  const double var =
      q.alpha * q.beta / ((q.alpha + q.beta) * (q.alpha + q.beta) * (q.alpha + q.beta + 1));
  CHECK(var == doctest::Approx(0.01).epsilon(1e-12));

  CHECK_THROWS_AS(beta_params_from_stats(0.5, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(beta_params_from_stats(1.2, 0.1), std::invalid_argument);
}

TEST_CASE("pv plant maximum power sums area-efficiency products") {
  CHECK(pv_max_power(2.16, {0.13}, {1.0}) == doctest::Approx(0.2808).epsilon(1e-12));
  CHECK(pv_max_power(1.0, {2.0, 3.0}, {0.1, 0.2}) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(pv_max_power(1.0, {}, {}) == doctest::Approx(0.0));
  CHECK_THROWS_AS(pv_max_power(1.0, {1.0}, {}), std::invalid_argument);
}

TEST_CASE("cholesky decorrelation satisfies B C B^T = I") {
  Eigen::MatrixXd c(2, 2);
  c << 1.0, 0.5, 0.5, 1.0;
  const auto d = decorrelation_transform(c);
  CHECK(d.g(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d.g(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(d.g(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(d.g(1, 1) == doctest::Approx(0.8660254037844386).epsilon(1e-12));
  CHECK(((d.g * d.g.transpose()) - c).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(((d.b * c * d.b.transpose()) - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <
        1e-12);

  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3 and -1
  CHECK_THROWS_AS(decorrelation_transform(bad), std::exception);
}

TEST_CASE("sample covariance and correlation over variable-major rows") {
  Eigen::MatrixXd v(2, 3);
  v << 1, 2, 3, 2, 4, 6;
  const auto cov = covariance_from_samples(v);
  CHECK(cov(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(cov(1, 1) == doctest::Approx(8.0 / 3.0).epsilon(1e-12));
  CHECK(cov(0, 1) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  const auto cor = correlation_from_samples(v);
  CHECK(cor(0, 1) == doctest::Approx(1.0).epsilon(1e-12));

  Eigen::MatrixXd flat(1, 3);
  flat << 5, 5, 5;
  CHECK_THROWS_AS(correlation_from_samples(flat), std::exception);
}

TEST_CASE("prepared marginals expose quantile, cdf, and cumulants") {
  SUBCASE("gaussian") {
    const PreparedMarginal m(GaussianModel{1.5, 0.2});
    CHECK(m.gaussian());
    CHECK(m.quantile(0.5) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(m.cdf(1.5) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(m.mean() == doctest::Approx(1.5));
    CHECK(m.sd() == doctest::Approx(0.2).epsilon(1e-12));
    const auto c = m.cumulants(4);
    CHECK(c[2] == doctest::Approx(0.0).epsilon(1e-14));
  }
  SUBCASE("beta scaled to its maximum power") {
    const PreparedMarginal m(BetaPvModel{0.6799, 1.7787, 0.25});
    CHECK_FALSE(m.gaussian());
    CHECK(m.mean() == doctest::Approx(0.25 * 0.6799 / 2.4586).epsilon(1e-10));
    const double x = m.quantile(0.3);
    CHECK(m.cdf(x) == doctest::Approx(0.3).epsilon(1e-8));
    CHECK(x > 0.0);
    CHECK(x < 0.25);
  }
  SUBCASE("empirical samples use hazen plotting positions") {
    EmpiricalModel e;
    e.samples = {4.0, 1.0, 3.0, 2.0};
    const PreparedMarginal m(e);
    CHECK(m.mean() == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(m.quantile(0.375) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(m.quantile(0.5) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(m.cdf(2.0) == doctest::Approx(0.375).epsilon(1e-12));
  }
  SUBCASE("empirical cdf table integrates to the uniform moments") {
    EmpiricalModel e;
    e.cdf_x = {0.0, 1.0};
    e.cdf_f = {0.0, 1.0};
    const PreparedMarginal m(e);
    CHECK(m.mean() == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(m.sd() == doctest::Approx(std::sqrt(1.0 / 12.0)).epsilon(1e-4));
    CHECK(m.quantile(0.25) == doctest::Approx(0.25).epsilon(1e-9));
  }
}

TEST_CASE("nataf adjustment is exact for gaussian pairs") {
  const PreparedMarginal a(GaussianModel{0.0, 1.0});
  const PreparedMarginal b(GaussianModel{2.0, 0.5});
  for (double rho : {-0.6, -0.2, 0.3, 0.8}) {
    CHECK(nataf_adjusted_rho(a, b, rho) == doctest::Approx(rho).epsilon(1e-6));
  }
}

TEST_CASE("nataf samples reproduce target correlation and marginals") {
  std::vector<PreparedMarginal> m;
  m.emplace_back(BetaPvModel{0.6799, 1.7787, 0.25});
  m.emplace_back(BetaPvModel{2.0, 2.0, 1.0});
  Eigen::MatrixXd rho(2, 2);
  rho << 1.0, 0.5, 0.5, 1.0;

  rng::Stream st(7);
  const int n = 20000;
  const Eigen::MatrixXd w = nataf_samples(m, rho, n, st);
  REQUIRE(w.rows() == 2);
  REQUIRE(w.cols() == n);

  const auto cor = correlation_from_samples(w);
  CHECK(std::abs(cor(0, 1) - 0.5) < 0.03);
  for (int v = 0; v < 2; ++v) {
    const double mean = w.row(v).mean();
    CHECK(std::abs(mean - m[v].mean()) < 4.0 * m[v].sd() / std::sqrt(double(n)));
    CHECK(w.row(v).minCoeff() >= 0.0);
  }

  // the transform itself maps zero normals to the medians
  const auto d = decorrelation_transform(rho);
  const Eigen::VectorXd mid = nataf_transform(m, d.g, Eigen::VectorXd::Zero(2));
  CHECK(mid[0] == doctest::Approx(m[0].quantile(0.5)).epsilon(1e-10));
  CHECK(mid[1] == doctest::Approx(m[1].quantile(0.5)).epsilon(1e-10));
}
