#include "acdcflow/gram_charlier.hpp"

#include "acdcflow/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace acdcflow::gc {

Eigen::VectorXd hermite_all(int n, double x) {
  Eigen::VectorXd he(n + 1);
  he[0] = 1.0;
  if (n >= 1) he[1] = x;
  for (int k = 1; k < n; ++k) he[k + 1] = x * he[k] - k * he[k - 1];
  return he;
}

double hermite(int n, double x) { return hermite_all(n, x)[n]; }

Eigen::VectorXd normalized_cumulants(const Eigen::VectorXd& cumulants) {
  if (cumulants.size() < 2 || !(cumulants[1] > 0.0)) {
    throw std::invalid_argument("normalized cumulants undefined for zero variance");
  }
  const int order = static_cast<int>(cumulants.size());
  const double sigma = std::sqrt(cumulants[1]);
  Eigen::VectorXd g(std::max(0, order - 2));
  double p = sigma * sigma;
  for (int v = 3; v <= order; ++v) {
    p *= sigma;
    g[v - 3] = cumulants[v - 1] / p;
  }
  return g;
}

Eigen::VectorXd series_coefficients(const Eigen::VectorXd& g) {
  auto gv = [&](int v) { return v - 3 < g.size() ? g[v - 3] : 0.0; };
  Eigen::VectorXd c(6);  // c_3..c_8
  c[0] = gv(3) / 6.0;
  c[1] = gv(4) / 24.0;
  c[2] = gv(5) / 120.0;
  c[3] = (gv(6) + 10.0 * gv(3) * gv(3)) / 720.0;
  c[4] = (gv(7) + 35.0 * gv(3) * gv(4)) / 5040.0;
  c[5] = (gv(8) + 56.0 * gv(3) * gv(5) + 35.0 * gv(4) * gv(4)) / 40320.0;
  return c;
}

double pdf_series_at(double mean, double sigma, const Eigen::VectorXd& coef, double x) {
  const double xb = (x - mean) / sigma;
  const Eigen::VectorXd he = hermite_all(8, xb);
  double series = 1.0;
  for (int k = 3; k <= 8; ++k) series += coef[k - 3] * he[k];
  return rng::normal_pdf(xb) / sigma * series;
}

double cdf_series_at(double mean, double sigma, const Eigen::VectorXd& coef, double x) {
  const double xb = (x - mean) / sigma;
  const Eigen::VectorXd he = hermite_all(8, xb);
  double bracket = 0.0;
  for (int k = 3; k <= 8; ++k) bracket += coef[k - 3] * he[k - 1];
  // Integrating the density term phi He_k term-wise gives -phi He_{k-1}:
  // the correction enters with a minus sign so that F' = f exactly.
  return rng::normal_cdf(xb) - rng::normal_pdf(xb) * bracket;
}

Curve build_curve(const Eigen::VectorXd& cumulants, int order, int grid_points) {
  if (cumulants.size() < 2) throw std::invalid_argument("need cumulants up to order 2");
  if (order < 2) throw std::invalid_argument("series order must be >= 2");
  if (grid_points < 2) throw std::invalid_argument("need at least 2 grid points");
  order = std::min<int>({order, static_cast<int>(cumulants.size()), 8});

  Curve c;
  c.mean = cumulants[0];
  const double var = cumulants[1];
  c.sigma = std::sqrt(std::max(0.0, var));

  if (!(c.sigma > 1e-14 * std::max(1.0, std::abs(c.mean)))) {
    c.degenerate = true;
    c.sigma = 0.0;
    c.x = Eigen::VectorXd::Constant(1, c.mean);
    c.pdf = Eigen::VectorXd::Zero(1);
    c.cdf = Eigen::VectorXd::Ones(1);
    c.g = Eigen::VectorXd::Zero(0);
    return c;
  }

  c.g = normalized_cumulants(cumulants.head(order));
  c.quality_warning = c.g.size() > 0 && c.g.cwiseAbs().maxCoeff() > 2.0;
  const Eigen::VectorXd coef = series_coefficients(c.g);

  c.x.resize(grid_points);
  c.pdf.resize(grid_points);
  c.cdf.resize(grid_points);
  const double lo = c.mean - 6.0 * c.sigma;
  const double step = 12.0 * c.sigma / (grid_points - 1);
  for (int i = 0; i < grid_points; ++i) {
    const double x = lo + i * step;
    c.x[i] = x;
    double f = pdf_series_at(c.mean, c.sigma, coef, x);
    if (f < 0.0) {
      f = 0.0;
      ++c.pdf_clamped;
    }
    c.pdf[i] = f;
    c.cdf[i] = cdf_series_at(c.mean, c.sigma, coef, x);
  }

  double run = 0.0;
  for (int i = 0; i < grid_points; ++i) {
    double v = c.cdf[i];
    if (v < 0.0 || v > 1.0) {
      v = std::clamp(v, 0.0, 1.0);
      ++c.cdf_clamped;
    }
    if (v < run) {
      v = run;
      ++c.cdf_clamped;
    }
    run = v;
    c.cdf[i] = v;
  }

  c.saturated_tails = c.cdf[0] <= 1e-4 && 1.0 - c.cdf[grid_points - 1] <= 1e-4;
  return c;
}

std::optional<double> curve_cdf_at(const Curve& c, double x) {
  if (c.degenerate) return x < c.mean ? 0.0 : 1.0;
  if (x < c.x[0]) {
    if (c.saturated_tails) return 0.0;
    return std::nullopt;
  }
  const int n = static_cast<int>(c.x.size());
  if (x > c.x[n - 1]) {
    if (c.saturated_tails) return 1.0;
    return std::nullopt;
  }
  const auto it = std::upper_bound(c.x.data(), c.x.data() + n, x);
  int i = static_cast<int>(it - c.x.data());
  if (i == 0) return c.cdf[0];
  if (i >= n) return c.cdf[n - 1];
  const double x0 = c.x[i - 1], x1 = c.x[i];
  const double t = x1 == x0 ? 0.0 : (x - x0) / (x1 - x0);
  return c.cdf[i - 1] + t * (c.cdf[i] - c.cdf[i - 1]);
}

}  // namespace acdcflow::gc
