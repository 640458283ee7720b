#pragma once

#include <Eigen/Dense>

#include <optional>

namespace acdcflow::gc {

// Probabilists' Hermite values He_0(x)..He_n(x): He_{k+1} = x He_k - k He_{k-1}.
Eigen::VectorXd hermite_all(int n, double x);
double hermite(int n, double x);

// g_v = gamma_v / gamma_2^{v/2} for v = 3..K, indexed [0] = g_3.
// Throws std::invalid_argument when gamma_2 <= 0 (degenerate distribution).
Eigen::VectorXd normalized_cumulants(const Eigen::VectorXd& cumulants);

// Series coefficients c_3..c_8 (index [0] = c_3) from normalized cumulants;
// orders beyond the supplied g are zero.
Eigen::VectorXd series_coefficients(const Eigen::VectorXd& g);

struct Curve {
  Eigen::VectorXd x, pdf, cdf;
  double mean = 0.0;
  double sigma = 0.0;
  Eigen::VectorXd g;             // normalized cumulants g_3.. actually used
  bool degenerate = false;       // zero variance: point mass at mean
  bool saturated_tails = false;  // grid ends carry < 1e-4 of probability each
  bool quality_warning = false;  // some |g_v| > 2: series far outside its regime
  int pdf_clamped = 0;           // grid points where the series went negative
  int cdf_clamped = 0;           // grid points clipped into [0,1] or re-monotonized
};

// Expansion of the distribution with the given cumulants (gamma_1..gamma_K,
// K in [2,8]) around its matching normal, on a uniform grid over
// mean +- 6 sigma. order limits the series terms actually used.
Curve build_curve(const Eigen::VectorXd& cumulants, int order, int grid_points = 513);

// CDF at x by linear interpolation. Outside the grid: 0/1 for degenerate or
// saturated curves, std::nullopt otherwise (extrapolation refused).
std::optional<double> curve_cdf_at(const Curve& c, double x);

// Evaluate the raw (unclamped) series at a single point.
double pdf_series_at(double mean, double sigma, const Eigen::VectorXd& coef, double x);
double cdf_series_at(double mean, double sigma, const Eigen::VectorXd& coef, double x);

}  // namespace acdcflow::gc
