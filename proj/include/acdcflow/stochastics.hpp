#pragma once

#include "acdcflow/rng.hpp"
#include "acdcflow/stoch_spec.hpp"

#include <Eigen/Dense>

#include <vector>

namespace acdcflow::stoch {

inline constexpr int kMaxOrder = 8;

// ---------------------------------------------------------------------------
// Moment / cumulant machinery. Cumulant vectors hold gamma_1..gamma_K at
// indices 0..K-1.
// ---------------------------------------------------------------------------

double binomial(int n, int k);

// gamma_n = alpha_n - sum_{j=1}^{n-1} C(n-1, j-1) gamma_j alpha_{n-j}
Eigen::VectorXd moments_to_cumulants(const Eigen::VectorXd& origin_moments);

// alpha_k of Beta(alpha, beta) scaled to [0, r_m]: r_m^k prod (a+i)/(a+b+i).
Eigen::VectorXd beta_origin_moments(double alpha, double beta, double r_m, int order);

Eigen::VectorXd gaussian_cumulants(double mu, double sigma, int order);

// Origin moments per sample average, evaluated about the sample mean for
// numerical stability (identical estimator).
Eigen::VectorXd sample_cumulants(const double* x, std::size_t n, int order);
Eigen::VectorXd sample_cumulants(const std::vector<double>& x, int order);

// Y = a X + b: gamma_1 -> a gamma_1 + b, gamma_k -> a^k gamma_k.
Eigen::VectorXd scale_cumulants(const Eigen::VectorXd& c, double a, double b);

struct BetaParams {
  double alpha, beta;
};
// Method-of-moments fit on [0,1]. Throws std::invalid_argument when
// sigma^2 >= mu(1-mu) or mu outside (0,1).
BetaParams beta_params_from_stats(double mu, double sigma);

// R_M = r_max * sum A_m eta_m. Empty lists give 0; length mismatch throws.
double pv_max_power(double r_max, const std::vector<double>& areas,
                    const std::vector<double>& efficiencies);

// ---------------------------------------------------------------------------
// Marginal models: repeated-evaluation form of MarginalModel.
// ---------------------------------------------------------------------------
class PreparedMarginal {
 public:
  explicit PreparedMarginal(const MarginalModel& m);

  double quantile(double p) const;  // p in (0,1); clamped at table ends
  double cdf(double x) const;
  double mean() const { return cums_[0]; }
  double sd() const;
  bool gaussian() const { return kind_ == Kind::Gaussian; }
  Eigen::VectorXd cumulants(int order) const;

 private:
  enum class Kind { Beta, Gaussian, Empirical } kind_;
  double a_ = 0.0, b_ = 0.0, rm_ = 0.0;  // beta
  double mu_ = 0.0, sigma_ = 0.0;        // gaussian
  std::vector<double> ex_, ef_;          // empirical table: x ascending, F ascending
  Eigen::VectorXd cums_;                 // gamma_1..gamma_kMaxOrder
};

Eigen::VectorXd marginal_cumulants(const MarginalModel& m, int order);

// ---------------------------------------------------------------------------
// Correlation handling.
// ---------------------------------------------------------------------------
struct Decorrelation {
  Eigen::MatrixXd g;  // lower triangular, g g^T = c
  Eigen::MatrixXd b;  // g^{-1}
};

// Cholesky factorization with a small-pivot floor so roundoff-level
// indefiniteness still factors. A pivot below -1e-10 (relative to the largest
// diagonal) throws naming the offending leading minor.
Decorrelation decorrelation_transform(const Eigen::MatrixXd& c);

// Population (1/N) covariance; rows are variables, columns samples.
Eigen::MatrixXd covariance_from_samples(const Eigen::MatrixXd& v);
// Pearson correlation. Throws on a zero-variance row.
Eigen::MatrixXd correlation_from_samples(const Eigen::MatrixXd& v);

// ---------------------------------------------------------------------------
// Nataf transform: Gaussian copula with an adjusted correlation matrix.
// ---------------------------------------------------------------------------

// Copula correlation that reproduces target rho between the two physical
// marginals: 2-D Gauss-Hermite quadrature of the product moment, root-found
// by bisection. Throws when the target is unattainable.
double nataf_adjusted_rho(const PreparedMarginal& a, const PreparedMarginal& b, double rho);

// Pairwise adjustment of a full matrix; PSD restored by eigenvalue clamping
// with re-normalized diagonal when quadrature pushes it out (sets *repaired).
Eigen::MatrixXd nataf_adjusted_matrix(const std::vector<PreparedMarginal>& m,
                                      const Eigen::MatrixXd& rho, bool* repaired = nullptr);

// One joint sample from pre-drawn standard normals e: w = F^{-1}(Phi(g e)).
Eigen::VectorXd nataf_transform(const std::vector<PreparedMarginal>& m,
                                const Eigen::MatrixXd& g, const Eigen::VectorXd& e);

// n correlated samples (rows = variables): E iid standard normal drawn
// variable-major per sample, Q = G E, W = F^{-1}(Phi(Q)).
Eigen::MatrixXd nataf_samples(const std::vector<PreparedMarginal>& m,
                              const Eigen::MatrixXd& rho, int n, rng::Stream& stream);

}  // namespace acdcflow::stoch
