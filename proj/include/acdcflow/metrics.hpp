#pragma once

#include "acdcflow/gram_charlier.hpp"
#include "acdcflow/mcs.hpp"
#include "acdcflow/plf.hpp"

#include <string>
#include <vector>

namespace acdcflow::metrics {

// Relative error in percent; a zero baseline is reported as undefined rather
// than NaN and excluded from aggregates.
struct RelError {
  double percent = 0.0;
  bool defined = true;
};
RelError relative_error(double cm, double mcs);

// sqrt(sum (a_i - b_i)^2) / N * 100 (divisor N, not sqrt(N)).
double arms(const Eigen::VectorXd& cdf_a, const Eigen::VectorXd& cdf_b);

// RMS(a-b) / (RMS(a) + RMS(b)); 0 when both curves are all-zero.
double tic(const Eigen::VectorXd& pdf_a, const Eigen::VectorXd& pdf_b);

struct BandThresholds {
  double over = 1.05;  // OVP threshold
  double high = 1.10;  // upper LVP threshold
  double low = 0.90;   // lower LVP threshold
};

struct BandProbabilities {
  double ovp = 0.0;     // P(X > over) = 1 - F(over)
  double lvp_hi = 0.0;  // P(X < high) = F(high)
  double lvp_lo = 0.0;  // P(X < low)  = F(low)
  bool defined = true;  // false when a threshold falls off a truncated curve
};
BandProbabilities band_probabilities(const gc::Curve& c, const BandThresholds& t = {});
BandProbabilities band_probabilities_from_samples(const Eigen::VectorXd& sorted,
                                                  const BandThresholds& t = {});

struct CompareRow {
  std::string id, cls;
  double mean_cm = 0.0, mean_mcs = 0.0, sd_cm = 0.0, sd_mcs = 0.0;
  RelError eps_mu, eps_sigma;
  double arms_pct = 0.0;
  double tic_val = 0.0;
  BandProbabilities bands_cm, bands_mcs;
};

struct ClassAggregate {
  std::string cls;
  int count = 0;
  double eps_mu_mean = 0.0, eps_mu_max = 0.0;
  double eps_sigma_mean = 0.0, eps_sigma_max = 0.0;
  double arms_mean = 0.0, arms_max = 0.0;
  double tic_mean = 0.0, tic_max = 0.0;
  int eps_mu_undefined = 0, eps_sigma_undefined = 0;  // excluded from the means
};

struct CompareReport {
  std::vector<CompareRow> rows;
  std::vector<ClassAggregate> classes;  // order: U, Udc, P, Q, Pdc (present ones)
};

// Row-by-row comparison on the PLF curves' grids: the oracle's histogram and
// empirical CDF are evaluated on each variable's series grid.
CompareReport compare(const plf::PlfResult& cm, const mcs::McsResult& oracle);

}  // namespace acdcflow::metrics
