#include "acdcflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace acdcflow::metrics {

RelError relative_error(double cm, double mcs) {
  if (mcs == 0.0) return {0.0, false};
  return {std::abs(cm - mcs) / std::abs(mcs) * 100.0, true};
}

double arms(const Eigen::VectorXd& cdf_a, const Eigen::VectorXd& cdf_b) {
  if (cdf_a.size() != cdf_b.size() || cdf_a.size() < 1) {
    throw std::invalid_argument("arms: curves must share a grid");
  }
  const double n = static_cast<double>(cdf_a.size());
  return std::sqrt((cdf_a - cdf_b).squaredNorm()) / n * 100.0;
}

double tic(const Eigen::VectorXd& pdf_a, const Eigen::VectorXd& pdf_b) {
  if (pdf_a.size() != pdf_b.size() || pdf_a.size() < 1) {
    throw std::invalid_argument("tic: curves must share a grid");
  }
  const double l = static_cast<double>(pdf_a.size());
  const double rms_d = std::sqrt((pdf_a - pdf_b).squaredNorm() / l);
  const double denom = std::sqrt(pdf_a.squaredNorm() / l) + std::sqrt(pdf_b.squaredNorm() / l);
  if (denom == 0.0) return 0.0;
  return rms_d / denom;
}

BandProbabilities band_probabilities(const gc::Curve& c, const BandThresholds& t) {
  BandProbabilities b;
  const auto f_over = gc::curve_cdf_at(c, t.over);
  const auto f_high = gc::curve_cdf_at(c, t.high);
  const auto f_low = gc::curve_cdf_at(c, t.low);
  if (!f_over || !f_high || !f_low) {
    b.defined = false;
    return b;
  }
  b.ovp = 1.0 - *f_over;
  b.lvp_hi = *f_high;
  b.lvp_lo = *f_low;
  return b;
}

BandProbabilities band_probabilities_from_samples(const Eigen::VectorXd& sorted,
                                                  const BandThresholds& t) {
  const double n = static_cast<double>(sorted.size());
  auto cdf = [&](double x) {
    const auto it = std::upper_bound(sorted.data(), sorted.data() + sorted.size(), x);
    return static_cast<double>(it - sorted.data()) / n;
  };
  BandProbabilities b;
  b.ovp = 1.0 - cdf(t.over);
  b.lvp_hi = cdf(t.high);
  b.lvp_lo = cdf(t.low);
  return b;
}

CompareReport compare(const plf::PlfResult& cm, const mcs::McsResult& oracle) {
  if (cm.variables.size() != oracle.monitored.size()) {
    throw std::invalid_argument("compare: monitored-variable lists differ");
  }
  CompareReport rep;
  rep.rows.reserve(cm.variables.size());

  for (std::size_t i = 0; i < cm.variables.size(); ++i) {
    const auto& v = cm.variables[i];
    if (v.monitored.id != oracle.monitored[i].id) {
      throw std::invalid_argument("compare: monitored-variable lists differ");
    }
    CompareRow row;
    row.id = v.monitored.id;
    row.cls = v.monitored.cls;
    row.mean_cm = v.cumulants[0];
    row.sd_cm = std::sqrt(std::max(0.0, v.cumulants[1]));
    row.mean_mcs = oracle.mean[i];
    row.sd_mcs = oracle.sd[i];
    row.eps_mu = relative_error(row.mean_cm, row.mean_mcs);
    row.eps_sigma = relative_error(row.sd_cm, row.sd_mcs);

    Eigen::VectorXd samples = oracle.values.row(i).transpose();
    std::sort(samples.data(), samples.data() + samples.size());

    const bool cm_flat = v.curve.degenerate;
    const bool mcs_flat = samples[samples.size() - 1] - samples[0] <= 0.0;
    if (cm_flat || mcs_flat) {
      // Point masses carry no curve shape; mean disagreements surface in
      // eps_mu rather than through grid metrics.
      const double d = std::abs(row.mean_cm - row.mean_mcs);
      const double scale = std::max({1.0, std::abs(row.mean_cm), std::abs(row.mean_mcs)});
      const bool same = cm_flat && mcs_flat && d <= 1e-9 * scale;
      row.arms_pct = same ? 0.0 : 100.0;
      row.tic_val = same ? 0.0 : 1.0;
    } else {
      row.arms_pct = arms(v.curve.cdf, mcs::ecdf_on_grid(samples, v.curve.x));
      row.tic_val = tic(v.curve.pdf, mcs::histogram_on_grid(samples, v.curve.x));
    }

    row.bands_cm = band_probabilities(v.curve);
    row.bands_mcs = band_probabilities_from_samples(samples);
    rep.rows.push_back(std::move(row));
  }

  const char* order[] = {"U", "Udc", "P", "Q", "Pdc"};
  for (const char* cls : order) {
    ClassAggregate agg;
    agg.cls = cls;
    for (const auto& row : rep.rows) {
      if (row.cls != cls) continue;
      ++agg.count;
      if (row.eps_mu.defined) {
        agg.eps_mu_mean += row.eps_mu.percent;
        agg.eps_mu_max = std::max(agg.eps_mu_max, row.eps_mu.percent);
      } else {
        ++agg.eps_mu_undefined;
      }
      if (row.eps_sigma.defined) {
        agg.eps_sigma_mean += row.eps_sigma.percent;
        agg.eps_sigma_max = std::max(agg.eps_sigma_max, row.eps_sigma.percent);
      } else {
        ++agg.eps_sigma_undefined;
      }
      agg.arms_mean += row.arms_pct;
      agg.arms_max = std::max(agg.arms_max, row.arms_pct);
      agg.tic_mean += row.tic_val;
      agg.tic_max = std::max(agg.tic_max, row.tic_val);
    }
    if (agg.count == 0) continue;
    const int mu_n = agg.count - agg.eps_mu_undefined;
    const int sd_n = agg.count - agg.eps_sigma_undefined;
    agg.eps_mu_mean = mu_n > 0 ? agg.eps_mu_mean / mu_n : 0.0;
    agg.eps_sigma_mean = sd_n > 0 ? agg.eps_sigma_mean / sd_n : 0.0;
    agg.arms_mean /= agg.count;
    agg.tic_mean /= agg.count;
    rep.classes.push_back(std::move(agg));
  }
  return rep;
}

}  // namespace acdcflow::metrics
