#include "acdcflow/stochastics.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace acdcflow::stoch {

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

Eigen::VectorXd moments_to_cumulants(const Eigen::VectorXd& alpha) {
  const int order = static_cast<int>(alpha.size());
  Eigen::VectorXd g(order);
  for (int n = 1; n <= order; ++n) {
    double acc = alpha[n - 1];
    for (int j = 1; j <= n - 1; ++j) {
      acc -= binomial(n - 1, j - 1) * g[j - 1] * alpha[n - j - 1];
    }
    g[n - 1] = acc;
  }
  return g;
}

Eigen::VectorXd beta_origin_moments(double alpha, double beta, double r_m, int order) {
  if (alpha <= 0.0 || beta <= 0.0) throw std::invalid_argument("beta shape parameters must be positive");
  Eigen::VectorXd m(order);
  double prod = 1.0;
  for (int k = 1; k <= order; ++k) {
    prod *= (alpha + k - 1) / (alpha + beta + k - 1);
    m[k - 1] = prod * std::pow(r_m, k);
  }
  return m;
}

Eigen::VectorXd gaussian_cumulants(double mu, double sigma, int order) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(order);
  g[0] = mu;
  if (order >= 2) g[1] = sigma * sigma;
  return g;
}

Eigen::VectorXd sample_cumulants(const double* x, std::size_t n, int order) {
  if (n < 2) throw std::invalid_argument("sample_cumulants needs at least 2 samples");
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += x[i];
  mean /= static_cast<double>(n);

  Eigen::VectorXd mu = Eigen::VectorXd::Zero(order);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - mean;
    double p = 1.0;
    for (int k = 1; k <= order; ++k) {
      p *= d;
      mu[k - 1] += p;
    }
  }
  mu /= static_cast<double>(n);

  Eigen::VectorXd g = moments_to_cumulants(mu);
  g[0] += mean;
  return g;
}

Eigen::VectorXd sample_cumulants(const std::vector<double>& x, int order) {
  return sample_cumulants(x.data(), x.size(), order);
}

Eigen::VectorXd scale_cumulants(const Eigen::VectorXd& c, double a, double b) {
  Eigen::VectorXd out(c.size());
  double p = 1.0;
  for (int k = 1; k <= c.size(); ++k) {
    p *= a;
    out[k - 1] = p * c[k - 1];
  }
  out[0] += b;
  return out;
}

BetaParams beta_params_from_stats(double mu, double sigma) {
  if (!(mu > 0.0 && mu < 1.0)) throw std::invalid_argument("beta fit needs mean in (0,1)");
  const double var = sigma * sigma;
  if (!(var > 0.0) || var >= mu * (1.0 - mu)) {
    throw std::invalid_argument("beta fit infeasible: sigma^2 must lie in (0, mu(1-mu))");
  }
  const double bracket = mu * (1.0 - mu) / var - 1.0;
  return {mu * bracket, (1.0 - mu) * bracket};
}

double pv_max_power(double r_max, const std::vector<double>& areas,
                    const std::vector<double>& efficiencies) {
  if (areas.size() != efficiencies.size()) {
    throw std::invalid_argument("pv_max_power: areas/efficiencies length mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < areas.size(); ++i) s += areas[i] * efficiencies[i];
  return r_max * s;
}

// ---------------------------------------------------------------------------
// PreparedMarginal
// ---------------------------------------------------------------------------

namespace {

// Interpolated table positions for raw samples: Hazen plotting positions.
void table_from_samples(const std::vector<double>& samples, std::vector<double>& x,
                        std::vector<double>& f) {
  x = samples;
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  f.resize(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = (i + 0.5) / static_cast<double>(n);
}

double interp(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - xs.begin());
  const double x0 = xs[i - 1], x1 = xs[i];
  if (x1 == x0) return ys[i];
  const double t = (x - x0) / (x1 - x0);
  return ys[i - 1] + t * (ys[i] - ys[i - 1]);
}

}  // namespace

PreparedMarginal::PreparedMarginal(const MarginalModel& m) {
  if (const auto* b = std::get_if<BetaPvModel>(&m)) {
    kind_ = Kind::Beta;
    a_ = b->alpha;
    b_ = b->beta;
    rm_ = b->r_m;
    cums_ = moments_to_cumulants(beta_origin_moments(a_, b_, rm_, kMaxOrder));
  } else if (const auto* g = std::get_if<GaussianModel>(&m)) {
    kind_ = Kind::Gaussian;
    mu_ = g->mu;
    sigma_ = g->sigma;
    cums_ = gaussian_cumulants(mu_, sigma_, kMaxOrder);
  } else {
    const auto& e = std::get<EmpiricalModel>(m);
    kind_ = Kind::Empirical;
    if (!e.samples.empty()) {
      if (e.samples.size() < 2) throw std::invalid_argument("empirical model needs >= 2 samples");
      table_from_samples(e.samples, ex_, ef_);
      cums_ = sample_cumulants(e.samples, kMaxOrder);
    } else {
      if (e.cdf_x.size() < 2 || e.cdf_x.size() != e.cdf_f.size()) {
        throw std::invalid_argument("empirical CDF table needs >= 2 matched points");
      }
      ex_ = e.cdf_x;
      ef_ = e.cdf_f;
      // Moments by midpoint quadrature of the quantile function.
      const int kq = 100000;
      std::vector<double> draws(kq);
      for (int i = 0; i < kq; ++i) draws[i] = quantile((i + 0.5) / kq);
      cums_ = sample_cumulants(draws, kMaxOrder);
    }
  }
}

double PreparedMarginal::sd() const { return std::sqrt(std::max(0.0, cums_[1])); }

Eigen::VectorXd PreparedMarginal::cumulants(int order) const { return cums_.head(order); }

double PreparedMarginal::quantile(double p) const {
  switch (kind_) {
    case Kind::Beta:
      return rm_ * boost::math::ibeta_inv(a_, b_, std::clamp(p, 1e-300, 1.0 - 1e-16));
    case Kind::Gaussian:
      return mu_ + sigma_ * rng::normal_quantile(p);
    case Kind::Empirical:
    default:
      return interp(ef_, ex_, p);
  }
}

double PreparedMarginal::cdf(double x) const {
  switch (kind_) {
    case Kind::Beta: {
      const double t = x / rm_;
      if (t <= 0.0) return 0.0;
      if (t >= 1.0) return 1.0;
      return boost::math::ibeta(a_, b_, t);
    }
    case Kind::Gaussian:
      if (sigma_ == 0.0) return x < mu_ ? 0.0 : 1.0;
      return rng::normal_cdf((x - mu_) / sigma_);
    case Kind::Empirical:
    default:
      if (x <= ex_.front()) return x < ex_.front() ? 0.0 : ef_.front();
      if (x >= ex_.back()) return x > ex_.back() ? 1.0 : ef_.back();
      return interp(ex_, ef_, x);
  }
}

Eigen::VectorXd marginal_cumulants(const MarginalModel& m, int order) {
  return PreparedMarginal(m).cumulants(order);
}

// ---------------------------------------------------------------------------
// Correlation handling
// ---------------------------------------------------------------------------

Decorrelation decorrelation_transform(const Eigen::MatrixXd& c) {
  const int n = static_cast<int>(c.rows());
  if (c.cols() != n) throw std::invalid_argument("decorrelation: matrix must be square");
  const double scale = std::max(c.diagonal().maxCoeff(), 1e-300);

  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    double d = c(k, k) - g.row(k).head(k).squaredNorm();
    if (d < -1e-10 * scale) {
      std::ostringstream os;
      os << "matrix is not positive semi-definite: leading minor of order " << (k + 1)
         << " has negative pivot " << d;
      throw std::invalid_argument(os.str());
    }
    // Roundoff-level indefiniteness: floor the pivot so the factor stays
    // invertible; the reconstruction error stays below the 1e-10 contract.
    if (d < 1e-12 * scale) d = 1e-12 * scale;
    g(k, k) = std::sqrt(d);
    for (int i = k + 1; i < n; ++i) {
      g(i, k) = (c(i, k) - g.row(i).head(k).dot(g.row(k).head(k))) / g(k, k);
    }
  }

  Decorrelation out;
  out.g = g;
  out.b = g.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
  return out;
}

Eigen::MatrixXd covariance_from_samples(const Eigen::MatrixXd& v) {
  const int n = static_cast<int>(v.cols());
  if (n < 2) throw std::invalid_argument("covariance needs >= 2 samples");
  const Eigen::VectorXd mean = v.rowwise().mean();
  const Eigen::MatrixXd centered = v.colwise() - mean;
  return centered * centered.transpose() / static_cast<double>(n);
}

Eigen::MatrixXd correlation_from_samples(const Eigen::MatrixXd& v) {
  Eigen::MatrixXd c = covariance_from_samples(v);
  const int n = static_cast<int>(c.rows());
  Eigen::VectorXd sd(n);
  for (int i = 0; i < n; ++i) {
    if (!(c(i, i) > 0.0)) {
      throw std::invalid_argument("correlation undefined: variable " + std::to_string(i) +
                                  " has zero variance");
    }
    sd[i] = std::sqrt(c(i, i));
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) c(i, j) /= sd[i] * sd[j];
    c(i, i) = 1.0;
  }
  return c;
}

}  // namespace acdcflow::stoch
