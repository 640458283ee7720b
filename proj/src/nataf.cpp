#include "acdcflow/stochastics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace acdcflow::stoch {

namespace {

constexpr double kRhoCap = 0.999999;

struct GhRule {
  Eigen::VectorXd t, w;  // nodes/weights for integral of e^{-t^2} f(t)
};

// Golub-Welsch on the symmetric Jacobi matrix of the Hermite recurrence.
GhRule gauss_hermite(int n) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double off = std::sqrt(k / 2.0);
    j(k, k - 1) = off;
    j(k - 1, k) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  GhRule r;
  r.t = es.eigenvalues();
  r.w.resize(n);
  const double mu0 = std::sqrt(M_PI);
  for (int i = 0; i < n; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    r.w[i] = mu0 * v0 * v0;
  }
  return r;
}

constexpr int kGhNodes = 32;

// E[Fa^-1(Phi(Z1)) Fb^-1(Phi(Z2))] under a standard bivariate normal with
// copula correlation r, by tensor Gauss-Hermite quadrature.
double copula_product_moment(const PreparedMarginal& a, const PreparedMarginal& b, double r,
                             const GhRule& gh, const Eigen::VectorXd& xa) {
  const double s = std::sqrt(std::max(0.0, 1.0 - r * r));
  double acc = 0.0;
  for (int i = 0; i < kGhNodes; ++i) {
    const double zi = std::sqrt(2.0) * gh.t[i];
    double inner = 0.0;
    for (int j = 0; j < kGhNodes; ++j) {
      const double zj = r * zi + s * std::sqrt(2.0) * gh.t[j];
      inner += gh.w[j] * b.quantile(rng::normal_cdf(zj));
    }
    acc += gh.w[i] * xa[i] * inner;
  }
  return acc / M_PI;
}

}  // namespace

double nataf_adjusted_rho(const PreparedMarginal& a, const PreparedMarginal& b, double rho) {
  if (rho == 0.0) return 0.0;
  if (a.gaussian() && b.gaussian()) return std::clamp(rho, -1.0, 1.0);
  rho = std::clamp(rho, -kRhoCap, kRhoCap);

  const double sda = a.sd(), sdb = b.sd();
  if (!(sda > 0.0) || !(sdb > 0.0)) {
    throw std::invalid_argument("nataf adjustment undefined for a zero-variance marginal");
  }
  const GhRule gh = gauss_hermite(kGhNodes);
  Eigen::VectorXd xa(kGhNodes);
  for (int i = 0; i < kGhNodes; ++i) {
    xa[i] = a.quantile(rng::normal_cdf(std::sqrt(2.0) * gh.t[i]));
  }

  const double target = rho * sda * sdb + a.mean() * b.mean();
  auto f = [&](double r) { return copula_product_moment(a, b, r, gh, xa) - target; };

  double lo = -kRhoCap, hi = kRhoCap;
  if (f(lo) > 0.0 || f(hi) < 0.0) {
    throw std::invalid_argument("nataf adjustment: target correlation unattainable for these marginals");
  }
  // The product moment is increasing in the copula correlation: bisection.
  for (int it = 0; it < 100 && hi - lo >= 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) <= 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Eigen::MatrixXd nataf_adjusted_matrix(const std::vector<PreparedMarginal>& m,
                                      const Eigen::MatrixXd& rho, bool* repaired) {
  const int n = static_cast<int>(m.size());
  if (rho.rows() != n || rho.cols() != n) {
    throw std::invalid_argument("nataf adjustment: matrix size does not match marginal count");
  }
  if (repaired) *repaired = false;
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double r = nataf_adjusted_rho(m[i], m[j], rho(i, j));
      q(i, j) = r;
      q(j, i) = r;
    }
  }
  // Pairwise adjustment can push the joint matrix out of PSD: project back by
  // clamping eigenvalues and re-normalizing the diagonal.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q);
  if (es.eigenvalues().minCoeff() < 0.0) {
    if (repaired) *repaired = true;
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(1e-12);
    q = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    Eigen::VectorXd d = q.diagonal().cwiseSqrt();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) q(i, j) /= d[i] * d[j];
      q(i, i) = 1.0;
    }
  }
  return q;
}

Eigen::VectorXd nataf_transform(const std::vector<PreparedMarginal>& m,
                                const Eigen::MatrixXd& g, const Eigen::VectorXd& e) {
  const Eigen::VectorXd q = g * e;
  Eigen::VectorXd w(q.size());
  for (int i = 0; i < q.size(); ++i) w[i] = m[i].quantile(rng::normal_cdf(q[i]));
  return w;
}

Eigen::MatrixXd nataf_samples(const std::vector<PreparedMarginal>& m,
                              const Eigen::MatrixXd& rho, int n, rng::Stream& stream) {
  const int nv = static_cast<int>(m.size());
  const Eigen::MatrixXd q = nataf_adjusted_matrix(m, rho);
  const Eigen::MatrixXd g = decorrelation_transform(q).g;
  Eigen::MatrixXd w(nv, n);
  Eigen::VectorXd e(nv);
  for (int s = 0; s < n; ++s) {
    for (int i = 0; i < nv; ++i) e[i] = stream.normal01();
    w.col(s) = nataf_transform(m, g, e);
  }
  return w;
}

}  // namespace acdcflow::stoch
