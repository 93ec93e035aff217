#include "agp/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "agp/state.hpp"

namespace agp {

Matrix inclusion_sq_distances(const Matrix& X, const InclusionVector& gamma) {
  if (gamma.p() != X.cols())
    throw std::invalid_argument("inclusion_sq_distances: gamma length != predictor count");
  const int n = static_cast<int>(X.rows());
  Matrix d = Matrix::Zero(n, n);
  for (int j : gamma.included()) {
    const auto col = X.col(j);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < i; ++k) {
        const double diff = col(i) - col(k);
        d(i, k) += diff * diff;
      }
  }
  d = d.selfadjointView<Eigen::Lower>();
  return d;
}

Matrix predictor_sq_differences(const Matrix& X, int j) {
  if (j < 0 || j >= X.cols()) throw std::out_of_range("predictor_sq_differences: bad index");
  const int n = static_cast<int>(X.rows());
  Matrix d(n, n);
  const auto col = X.col(j);
  for (int i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (int k = 0; k < i; ++k) {
      const double diff = col(i) - col(k);
      d(i, k) = d(k, i) = diff * diff;
    }
  }
  return d;
}

Matrix se_covariance_from_distances(const Matrix& sq_dist, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("se_covariance: lambda must be positive");
  return (-lambda * lambda * sq_dist.array()).exp().matrix();
}

Matrix se_covariance(const Matrix& X, const InclusionVector& gamma, double lambda) {
  return se_covariance_from_distances(inclusion_sq_distances(X, gamma), lambda);
}

Matrix aggregate_kernel(const std::vector<ComponentState>& components, const Matrix& X) {
  const int n = static_cast<int>(X.rows());
  Matrix K = Matrix::Zero(n, n);
  for (const ComponentState& c : components) {
    if (c.gamma.p() != X.cols())
      throw std::invalid_argument("aggregate_kernel: component dimension mismatch");
    if (c.rho > 0.0) K += (c.rho * c.rho) * se_covariance(X, c.gamma, c.lambda);
  }
  return K;
}

LowRankFactor pivoted_lowrank(const Matrix& K, int r, double tol) {
  const int n = static_cast<int>(K.rows());
  if (K.cols() != n) throw std::invalid_argument("pivoted_lowrank: K not square");
  if (r < 1 || r > n) throw std::invalid_argument("pivoted_lowrank: rank out of range");

  Vector d = K.diagonal();
  const double slack = 1e-10 * std::max(1.0, d.maxCoeff());
  std::vector<int> pivots;
  pivots.reserve(r);
  Matrix R = Matrix::Zero(r, n);

  int m = 0;
  for (; m < r; ++m) {
    int q = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (std::find(pivots.begin(), pivots.end(), i) != pivots.end()) continue;
      if (d(i) > best) {
        best = d(i);
        q = i;
      }
    }
    if (best < -slack) throw std::runtime_error("pivoted_lowrank: negative residual, input not PSD");
    if (best < tol || best <= 0.0) break;

    const double piv = std::sqrt(best);
    R(m, q) = piv;
    for (int i = 0; i < n; ++i) {
      if (i == q || std::find(pivots.begin(), pivots.end(), i) != pivots.end()) continue;
      double v = K(q, i);
      for (int s = 0; s < m; ++s) v -= R(s, q) * R(s, i);
      R(m, i) = v / piv;
      d(i) -= R(m, i) * R(m, i);
    }
    d(q) = 0.0;
    pivots.push_back(q);
  }

  LowRankFactor out;
  out.rank = std::max(m, 1);
  out.R = R.topRows(out.rank);
  out.D = d.cwiseMax(0.0);
  return out;
}

Vector smw_solve(const LowRankFactor& factor, const Vector& rhs) {
  const int n = static_cast<int>(rhs.size());
  if (factor.D.size() != n || factor.R.cols() != n)
    throw std::invalid_argument("smw_solve: dimension mismatch");
  const Vector a_inv = (factor.D.array() + 1.0).inverse().matrix();
  const Vector u = a_inv.cwiseProduct(rhs);
  const Matrix RAinv = factor.R * a_inv.asDiagonal();
  Matrix small = RAinv * factor.R.transpose();
  small.diagonal().array() += 1.0;
  Eigen::LLT<Matrix> llt(small);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("smw_solve: corrupted factor, small system not SPD");
  const Vector w = llt.solve(factor.R * u);
  return u - a_inv.cwiseProduct(factor.R.transpose() * w);
}

Eigen::LLT<Matrix> cholesky_with_guard(const Matrix& sigma) {
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() == Eigen::Success) return llt;
  Matrix jittered = sigma;
  jittered.diagonal().array() += 1e-10;
  llt.compute(jittered);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("cholesky_with_guard: Sigma not positive definite");
  return llt;
}

namespace {

// log p(y) = a log b - lgamma(a) - (n/2) log(2 pi) - (1/2) log|Sigma|
//            + lgamma(a + n/2) - (a + n/2) log(b + y' Sigma^{-1} y / 2),
// the closed form of integrating N(y | 0, sigma^2 Sigma) against IG(a, b).
double t_log_density(double n, double log_det_sigma, double quad_form, const MarginalScale& s) {
  s.validate();
  if (!std::isfinite(log_det_sigma))
    throw std::runtime_error("log_marginal_likelihood: non-finite log-determinant");
  return s.a * std::log(s.b) - std::lgamma(s.a) - 0.5 * n * std::log(2.0 * M_PI) -
         0.5 * log_det_sigma + std::lgamma(s.a + 0.5 * n) -
         (s.a + 0.5 * n) * std::log(s.b + 0.5 * quad_form);
}

}  // namespace

double log_marginal_likelihood_chol(const Vector& y, const Eigen::LLT<Matrix>& sigma_chol,
                                    const MarginalScale& scale) {
  const int n = static_cast<int>(y.size());
  const double log_det = 2.0 * sigma_chol.matrixLLT().diagonal().array().log().sum();
  const double quad = y.dot(sigma_chol.solve(y));
  return t_log_density(n, log_det, quad, scale);
}

double log_marginal_likelihood(const Vector& y, const Matrix& K, const MarginalScale& scale) {
  Matrix sigma = K;
  sigma.diagonal().array() += 1.0;
  return log_marginal_likelihood_chol(y, cholesky_with_guard(sigma), scale);
}

double log_marginal_likelihood(const Vector& y, const LowRankFactor& factor,
                               const MarginalScale& scale) {
  const int n = static_cast<int>(y.size());
  const Vector a = factor.D.array() + 1.0;
  const Matrix RAinv = factor.R * a.cwiseInverse().asDiagonal();
  Matrix small = RAinv * factor.R.transpose();
  small.diagonal().array() += 1.0;
  Eigen::LLT<Matrix> llt(small);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("log_marginal_likelihood: low-rank small system not SPD");
  const double log_det = a.array().log().sum() +
                         2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double quad = y.dot(smw_solve(factor, y));
  return t_log_density(n, log_det, quad, scale);
}

int default_pivot_rank(int n) {
  const double lg = std::log(static_cast<double>(n));
  return static_cast<int>(std::ceil(std::min(static_cast<double>(n), 2.5 * lg * lg)));
}

}  // namespace agp
