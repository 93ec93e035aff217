#pragma once

// Shared test-only oracles: numerical sigma^2 marginalization, random PSD
// matrices, and the exact Beta-binomial pmf. These stay independent of the
// implementation paths they check.

#include <cmath>
#include <random>
#include <vector>

#include "agp/common.hpp"

namespace agp::testing {

// log integral of N(y | 0, s Sigma) IG(s | a, b) ds by Simpson quadrature in
// u = log s. Independent route for the t-marginal likelihood.
inline double quadrature_log_marginal(const Vector& y, const Matrix& sigma, double a, double b) {
  const int n = static_cast<int>(y.size());
  const Eigen::LLT<Matrix> llt(sigma);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double quad = y.dot(llt.solve(y));

  const double lo = -30.0, hi = 30.0;
  const int steps = 40000;  // even
  const double h = (hi - lo) / steps;
  std::vector<double> terms;
  terms.reserve(steps + 1);
  for (int i = 0; i <= steps; ++i) {
    const double u = lo + i * h;
    const double log_norm =
        -0.5 * n * (std::log(2.0 * M_PI) + u) - 0.5 * log_det - 0.5 * quad * std::exp(-u);
    const double log_ig = a * std::log(b) - std::lgamma(a) - (a + 1.0) * u - b * std::exp(-u);
    const double simpson = (i == 0 || i == steps) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    terms.push_back(log_norm + log_ig + u + std::log(simpson));  // + u: Jacobian ds = e^u du
  }
  return log_sum_exp(terms) + std::log(h / 3.0);
}

inline Matrix random_psd(int n, Rng& rng, int rank = 0) {
  if (rank <= 0) rank = n;
  std::normal_distribution<double> norm(0.0, 1.0);
  Matrix g(rank, n);
  for (int i = 0; i < rank; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = norm(rng);
  return g.transpose() * g;
}

inline Matrix random_uniform_matrix(int n, int p, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix x(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) x(i, j) = unif(rng);
  return x;
}

inline Vector random_normal_vector(int n, Rng& rng, double sd = 1.0) {
  std::normal_distribution<double> norm(0.0, sd);
  Vector y(n);
  for (int i = 0; i < n; ++i) y(i) = norm(rng);
  return y;
}

// P(|gamma| = d) under tau ~ Beta(omega nu, (1-omega) nu) marginalized.
inline double beta_binomial_pmf(int d, int p, double d_star) {
  const double a = d_star, b = p - d_star;
  const double log_choose = std::lgamma(p + 1.0) - std::lgamma(d + 1.0) - std::lgamma(p - d + 1.0);
  const double log_beta_num = std::lgamma(a + d) + std::lgamma(b + p - d) - std::lgamma(a + b + p);
  const double log_beta_den = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  return std::exp(log_choose + log_beta_num - log_beta_den);
}

}  // namespace agp::testing
