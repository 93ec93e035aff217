#pragma once

#include <optional>

#include "agp/common.hpp"
#include "agp/inclusion.hpp"

namespace agp {

struct ComponentState;

// Inverse-gamma noise prior (a, b) and the degrees of freedom of the
// sigma^2-marginalized multivariate t, dof = 2a.
struct MarginalScale {
  double a = 1.0;
  double b = 1.0;
  double dof() const { return 2.0 * a; }
  void validate() const {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("MarginalScale: a, b must be positive");
  }
};

// Partial pivoted Cholesky factor: K ~= R' R + diag(D), R is r x n and
// upper-triangular in pivot order, D holds the residual diagonal.
struct LowRankFactor {
  Matrix R;
  Vector D;
  int rank = 0;
  Matrix reconstruct() const {
    Matrix K = R.transpose() * R;
    K.diagonal() += D;
    return K;
  }
};

// Squared distances ||x_i,gamma - x_j,gamma||^2 over included predictors.
Matrix inclusion_sq_distances(const Matrix& X, const InclusionVector& gamma);

// Per-predictor squared-difference matrix (x_ij - x_kj)^2, used for
// incremental distance updates when a single predictor toggles.
Matrix predictor_sq_differences(const Matrix& X, int j);

// C_ij = exp(-lambda^2 ||x_i,gamma - x_j,gamma||^2). Unit diagonal; all
// ones when gamma is empty.
Matrix se_covariance(const Matrix& X, const InclusionVector& gamma, double lambda);
Matrix se_covariance_from_distances(const Matrix& sq_dist, double lambda);

// K = sum_l rho_l^2 C_l over the given components.
Matrix aggregate_kernel(const std::vector<ComponentState>& components, const Matrix& X);

// Pivoted low-rank approximation of a PSD matrix. Stops at rank r or when
// the largest remaining diagonal residual drops below tol.
LowRankFactor pivoted_lowrank(const Matrix& K, int r, double tol = 0.0);

// Solves (I + R'R + diag(D)) z = rhs via Sherman-Morrison-Woodbury.
Vector smw_solve(const LowRankFactor& factor, const Vector& rhs);

// Log density of y under the sigma^2-marginalized model:
// y | xi ~ t_{2a}(0, (b/a) Sigma), Sigma = I + K.
double log_marginal_likelihood(const Vector& y, const Matrix& K, const MarginalScale& scale);
double log_marginal_likelihood(const Vector& y, const LowRankFactor& factor,
                               const MarginalScale& scale);

// Same density evaluated from a ready Cholesky of Sigma = I + K.
double log_marginal_likelihood_chol(const Vector& y, const Eigen::LLT<Matrix>& sigma_chol,
                                    const MarginalScale& scale);

// Cholesky of Sigma with a one-shot 1e-10 jitter retry. Sigma = I + K makes
// failure nearly impossible; the retry guards rounding at extreme rho.
Eigen::LLT<Matrix> cholesky_with_guard(const Matrix& sigma);

// Default pivot rank r = ceil(min(n, 2.5 (log n)^2)).
int default_pivot_rank(int n);

}  // namespace agp
