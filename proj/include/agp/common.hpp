#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace agp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

// log(sum(exp(x))) with the usual max shift; -inf for an empty range.
inline double log_sum_exp(std::span<const double> x) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

inline double log_sum_exp(const std::vector<double>& x) {
  return log_sum_exp(std::span<const double>(x));
}

inline double unif01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double gamma_draw(double shape, double scale, Rng& rng) {
  return std::gamma_distribution<double>(shape, scale)(rng);
}

inline double beta_draw(double a, double b, Rng& rng) {
  if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("beta_draw: nonpositive shape");
  const double x = gamma_draw(a, 1.0, rng);
  const double y = gamma_draw(b, 1.0, rng);
  return x / (x + y);
}

// Inverse-gamma with shape a and rate b: 1/Z for Z ~ Gamma(a, scale = 1/b).
inline double inv_gamma_draw(double a, double b, Rng& rng) {
  if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("inv_gamma_draw: nonpositive parameter");
  return 1.0 / gamma_draw(a, 1.0 / b, rng);
}

inline double normal_draw(double mean, double sd, Rng& rng) {
  return std::normal_distribution<double>(mean, sd)(rng);
}

// Categorical draw from unnormalized log weights via a single uniform.
inline int categorical_log_draw(std::span<const double> log_w, Rng& rng) {
  if (log_w.empty()) throw std::invalid_argument("categorical_log_draw: empty support");
  const double lse = log_sum_exp(log_w);
  double u = unif01(rng);
  double cum = 0.0;
  for (size_t i = 0; i + 1 < log_w.size(); ++i) {
    cum += std::exp(log_w[i] - lse);
    if (u < cum) return static_cast<int>(i);
  }
  return static_cast<int>(log_w.size()) - 1;
}

inline int categorical_log_draw(const std::vector<double>& log_w, Rng& rng) {
  return categorical_log_draw(std::span<const double>(log_w), rng);
}

}  // namespace agp
