#include "agp/priors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "agp/state.hpp"

namespace agp {

void GridSpec::validate() const {
  auto check = [](const std::vector<double>& vals, const std::vector<double>& wts,
                  const char* name) {
    if (vals.empty() || vals.size() != wts.size())
      throw std::invalid_argument(std::string("GridSpec: bad ") + name + " grid");
    for (size_t i = 1; i < vals.size(); ++i)
      if (!(vals[i] > vals[i - 1]))
        throw std::invalid_argument(std::string("GridSpec: ") + name + " grid not increasing");
    const double s = std::accumulate(wts.begin(), wts.end(), 0.0);
    if (std::abs(s - 1.0) > 1e-9)
      throw std::invalid_argument(std::string("GridSpec: ") + name + " weights do not sum to 1");
    for (double w : wts)
      if (!(w > 0.0)) throw std::invalid_argument(std::string("GridSpec: ") + name + " weight <= 0");
  };
  check(rho_values, rho_weights, "rho");
  check(lambda_values, lambda_weights, "lambda");
  if (rho_values.front() != 0.0) throw std::invalid_argument("GridSpec: rho grid must contain 0");
  for (double l : lambda_values)
    if (!(l > 0.0)) throw std::invalid_argument("GridSpec: lambda values must be positive");
}

GridSpec make_grids(std::vector<double> rho_values, std::vector<double> lambda_values,
                    double alpha, double beta) {
  if (alpha < 0.0 || beta < 0.0) throw std::invalid_argument("make_grids: alpha, beta must be >= 0");
  GridSpec g;
  g.rho_values = std::move(rho_values);
  g.lambda_values = std::move(lambda_values);
  g.alpha = alpha;
  g.beta = beta;

  g.rho_weights.resize(g.rho_values.size());
  double total = 0.0;
  for (size_t i = 0; i < g.rho_values.size(); ++i)
    total += g.rho_weights[i] = std::pow(1.0 + g.rho_values[i], -alpha);
  for (double& w : g.rho_weights) w /= total;

  g.lambda_weights.resize(g.lambda_values.size());
  total = 0.0;
  for (size_t i = 0; i < g.lambda_values.size(); ++i)
    total += g.lambda_weights[i] = std::exp(-beta * g.lambda_values[i]);
  for (double& w : g.lambda_weights) w /= total;

  g.validate();
  return g;
}

GridSpec default_grids() {
  const std::vector<double> corr_targets = {0.99, 0.94, 0.88, 0.80, 0.70};
  const std::vector<double> r2_targets = {0.0, 0.25, 0.50, 0.70, 0.85, 0.99};
  std::vector<double> lambdas, rhos;
  for (double c : corr_targets) lambdas.push_back(10.0 * std::sqrt(-std::log(c)));
  for (double r2 : r2_targets) rhos.push_back(std::sqrt(r2 / (1.0 - r2)));
  return make_grids(std::move(rhos), std::move(lambdas), 0.0, 0.0);
}

double log_inclusion_prior(const InclusionVector& gamma, double tau) {
  if (!(tau > 0.0) || !(tau < 1.0))
    throw std::invalid_argument("log_inclusion_prior: tau must lie in (0,1)");
  const double d = gamma.size();
  return d * std::log(tau) + (gamma.p() - d) * std::log1p(-tau);
}

double sample_tau(const EnsembleState& state, const InclusionPrior& prior, Rng& rng) {
  prior.validate();
  const int k_a = state.contributing_count();
  double sum_d = 0.0;
  for (int l : state.active) sum_d += state.components[l].gamma.size();
  const double nu_post = (1.0 + k_a) * prior.p;
  const double shape1 = prior.d_star + sum_d;
  const double shape2 = nu_post - shape1;
  return beta_draw(shape1, shape2, rng);
}

MoveWeights move_weights(int d, const MoveSchedule& sched, int p) {
  if (d < 0) throw std::invalid_argument("move_weights: negative component size");
  if (d > p) throw std::invalid_argument("move_weights: component size exceeds p");
  if (d == 0) return {1.0, 0.0, 0.0};

  constexpr double kRemoveFloor = 0.05;
  const double u_add = std::exp(-sched.lambda_A * (d - 1));
  double u_swap = 0.0;
  if (d < p) {
    const double log_pois_d =
        d * std::log(sched.lambda_S) - sched.lambda_S - std::lgamma(d + 1.0);
    const double log_pois_peak =
        sched.d_bar * std::log(sched.lambda_S) - sched.lambda_S - std::lgamma(sched.d_bar + 1.0);
    u_swap = std::min(1.0, std::exp(log_pois_d - log_pois_peak));
  }

  MoveWeights w;
  w.add = u_add * (1.0 - kRemoveFloor);
  w.swap = u_swap * (1.0 - u_add) * (1.0 - kRemoveFloor);
  w.remove = 1.0 - w.add - w.swap;
  return w;
}

std::pair<int, int> component_bounds(int p) {
  if (p < 2) throw std::invalid_argument("component_bounds: p must be >= 2");
  const int k_min = std::max(1, static_cast<int>(std::floor(std::log(static_cast<double>(p)))));
  const int k_max = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p))));
  return {k_min, std::max(k_min, k_max)};
}

}  // namespace agp
