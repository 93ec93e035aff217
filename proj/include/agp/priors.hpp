#pragma once

#include <tuple>
#include <vector>

#include "agp/common.hpp"
#include "agp/inclusion.hpp"

namespace agp {

struct EnsembleState;

// Discrete supports and prior weights for the scale parameters (rho, lambda),
// with weight decay exponents alpha (rho) and beta (lambda).
struct GridSpec {
  std::vector<double> rho_values;
  std::vector<double> rho_weights;
  std::vector<double> lambda_values;
  std::vector<double> lambda_weights;
  double alpha = 0.0;
  double beta = 0.0;

  int n_rho() const { return static_cast<int>(rho_values.size()); }
  int n_lambda() const { return static_cast<int>(lambda_values.size()); }
  int n_cells() const { return n_rho() * n_lambda(); }
  double cell_rho(int c) const { return rho_values[c / n_lambda()]; }
  double cell_lambda(int c) const { return lambda_values[c % n_lambda()]; }
  double log_cell_weight(int c) const {
    return std::log(rho_weights[c / n_lambda()]) + std::log(lambda_weights[c % n_lambda()]);
  }
  int rho_index(int c) const { return c / n_lambda(); }
  int lambda_index(int c) const { return c % n_lambda(); }
  void validate() const;
};

// Beta-binomial inclusion prior: tau ~ Beta(omega nu, (1 - omega) nu) with
// omega = d*/p and nu = p, so the prior expected component size is d*.
struct InclusionPrior {
  double d_star = 1.0;
  int p = 0;
  double omega() const { return d_star / p; }
  double nu() const { return static_cast<double>(p); }
  void validate() const {
    if (p < 1) throw std::invalid_argument("InclusionPrior: p must be >= 1");
    if (!(d_star > 0.0) || !(d_star < p))
      throw std::invalid_argument("InclusionPrior: need 0 < d* < p");
  }
};

// Size-dependent Add/Remove/Swap selection probabilities: h_A exponential
// with rate lambda_A, h_S Poisson with mean lambda_S peaking at d_bar.
struct MoveSchedule {
  double lambda_A = 1.0;
  double lambda_S = 4.0;
  int d_bar = 4;
};

struct MoveWeights {
  double add = 0.0;
  double remove = 0.0;
  double swap = 0.0;
};

// Default grids: lambda_i = 10 sqrt(-ln c_i) for correlation-at-0.10 targets
// {0.70, 0.80, 0.88, 0.94, 0.99}; rho_i = sqrt(R2/(1-R2)) for R2 targets
// {0, 0.25, 0.50, 0.70, 0.85, 0.99}; uniform weights (alpha = beta = 0).
GridSpec default_grids();

// Grids over explicit supports with Eq.-style weights w ~ (1+rho)^-alpha and
// w ~ exp(-beta lambda), renormalized.
GridSpec make_grids(std::vector<double> rho_values, std::vector<double> lambda_values,
                    double alpha = 0.0, double beta = 0.0);

// log pi(gamma | tau) = |gamma| log tau + (p - |gamma|) log(1 - tau).
double log_inclusion_prior(const InclusionVector& gamma, double tau);

// tau ~ Beta(mu' nu', (1 - mu') nu') with nu' = (1 + k_a) p and
// mu' = (d* + sum of active component sizes) / nu'.
double sample_tau(const EnsembleState& state, const InclusionPrior& prior, Rng& rng);

// (w_A, w_R, w_S) for a component of size d. d = 0 forces Add; the floor
// keeps w_R >= 0.05 for d >= 1 so removal stays reachable.
MoveWeights move_weights(int d, const MoveSchedule& sched, int p);

// k_min = max(1, floor(log p)), k_max = ceil(sqrt(p)).
std::pair<int, int> component_bounds(int p);

}  // namespace agp
