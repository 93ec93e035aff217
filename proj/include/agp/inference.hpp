#pragma once

#include <map>
#include <vector>

#include "agp/model.hpp"
#include "agp/state.hpp"

namespace agp {

// sigma^2 ~ IG(a + n/2, b + y' Sigma^{-1} y / 2) given the current ensemble.
double sample_sigma2(const EnsembleState& state, const AgpModel& model, Rng& rng);

// Closed-form conditional draw of component l's GP realization at the
// training points: N(B Sigma^{-1} y, sigma^2 (B - B Sigma^{-1} B)) with
// B = rho^2 C_l (diagonal-jittered) and Sigma the full I + K.
Vector sample_component_f(int l, const EnsembleState& state, double sigma2, const AgpModel& model,
                          Rng& rng);

struct Predictions {
  Vector mean;
  Vector lo;
  Vector hi;
};

// Posterior predictive mean-response draws at X_star (standardized with the
// training statistics), one per retained record, reduced to the mean and
// pointwise empirical 2.5% / 97.5% bands. Outputs are on the model scale;
// callers de-standardize.
Predictions predict(const std::vector<ChainRecord>& retained, const Matrix& X_star,
                    const AgpModel& model, Rng& rng, bool use_lowrank = false,
                    double lo_q = 0.025, double hi_q = 0.975);

// Fraction of retained records containing predictor j in any active component.
Vector marginal_inclusion(const std::vector<ChainRecord>& retained, int p);

struct InteractionGraph {
  struct Edge {
    int j = 0;
    int k = 0;
    double weight = 0.0;
  };
  std::vector<int> nodes;
  std::vector<Edge> edges;
  double inclusion_threshold = 0.0;
};

// Co-appearance graph over the predictors whose marginal inclusion reaches
// the (1 - q/p) quantile. Edge weight = fraction of retained records where
// the pair shares an active component; signal_only restricts the count to
// components with rho > 0.
InteractionGraph interaction_graph(const std::vector<ChainRecord>& retained, int p, int q,
                                   bool signal_only = false);

// rho_l^2 / (1 + sum_{s in I_A} rho_s^2) for each active component.
std::vector<double> variance_explained(const EnsembleState& state);
std::vector<double> variance_explained(const ChainRecord& rec);

struct PosteriorSummary {
  Vector marginal_inclusion;
  std::vector<double> sigma2_trace;
  std::map<int, long> active_count_hist;
  std::map<int, long> nonempty_count_hist;
  std::vector<double> mean_variance_explained;  // per component slot
};

PosteriorSummary summarize(const std::vector<ChainRecord>& retained, int p);

// Relative posterior scores for a fixed set of joint inclusion
// configurations, each backed by its own scale-only Gibbs chain of length T;
// normalized to sum to 1 over the set.
std::vector<double> model_scores(const std::vector<std::vector<InclusionVector>>& configurations,
                                 const AgpModel& model, long T, Rng& rng);

}  // namespace agp
