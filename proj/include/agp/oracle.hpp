#pragma once

#include <functional>

#include "agp/sampler.hpp"

namespace agp {

// Exact normalized posterior over the joint (gamma, grid-cell) space of k
// components, enumerated with the same likelihood route the samplers use.
struct ExactPosterior {
  int p = 0;
  int k = 0;
  int n_cells = 0;
  double tau = 0.5;
  std::vector<double> log_probs;  // normalized over all joint states

  std::size_t states_per_component() const {
    return (std::size_t{1} << p) * static_cast<std::size_t>(n_cells);
  }
  std::size_t n_states() const { return log_probs.size(); }
  double prob(std::size_t idx) const { return std::exp(log_probs[idx]); }
};

// Enumerates all (2^p * |G|)^k joint states; throws when that exceeds 1e6.
ExactPosterior exact_posterior(const AgpModel& model, int k, double tau,
                               ScoreCache* cache = nullptr);

// Joint-state index of an ensemble or record; components must sit on the grid.
std::size_t joint_state_index(const ExactPosterior& exact, const GridSpec& grids,
                              const std::vector<ComponentState>& comps);
std::size_t joint_state_index(const ExactPosterior& exact, const GridSpec& grids,
                              const ChainRecord& rec);

// Gamma marginal for k = 1 (the DMTM inclusion kernel's target).
std::vector<double> gamma_marginal_log_probs(const ExactPosterior& exact);

// Conditional over (gamma_1, gamma_2) at pinned grid cells for k = 2 (the
// cross-donate kernel's target; scales ride along fixed).
std::vector<double> gamma_pair_conditional_log_probs(const ExactPosterior& exact, int cell1,
                                                     int cell2);

using KernelFn = std::function<void(EnsembleState&, Rng&)>;

// One transition-flux test: stationary log-probabilities over an indexed
// state space, a decoder to materialize states, paired forward/reverse
// kernels, and their state-dependent selection weights.
struct FluxTestSpec {
  std::string name;
  std::vector<double> log_probs;
  std::function<EnsembleState(std::size_t)> decode;
  std::function<std::size_t(const EnsembleState&)> encode;
  KernelFn kernel_fwd;
  KernelFn kernel_rev;
  std::function<double(std::size_t)> weight_fwd;  // selection probability of the kind
  std::function<double(std::size_t)> weight_rev;
  bool self_paired = false;  // reverse kernel identical; reuse the tallies
};

struct FluxPair {
  std::size_t from = 0;
  std::size_t to = 0;
  double flux_fwd = 0.0;
  double flux_rev = 0.0;
  double z = 0.0;
};

struct FluxReport {
  std::string name;
  long trials_per_state = 0;
  std::size_t n_states = 0;
  std::size_t n_pairs = 0;  // unordered pairs with observed flux
  double max_z = 0.0;
  int flagged_3sigma = 0;        // |z| > 3, before multiplicity control
  double adjusted_threshold = 3.0;  // Bonferroni level for the pass verdict
  int flagged_adjusted = 0;
  std::vector<FluxPair> worst;  // top offenders by |z|
  bool pass() const { return flagged_adjusted == 0; }
};

// Estimates T(s, s') from `trials` independent single steps per source state
// and flags pairs whose forward/reverse fluxes disagree.
FluxReport check_detailed_balance(const FluxTestSpec& spec, long trials_per_state, Rng& rng);

// Builders for the kernels under test. DMTM specs run on k = 1 instances;
// the importance vector lets tests exercise heterogeneous toggle weights.
FluxTestSpec make_dmtm_flux_spec(const AgpModel& model, const SamplerConfig& cfg, MoveKind kind,
                                 double tau, int M, const Vector& importance,
                                 ScoreCache* cache = nullptr);
FluxTestSpec make_mixed_dmtm_flux_spec(const AgpModel& model, const SamplerConfig& cfg, double tau,
                                       int M, const Vector& importance,
                                       ScoreCache* cache = nullptr);
FluxTestSpec make_cross_donate_flux_spec(const AgpModel& model, const SamplerConfig& cfg,
                                         double tau, int cell1, int cell2,
                                         ScoreCache* cache = nullptr);
FluxTestSpec make_pair_move_flux_spec(const AgpModel& model, const SamplerConfig& cfg,
                                      MoveKind kind, double tau, ScoreCache* cache = nullptr);

// Total-variation distance between the chain's empirical joint-state
// frequencies and the exact posterior.
double check_stationarity(const std::vector<ChainRecord>& chain, const ExactPosterior& exact,
                          const GridSpec& grids);

// Machine-readable flux table (state pair, fluxes, z) for the CLI report.
void write_flux_report(std::ostream& os, const FluxReport& report);

}  // namespace agp
