#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "agp/model.hpp"
#include "agp/state.hpp"

namespace agp {

enum class MoveKind { Add, Remove, Swap, CrossDonate, PairedDonate, PairedSwap };

// Add pairs with Remove and vice versa; Swap and the ICM kinds are self-paired.
MoveKind paired_reverse(MoveKind m);
std::string move_kind_name(MoveKind m);

// Deliberate acceptance-ratio defects used by the detailed-balance checker
// to prove the flux test has teeth.
enum class Mutation { None, DropWRatio, DropOmegaRatio, WrongReverse };
std::optional<Mutation> parse_mutation(const std::string& name);

struct SamplerConfig {
  long iterations = 1000;
  long burn_in = 200;       // summary burn-in; the raw chain is persisted whole
  int thin = 4;
  std::uint64_t seed = 1;
  double alpha_incl = 1.5;  // inclusion-bias exponent in f(v; M)
  double icm_prob = 0.20;   // Delta
  double zeta = 2.0 / 3.0;
  int budget = 0;           // B; 0 means 10 * k_max
  double fixed_tau = 0.0;   // > 0 holds tau fixed (oracle runs)
  bool adapt_importance = true;
  bool prns_mode = false;   // degenerate weight function: every toggle fires
  int k_min_override = 0;   // 0 means component_bounds(p)
  int k_max_override = 0;
  int lowrank_threshold = 200;  // dense Cholesky for n below this
  int pivot_rank = 0;           // 0 means default_pivot_rank(n)
  Mutation mutation = Mutation::None;
  bool enable_score_cache = false;  // memoize joint scores on enumerable instances
};

// Memoized log marginal likelihoods keyed by an encoded joint state.
// Usable when p <= 16, k_max <= 2 and the grid has at most 63 cells.
struct ScoreCache {
  std::unordered_map<std::uint64_t, double> table;
};

bool joint_encodable(const AgpModel& model, int k_components);
std::optional<std::uint64_t> encode_joint(const AgpModel& model,
                                          const std::vector<ComponentState>& comps);

// Log t-marginal of y under the aggregate kernel of `comps`, memoized in
// `cache` when the state is encodable. The one likelihood route shared by
// the samplers and the enumeration oracle.
double joint_loglik(const AgpModel& model, const std::vector<ComponentState>& comps,
                    const SamplerConfig& cfg, ScoreCache* cache);

// Eq.-style toggle probability for predictor j under the given move:
// Add needs the predictor excluded and fires with f(v; M) = M v^a / (M v^a + p),
// Remove fires on every included predictor, Swap uses f(v)/|gamma| on the
// excluded side.
double toggle_inclusion_probability(int j, const InclusionVector& gamma, double v_j, int M,
                                    double alpha_incl, MoveKind move);

// Grid-marginalized conditional score of a candidate inclusion vector for
// component l, the rest of the ensemble held fixed.
class ComponentScorer {
 public:
  ComponentScorer(const AgpModel& model, const EnsembleState& state, int l,
                  const SamplerConfig& cfg, ScoreCache* cache = nullptr);

  // Per-grid-cell log likelihoods for a candidate gamma.
  const std::vector<double>& cell_logliks(const InclusionVector& gamma);
  // logsumexp over cells of cell prior + likelihood.
  double grid_log_marginal(const InclusionVector& gamma);
  // grid_log_marginal plus the inclusion prior at the state's tau.
  double log_score(const InclusionVector& gamma);

 private:
  const AgpModel& model_;
  const SamplerConfig& cfg_;
  ScoreCache* cache_;
  std::vector<ComponentState> comps_;  // working copy; slot l swapped per candidate
  int slot_;
  double tau_;
  Matrix sigma_rest_;      // I + sum of the other components' weighted kernels
  double loglik_rho_zero_ = 0.0;
  bool use_joint_path_ = false;
  std::unordered_map<std::string, std::vector<double>> memo_;
};

double component_log_score(const InclusionVector& gamma, const EnsembleState& state,
                           const AgpModel& model, const SamplerConfig& cfg,
                           int l, ScoreCache* cache = nullptr);

struct NeighborSet {
  MoveKind move = MoveKind::Add;
  std::vector<InclusionVector> gammas;
  // toggle bookkeeping per candidate: k for Add/Remove, (r, a) for Swap
  std::vector<int> toggles_k;
  std::vector<int> toggles_r;
  std::vector<int> toggles_a;
  int origin_index = -1;  // reverse sets: where the originating gamma sits
};

NeighborSet build_forward_neighborhood(MoveKind m, const InclusionVector& gamma, const Vector& v,
                                       int M, const SamplerConfig& cfg, Rng& rng);
NeighborSet build_reverse_neighborhood(MoveKind m, const InclusionVector& gamma_new, int k_star,
                                       int r_star, int a_star, const Vector& v, int M,
                                       const SamplerConfig& cfg, Rng& rng);

struct StepOutcome {
  bool attempted = false;  // a candidate set existed and a proposal was made
  bool accepted = false;
  MoveKind move = MoveKind::Add;
};

// One paired-move DMTM update of component l's inclusion vector with the
// move kind drawn from the size-dependent schedule.
StepOutcome paired_dmtm_step(EnsembleState& state, int l, const AgpModel& model,
                             const SamplerConfig& cfg, int M, Rng& rng,
                             ScoreCache* cache = nullptr);

// Same update with the move kind pinned; the per-kind kernel the
// detailed-balance checker exercises.
StepOutcome dmtm_step_forced(EnsembleState& state, int l, MoveKind m, const AgpModel& model,
                             const SamplerConfig& cfg, int M, Rng& rng,
                             ScoreCache* cache = nullptr);

// Exact categorical draw of (rho_l, lambda_l) from the normalized grid
// posterior given gamma_l.
void griddy_gibbs_scales(EnsembleState& state, int l, const AgpModel& model,
                         const SamplerConfig& cfg, Rng& rng, ScoreCache* cache = nullptr);

// One inter-component proposal of the pinned kind (no trailing scale sweep).
StepOutcome icm_propose_accept(MoveKind kind, EnsembleState& state, const AgpModel& model,
                               const SamplerConfig& cfg, Rng& rng, ScoreCache* cache = nullptr);

// Full ICM branch: kind chosen uniformly, proposal, then the scale updates
// the accepted kind calls for (Gibbs sweep after cross-donate; rejected
// proposals fall back to a sweep as well).
StepOutcome icm_step(EnsembleState& state, const AgpModel& model, const SamplerConfig& cfg,
                     Rng& rng, ScoreCache* cache = nullptr);

// Master MCMC loop; returns one record per iteration (raw chain).
std::vector<ChainRecord> run_chain(const AgpModel& model, const SamplerConfig& cfg);

// Post burn-in, stride-thinned view used by the summaries.
std::vector<ChainRecord> retain(const std::vector<ChainRecord>& chain, long burn_in, int thin);

}  // namespace agp
