#include "agp/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "agp/inference.hpp"

namespace agp {

MoveKind paired_reverse(MoveKind m) {
  switch (m) {
    case MoveKind::Add:
      return MoveKind::Remove;
    case MoveKind::Remove:
      return MoveKind::Add;
    default:
      return m;
  }
}

std::string move_kind_name(MoveKind m) {
  switch (m) {
    case MoveKind::Add:
      return "add";
    case MoveKind::Remove:
      return "remove";
    case MoveKind::Swap:
      return "swap";
    case MoveKind::CrossDonate:
      return "cross-donate";
    case MoveKind::PairedDonate:
      return "paired-donate";
    case MoveKind::PairedSwap:
      return "paired-swap";
  }
  return "?";
}

std::optional<Mutation> parse_mutation(const std::string& name) {
  if (name.empty() || name == "none") return Mutation::None;
  if (name == "drop-w-ratio") return Mutation::DropWRatio;
  if (name == "drop-omega-ratio") return Mutation::DropOmegaRatio;
  if (name == "wrong-reverse") return Mutation::WrongReverse;
  return std::nullopt;
}

namespace {

Matrix weighted_kernel(const Matrix& X, const ComponentState& c) {
  return (c.rho * c.rho) * se_covariance(X, c.gamma, c.lambda);
}

std::string gamma_bytes(const InclusionVector& g) {
  std::string key((g.p() + 7) / 8, '\0');
  for (int j : g.included()) key[j / 8] |= static_cast<char>(1 << (j % 8));
  return key;
}

double dense_joint_loglik(const AgpModel& model, const std::vector<ComponentState>& comps) {
  Matrix sigma = aggregate_kernel(comps, model.X);
  sigma.diagonal().array() += 1.0;
  return log_marginal_likelihood_chol(model.y, cholesky_with_guard(sigma), model.noise);
}

double lowrank_joint_loglik(const AgpModel& model, const std::vector<ComponentState>& comps,
                            int pivot_rank) {
  const Matrix K = aggregate_kernel(comps, model.X);
  const int r = pivot_rank > 0 ? pivot_rank : default_pivot_rank(model.n());
  return log_marginal_likelihood(model.y, pivoted_lowrank(K, std::min(r, model.n())), model.noise);
}

}  // namespace

int find_grid_cell(const GridSpec& grids, double rho, double lambda) {
  for (int c = 0; c < grids.n_cells(); ++c)
    if (grids.cell_rho(c) == rho && grids.cell_lambda(c) == lambda) return c;
  return -1;
}

AgpModel make_default_model(Matrix X_std, Vector y_std, double d_star) {
  AgpModel m;
  m.X = std::move(X_std);
  m.y = std::move(y_std);
  m.grids = default_grids();
  m.noise = MarginalScale{1.0, 1.0};
  m.inclusion = InclusionPrior{d_star, static_cast<int>(m.X.cols())};
  m.moves = MoveSchedule{d_star, 4.0, 4};
  m.validate();
  return m;
}

bool joint_encodable(const AgpModel& model, int k_components) {
  return model.p() <= 16 && k_components <= 2 && model.grids.n_cells() <= 63;
}

std::optional<std::uint64_t> encode_joint(const AgpModel& model,
                                          const std::vector<ComponentState>& comps) {
  if (!joint_encodable(model, static_cast<int>(comps.size()))) return std::nullopt;
  std::uint64_t key = 0;
  int shift = 0;
  for (const auto& c : comps) {
    const int cell = find_grid_cell(model.grids, c.rho, c.lambda);
    if (cell < 0) return std::nullopt;
    key |= (c.gamma.key() | (static_cast<std::uint64_t>(cell) << 16)) << shift;
    shift += 22;
  }
  return key | (std::uint64_t{1} << 62);
}

double joint_loglik(const AgpModel& model, const std::vector<ComponentState>& comps,
                    const SamplerConfig& cfg, ScoreCache* cache) {
  if (cache != nullptr) {
    if (auto key = encode_joint(model, comps)) {
      auto it = cache->table.find(*key);
      if (it != cache->table.end()) return it->second;
      const double ll = dense_joint_loglik(model, comps);
      cache->table.emplace(*key, ll);
      return ll;
    }
  }
  if (model.n() > cfg.lowrank_threshold) return lowrank_joint_loglik(model, comps, cfg.pivot_rank);
  return dense_joint_loglik(model, comps);
}

double toggle_inclusion_probability(int j, const InclusionVector& gamma, double v_j, int M,
                                    double alpha_incl, MoveKind move) {
  if (v_j < 1.0 || M < 1) throw std::invalid_argument("toggle_inclusion_probability: bad v or M");
  const bool in = gamma.test(j);
  const double mv = M * std::pow(v_j, alpha_incl);
  const double f = mv / (mv + gamma.p());
  switch (move) {
    case MoveKind::Add:
      return in ? 0.0 : f;
    case MoveKind::Remove:
      return in ? 1.0 : 0.0;
    case MoveKind::Swap:
      return in ? 1.0 : f / std::max(1, gamma.size());
    default:
      throw std::invalid_argument("toggle_inclusion_probability: not a single-component move");
  }
}

// ---------------------------------------------------------------------------
// Component scoring

ComponentScorer::ComponentScorer(const AgpModel& model, const EnsembleState& state, int l,
                                 const SamplerConfig& cfg, ScoreCache* cache)
    : model_(model), cfg_(cfg), cache_(cache), comps_(state.components), slot_(l),
      tau_(state.tau) {
  use_joint_path_ = cache_ != nullptr &&
                    joint_encodable(model_, static_cast<int>(comps_.size()));
  if (!use_joint_path_) {
    const int n = model_.n();
    sigma_rest_ = Matrix::Identity(n, n);
    for (size_t s = 0; s < comps_.size(); ++s) {
      if (static_cast<int>(s) == slot_ || comps_[s].rho <= 0.0) continue;
      sigma_rest_ += weighted_kernel(model_.X, comps_[s]);
    }
    loglik_rho_zero_ =
        log_marginal_likelihood_chol(model_.y, cholesky_with_guard(sigma_rest_), model_.noise);
  }
}

const std::vector<double>& ComponentScorer::cell_logliks(const InclusionVector& gamma) {
  const std::string key = gamma_bytes(gamma);
  auto it = memo_.find(key);
  if (it != memo_.end()) return it->second;

  const int n_cells = model_.grids.n_cells();
  std::vector<double> lls(n_cells);
  if (use_joint_path_) {
    for (int c = 0; c < n_cells; ++c) {
      comps_[slot_].gamma = gamma;
      comps_[slot_].rho = model_.grids.cell_rho(c);
      comps_[slot_].lambda = model_.grids.cell_lambda(c);
      lls[c] = joint_loglik(model_, comps_, cfg_, cache_);
    }
  } else {
    const Matrix dist = inclusion_sq_distances(model_.X, gamma);
    double ll_zero = loglik_rho_zero_;
    Matrix cov;
    int cov_lambda_index = -1;
    for (int c = 0; c < n_cells; ++c) {
      const double rho = model_.grids.cell_rho(c);
      if (rho <= 0.0) {
        lls[c] = ll_zero;
        continue;
      }
      if (model_.grids.lambda_index(c) != cov_lambda_index) {
        cov = se_covariance_from_distances(dist, model_.grids.cell_lambda(c));
        cov_lambda_index = model_.grids.lambda_index(c);
      }
      Matrix sigma = sigma_rest_ + (rho * rho) * cov;
      lls[c] = log_marginal_likelihood_chol(model_.y, cholesky_with_guard(sigma), model_.noise);
    }
  }
  return memo_.emplace(key, std::move(lls)).first->second;
}

double ComponentScorer::grid_log_marginal(const InclusionVector& gamma) {
  const std::vector<double>& lls = cell_logliks(gamma);
  std::vector<double> terms(lls.size());
  for (size_t c = 0; c < lls.size(); ++c)
    terms[c] = model_.grids.log_cell_weight(static_cast<int>(c)) + lls[c];
  return log_sum_exp(terms);
}

double ComponentScorer::log_score(const InclusionVector& gamma) {
  const double score = log_inclusion_prior(gamma, tau_) + grid_log_marginal(gamma);
  if (!std::isfinite(score)) throw std::runtime_error("ComponentScorer: non-finite score");
  return score;
}

double component_log_score(const InclusionVector& gamma, const EnsembleState& state,
                           const AgpModel& model, const SamplerConfig& cfg, int l,
                           ScoreCache* cache) {
  ComponentScorer scorer(model, state, l, cfg, cache);
  return scorer.log_score(gamma);
}

// ---------------------------------------------------------------------------
// Paired-move DMTM

namespace {

double toggle_prob(int j, const InclusionVector& gamma, const Vector& v, int M,
                   const SamplerConfig& cfg, MoveKind move) {
  if (cfg.prns_mode) {
    const bool in = gamma.test(j);
    if (move == MoveKind::Add) return in ? 0.0 : 1.0;
    if (move == MoveKind::Remove) return in ? 1.0 : 0.0;
    return 1.0;
  }
  return toggle_inclusion_probability(j, gamma, v(j), M, cfg.alpha_incl, move);
}

double move_weight_of(MoveKind m, int d, const MoveSchedule& sched, int p) {
  const MoveWeights w = move_weights(d, sched, p);
  switch (m) {
    case MoveKind::Add:
      return w.add;
    case MoveKind::Remove:
      return w.remove;
    case MoveKind::Swap:
      return w.swap;
    default:
      throw std::invalid_argument("move_weight_of: not a single-component move");
  }
}

}  // namespace

NeighborSet build_forward_neighborhood(MoveKind m, const InclusionVector& gamma, const Vector& v,
                                       int M, const SamplerConfig& cfg, Rng& rng) {
  NeighborSet set;
  set.move = m;
  if (m == MoveKind::Add) {
    for (int j : gamma.excluded()) {
      if (unif01(rng) < toggle_prob(j, gamma, v, M, cfg, MoveKind::Add)) {
        set.gammas.push_back(toggle(j, gamma));
        set.toggles_k.push_back(j);
      }
    }
  } else if (m == MoveKind::Remove) {
    for (int j : gamma.included()) {
      set.gammas.push_back(toggle(j, gamma));
      set.toggles_k.push_back(j);
    }
  } else if (m == MoveKind::Swap) {
    std::vector<int> adds;
    for (int a : gamma.excluded())
      if (unif01(rng) < toggle_prob(a, gamma, v, M, cfg, MoveKind::Swap)) adds.push_back(a);
    for (int r : gamma.included())
      for (int a : adds) {
        set.gammas.push_back(toggle(a, toggle(r, gamma)));
        set.toggles_r.push_back(r);
        set.toggles_a.push_back(a);
      }
  } else {
    throw std::invalid_argument("build_forward_neighborhood: not a single-component move");
  }
  return set;
}

NeighborSet build_reverse_neighborhood(MoveKind m, const InclusionVector& gamma_new, int k_star,
                                       int r_star, int a_star, const Vector& v, int M,
                                       const SamplerConfig& cfg, Rng& rng) {
  NeighborSet set;
  set.move = paired_reverse(m);
  const bool force_origin = cfg.mutation != Mutation::WrongReverse;
  if (m == MoveKind::Add) {
    // Reverse removals fire deterministically, so gamma is always present.
    for (int j : gamma_new.included()) {
      set.gammas.push_back(toggle(j, gamma_new));
      set.toggles_k.push_back(j);
      if (j == k_star) set.origin_index = static_cast<int>(set.gammas.size()) - 1;
    }
  } else if (m == MoveKind::Remove) {
    for (int j : gamma_new.excluded()) {
      const bool forced = force_origin && j == k_star;
      if (forced || unif01(rng) < toggle_prob(j, gamma_new, v, M, cfg, MoveKind::Add)) {
        set.gammas.push_back(toggle(j, gamma_new));
        set.toggles_k.push_back(j);
        if (j == k_star) set.origin_index = static_cast<int>(set.gammas.size()) - 1;
      }
    }
  } else if (m == MoveKind::Swap) {
    std::vector<int> adds;
    for (int a : gamma_new.excluded()) {
      const bool forced = force_origin && a == r_star;
      if (forced || unif01(rng) < toggle_prob(a, gamma_new, v, M, cfg, MoveKind::Swap))
        adds.push_back(a);
    }
    for (int r : gamma_new.included())
      for (int a : adds) {
        set.gammas.push_back(toggle(a, toggle(r, gamma_new)));
        set.toggles_r.push_back(r);
        set.toggles_a.push_back(a);
        if (r == a_star && a == r_star) set.origin_index = static_cast<int>(set.gammas.size()) - 1;
      }
  } else {
    throw std::invalid_argument("build_reverse_neighborhood: not a single-component move");
  }
  return set;
}

StepOutcome dmtm_step_forced(EnsembleState& state, int l, MoveKind m, const AgpModel& model,
                             const SamplerConfig& cfg, int M, Rng& rng, ScoreCache* cache) {
  StepOutcome out;
  out.move = m;
  ComponentState& comp = state.components[l];
  const InclusionVector gamma = comp.gamma;
  const Vector& v = state.importance;
  const int d = gamma.size();
  const int p = gamma.p();

  NeighborSet fwd = build_forward_neighborhood(m, gamma, v, M, cfg, rng);
  if (fwd.gammas.empty()) return out;  // legal no-op, counted as a rejection
  out.attempted = true;

  ComponentScorer scorer(model, state, l, cfg, cache);
  std::vector<double> fwd_scores(fwd.gammas.size());
  for (size_t i = 0; i < fwd.gammas.size(); ++i) fwd_scores[i] = scorer.log_score(fwd.gammas[i]);
  const int pick = categorical_log_draw(fwd_scores, rng);
  const InclusionVector& gamma_new = fwd.gammas[pick];

  const int k_star = (m == MoveKind::Swap) ? -1 : fwd.toggles_k[pick];
  const int r_star = (m == MoveKind::Swap) ? fwd.toggles_r[pick] : -1;
  const int a_star = (m == MoveKind::Swap) ? fwd.toggles_a[pick] : -1;

  NeighborSet rev = build_reverse_neighborhood(m, gamma_new, k_star, r_star, a_star, v, M, cfg, rng);
  if (rev.gammas.empty()) return out;  // possible only under the wrong-reverse mutation

  std::vector<double> rev_scores(rev.gammas.size());
  for (size_t i = 0; i < rev.gammas.size(); ++i) rev_scores[i] = scorer.log_score(rev.gammas[i]);

  double log_alpha = log_sum_exp(fwd_scores) - log_sum_exp(rev_scores);
  if (cfg.mutation != Mutation::DropWRatio && m != MoveKind::Swap) {
    // Swap preserves |gamma| so its w-ratio is exactly 1.
    const MoveKind m_rev = paired_reverse(m);
    log_alpha += std::log(move_weight_of(m_rev, gamma_new.size(), model.moves, p)) -
                 std::log(move_weight_of(m, d, model.moves, p));
  }
  if (cfg.mutation != Mutation::DropOmegaRatio) {
    if (m == MoveKind::Add) {
      log_alpha -= std::log(toggle_prob(k_star, gamma, v, M, cfg, MoveKind::Add));
    } else if (m == MoveKind::Remove) {
      log_alpha += std::log(toggle_prob(k_star, gamma_new, v, M, cfg, MoveKind::Add));
    } else {
      log_alpha += std::log(toggle_prob(r_star, gamma_new, v, M, cfg, MoveKind::Swap)) -
                   std::log(toggle_prob(a_star, gamma, v, M, cfg, MoveKind::Swap));
    }
  }

  if (std::log(unif01(rng)) < log_alpha) {
    comp.gamma = gamma_new;
    out.accepted = true;
  }
  return out;
}

StepOutcome paired_dmtm_step(EnsembleState& state, int l, const AgpModel& model,
                             const SamplerConfig& cfg, int M, Rng& rng, ScoreCache* cache) {
  const int d = state.components[l].gamma.size();
  const MoveWeights w = move_weights(d, model.moves, model.p());
  const double u = unif01(rng);
  MoveKind m = MoveKind::Swap;
  if (u < w.add)
    m = MoveKind::Add;
  else if (u < w.add + w.remove)
    m = MoveKind::Remove;
  return dmtm_step_forced(state, l, m, model, cfg, M, rng, cache);
}

void griddy_gibbs_scales(EnsembleState& state, int l, const AgpModel& model,
                         const SamplerConfig& cfg, Rng& rng, ScoreCache* cache) {
  ComponentScorer scorer(model, state, l, cfg, cache);
  const std::vector<double>& lls = scorer.cell_logliks(state.components[l].gamma);
  std::vector<double> log_w(lls.size());
  for (size_t c = 0; c < lls.size(); ++c)
    log_w[c] = model.grids.log_cell_weight(static_cast<int>(c)) + lls[c];
  const int cell = categorical_log_draw(log_w, rng);
  state.components[l].rho = model.grids.cell_rho(cell);
  state.components[l].lambda = model.grids.cell_lambda(cell);
}

// ---------------------------------------------------------------------------
// Inter-component moves

namespace {

// Full inclusion-prior term; candidates can touch different component pairs,
// so scores must share every component's prior factor to stay comparable.
double full_gamma_log_prior(const std::vector<ComponentState>& comps, double tau) {
  double s = 0.0;
  for (const auto& c : comps) s += log_inclusion_prior(c.gamma, tau);
  return s;
}

std::vector<int> nonempty_active(const EnsembleState& state) {
  std::vector<int> out;
  for (int l : state.active)
    if (state.components[l].gamma.size() > 0) out.push_back(l);
  return out;
}

int count_nonempty(const std::vector<ComponentState>& comps, const std::vector<int>& active) {
  int k = 0;
  for (int l : active) k += comps[l].gamma.size() > 0 ? 1 : 0;
  return k;
}

struct CdCandidate {
  int donor = -1;
  int recipient = -1;
  int j = -1;
};

// Donations of predictor j from `donor` to every other active component not
// already holding j; scales ride along unchanged.
std::vector<CdCandidate> cross_donate_neighborhood(const EnsembleState& state,
                                                   const std::vector<ComponentState>& comps,
                                                   int donor) {
  std::vector<CdCandidate> cands;
  for (int j : comps[donor].gamma.included())
    for (int m : state.active) {
      if (m == donor || comps[m].gamma.test(j)) continue;
      cands.push_back({donor, m, j});
    }
  return cands;
}

double score_cd_candidate(const AgpModel& model, const SamplerConfig& cfg, ScoreCache* cache,
                          std::vector<ComponentState>& comps, double tau, const CdCandidate& c) {
  comps[c.donor].gamma.flip(c.j);
  comps[c.recipient].gamma.flip(c.j);
  const double s = full_gamma_log_prior(comps, tau) + joint_loglik(model, comps, cfg, cache);
  comps[c.donor].gamma.flip(c.j);
  comps[c.recipient].gamma.flip(c.j);
  return s;
}

StepOutcome cross_donate_step(EnsembleState& state, const AgpModel& model,
                              const SamplerConfig& cfg, Rng& rng, ScoreCache* cache) {
  StepOutcome out;
  out.move = MoveKind::CrossDonate;
  const std::vector<int> donors = nonempty_active(state);
  if (donors.empty() || state.active.size() < 2) return out;
  const int k_ne = static_cast<int>(donors.size());
  const int donor = donors[std::uniform_int_distribution<int>(0, k_ne - 1)(rng)];

  std::vector<ComponentState> work = state.components;
  const std::vector<CdCandidate> fwd = cross_donate_neighborhood(state, work, donor);
  if (fwd.empty()) return out;
  out.attempted = true;

  std::vector<double> fwd_scores(fwd.size());
  for (size_t i = 0; i < fwd.size(); ++i)
    fwd_scores[i] = score_cd_candidate(model, cfg, cache, work, state.tau, fwd[i]);
  const int pick = categorical_log_draw(fwd_scores, rng);
  const CdCandidate chosen = fwd[pick];

  // Proposed configuration; the reverse donor is the recipient.
  work[chosen.donor].gamma.flip(chosen.j);
  work[chosen.recipient].gamma.flip(chosen.j);
  const int k_ne_new = count_nonempty(work, state.active);

  const std::vector<CdCandidate> rev = cross_donate_neighborhood(state, work, chosen.recipient);
  std::vector<double> rev_scores(rev.size());
  for (size_t i = 0; i < rev.size(); ++i)
    rev_scores[i] = score_cd_candidate(model, cfg, cache, work, state.tau, rev[i]);

  const double log_alpha = std::log(static_cast<double>(k_ne)) -
                           std::log(static_cast<double>(k_ne_new)) +
                           log_sum_exp(fwd_scores) - log_sum_exp(rev_scores);
  if (std::log(unif01(rng)) < log_alpha) {
    state.components = std::move(work);
    out.accepted = true;
  }
  return out;
}

struct PairCandidate {
  // Predictor motion between the pair plus fresh grid cells for both.
  int take_from_first = -1;  // predictor leaving comp_a (paired swap only)
  int give_to_first = -1;    // predictor entering comp_a
  int cell_a = 0;
  int cell_b = 0;
};

double score_pair_candidate(const AgpModel& model, const SamplerConfig& cfg, ScoreCache* cache,
                            const std::vector<ComponentState>& comps, double tau) {
  double s = full_gamma_log_prior(comps, tau) + joint_loglik(model, comps, cfg, cache);
  return s;
}

StepOutcome paired_donate_step(EnsembleState& state, const AgpModel& model,
                               const SamplerConfig& cfg, Rng& rng, ScoreCache* cache) {
  StepOutcome out;
  out.move = MoveKind::PairedDonate;
  const std::vector<int> donors = nonempty_active(state);
  if (donors.empty() || state.active.size() < 2) return out;
  const int k_ne = static_cast<int>(donors.size());
  const int donor = donors[std::uniform_int_distribution<int>(0, k_ne - 1)(rng)];
  std::vector<int> others;
  for (int l : state.active)
    if (l != donor) others.push_back(l);
  const int recipient =
      others[std::uniform_int_distribution<int>(0, static_cast<int>(others.size()) - 1)(rng)];

  const GridSpec& g = model.grids;
  const int n_cells = g.n_cells();
  auto enumerate = [&](std::vector<ComponentState>& work, int from, int to,
                       std::vector<std::tuple<int, int, int>>& cands,
                       std::vector<double>& scores) {
    // Donations (j, cell_from, cell_to) scored jointly over G^2.
    for (int j : work[from].gamma.included()) {
      if (work[to].gamma.test(j)) continue;
      work[from].gamma.flip(j);
      work[to].gamma.flip(j);
      const double base_prior = full_gamma_log_prior(work, state.tau);
      for (int cf = 0; cf < n_cells; ++cf)
        for (int ct = 0; ct < n_cells; ++ct) {
          work[from].rho = g.cell_rho(cf);
          work[from].lambda = g.cell_lambda(cf);
          work[to].rho = g.cell_rho(ct);
          work[to].lambda = g.cell_lambda(ct);
          cands.emplace_back(j, cf, ct);
          scores.push_back(base_prior + g.log_cell_weight(cf) + g.log_cell_weight(ct) +
                           joint_loglik(model, work, cfg, cache));
        }
      work[from].gamma.flip(j);
      work[to].gamma.flip(j);
    }
  };

  std::vector<ComponentState> work = state.components;
  const ComponentState donor_backup = work[donor];
  const ComponentState recipient_backup = work[recipient];
  std::vector<std::tuple<int, int, int>> fwd;
  std::vector<double> fwd_scores;
  enumerate(work, donor, recipient, fwd, fwd_scores);
  work[donor] = donor_backup;
  work[recipient] = recipient_backup;
  if (fwd.empty()) return out;
  out.attempted = true;

  const int pick = categorical_log_draw(fwd_scores, rng);
  const auto [j_star, cell_donor, cell_recipient] = fwd[pick];
  work[donor].gamma.flip(j_star);
  work[recipient].gamma.flip(j_star);
  work[donor].rho = g.cell_rho(cell_donor);
  work[donor].lambda = g.cell_lambda(cell_donor);
  work[recipient].rho = g.cell_rho(cell_recipient);
  work[recipient].lambda = g.cell_lambda(cell_recipient);
  const int k_ne_new = count_nonempty(work, state.active);

  std::vector<ComponentState> rev_state = work;
  const ComponentState rev_donor_backup = rev_state[recipient];
  const ComponentState rev_recipient_backup = rev_state[donor];
  std::vector<std::tuple<int, int, int>> rev;
  std::vector<double> rev_scores;
  enumerate(rev_state, recipient, donor, rev, rev_scores);
  rev_state[recipient] = rev_donor_backup;
  rev_state[donor] = rev_recipient_backup;

  const double log_alpha = std::log(static_cast<double>(k_ne)) -
                           std::log(static_cast<double>(k_ne_new)) +
                           log_sum_exp(fwd_scores) - log_sum_exp(rev_scores);
  if (std::log(unif01(rng)) < log_alpha) {
    state.components = std::move(work);
    out.accepted = true;
  }
  return out;
}

StepOutcome paired_swap_step(EnsembleState& state, const AgpModel& model, const SamplerConfig& cfg,
                             Rng& rng, ScoreCache* cache) {
  StepOutcome out;
  out.move = MoveKind::PairedSwap;
  const std::vector<int> pool = nonempty_active(state);
  if (pool.size() < 2) return out;
  const int k_ne = static_cast<int>(pool.size());
  const int i1 = std::uniform_int_distribution<int>(0, k_ne - 1)(rng);
  int i2 = std::uniform_int_distribution<int>(0, k_ne - 2)(rng);
  if (i2 >= i1) ++i2;
  const int comp_a = pool[std::min(i1, i2)];
  const int comp_b = pool[std::max(i1, i2)];

  const GridSpec& g = model.grids;
  const int n_cells = g.n_cells();
  auto enumerate = [&](std::vector<ComponentState>& work,
                       std::vector<std::tuple<int, int, int, int>>& cands,
                       std::vector<double>& scores) {
    // Exchanges (j out of comp_a, k out of comp_b) scored jointly over G^2.
    for (int j : work[comp_a].gamma.included()) {
      if (work[comp_b].gamma.test(j)) continue;
      for (int k : work[comp_b].gamma.included()) {
        if (work[comp_a].gamma.test(k) || k == j) continue;
        work[comp_a].gamma.flip(j);
        work[comp_a].gamma.flip(k);
        work[comp_b].gamma.flip(k);
        work[comp_b].gamma.flip(j);
        const double base_prior = full_gamma_log_prior(work, state.tau);
        for (int ca = 0; ca < n_cells; ++ca)
          for (int cb = 0; cb < n_cells; ++cb) {
            work[comp_a].rho = g.cell_rho(ca);
            work[comp_a].lambda = g.cell_lambda(ca);
            work[comp_b].rho = g.cell_rho(cb);
            work[comp_b].lambda = g.cell_lambda(cb);
            cands.emplace_back(j, k, ca, cb);
            scores.push_back(base_prior + g.log_cell_weight(ca) + g.log_cell_weight(cb) +
                             joint_loglik(model, work, cfg, cache));
          }
        work[comp_a].gamma.flip(j);
        work[comp_a].gamma.flip(k);
        work[comp_b].gamma.flip(k);
        work[comp_b].gamma.flip(j);
      }
    }
  };

  std::vector<ComponentState> work = state.components;
  const ComponentState backup_a = work[comp_a];
  const ComponentState backup_b = work[comp_b];
  std::vector<std::tuple<int, int, int, int>> fwd;
  std::vector<double> fwd_scores;
  enumerate(work, fwd, fwd_scores);
  work[comp_a] = backup_a;
  work[comp_b] = backup_b;
  if (fwd.empty()) return out;
  out.attempted = true;

  const int pick = categorical_log_draw(fwd_scores, rng);
  const auto [j_star, k_star, cell_a, cell_b] = fwd[pick];
  work[comp_a].gamma.flip(j_star);
  work[comp_a].gamma.flip(k_star);
  work[comp_b].gamma.flip(k_star);
  work[comp_b].gamma.flip(j_star);
  work[comp_a].rho = g.cell_rho(cell_a);
  work[comp_a].lambda = g.cell_lambda(cell_a);
  work[comp_b].rho = g.cell_rho(cell_b);
  work[comp_b].lambda = g.cell_lambda(cell_b);

  std::vector<ComponentState> rev_state = work;
  const ComponentState rev_backup_a = rev_state[comp_a];
  const ComponentState rev_backup_b = rev_state[comp_b];
  std::vector<std::tuple<int, int, int, int>> rev;
  std::vector<double> rev_scores;
  enumerate(rev_state, rev, rev_scores);
  rev_state[comp_a] = rev_backup_a;
  rev_state[comp_b] = rev_backup_b;

  const double log_alpha = log_sum_exp(fwd_scores) - log_sum_exp(rev_scores);
  if (std::log(unif01(rng)) < log_alpha) {
    state.components = std::move(work);
    out.accepted = true;
  }
  return out;
}

}  // namespace

StepOutcome icm_propose_accept(MoveKind kind, EnsembleState& state, const AgpModel& model,
                               const SamplerConfig& cfg, Rng& rng, ScoreCache* cache) {
  switch (kind) {
    case MoveKind::CrossDonate:
      return cross_donate_step(state, model, cfg, rng, cache);
    case MoveKind::PairedDonate:
      return paired_donate_step(state, model, cfg, rng, cache);
    case MoveKind::PairedSwap:
      return paired_swap_step(state, model, cfg, rng, cache);
    default:
      throw std::invalid_argument("icm_propose_accept: not an inter-component move");
  }
}

StepOutcome icm_step(EnsembleState& state, const AgpModel& model, const SamplerConfig& cfg,
                     Rng& rng, ScoreCache* cache) {
  static constexpr MoveKind kKinds[3] = {MoveKind::CrossDonate, MoveKind::PairedDonate,
                                         MoveKind::PairedSwap};
  const MoveKind kind = kKinds[std::uniform_int_distribution<int>(0, 2)(rng)];
  const StepOutcome out = icm_propose_accept(kind, state, model, cfg, rng, cache);
  // After an accepted cross-donate the scales were held fixed, so refresh
  // them with a Gibbs sweep; rejected proposals fall back to the same sweep.
  // Accepted paired moves already drew fresh scales jointly.
  if ((out.accepted && kind == MoveKind::CrossDonate) || !out.accepted) {
    for (int l : state.active) griddy_gibbs_scales(state, l, model, cfg, rng, cache);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Master loop

std::vector<ChainRecord> run_chain(const AgpModel& model, const SamplerConfig& cfg) {
  model.validate();
  if (cfg.iterations < 1) throw std::invalid_argument("run_chain: iterations must be >= 1");
  const int p = model.p();
  auto [k_min, k_max] = component_bounds(p);
  if (cfg.k_min_override > 0) k_min = cfg.k_min_override;
  if (cfg.k_max_override > 0) k_max = std::max(cfg.k_max_override, k_min);
  const int B = cfg.budget > 0 ? cfg.budget : 10 * k_max;
  const long b0 = std::max<long>(100, cfg.iterations / 10);

  EnsembleState state = make_initial_state(p, k_min, k_max, b0);
  for (auto& c : state.components) {
    c.rho = model.grids.rho_values.front();  // grid contains 0
    c.lambda = model.grids.lambda_values.front();
  }
  Rng rng(cfg.seed);
  ScoreCache cache_storage;
  ScoreCache* cache =
      (cfg.enable_score_cache && joint_encodable(model, k_max)) ? &cache_storage : nullptr;

  std::vector<ChainRecord> records;
  records.reserve(cfg.iterations);
  for (long t = 1; t <= cfg.iterations; ++t) {
    state.iteration = t;
    const BudgetPlan plan = update_active_set(state, B, rng);
    state.tau = (cfg.fixed_tau > 0.0) ? cfg.fixed_tau : sample_tau(state, model.inclusion, rng);

    try {
      if (unif01(rng) < cfg.icm_prob) {
        icm_step(state, model, cfg, rng, cache);
      } else {
        for (int l : state.active) {
          paired_dmtm_step(state, l, model, cfg, plan.M, rng, cache);
          griddy_gibbs_scales(state, l, model, cfg, rng, cache);
        }
        if (cfg.adapt_importance) update_importance(state, cfg.zeta);
      }
      records.push_back(snapshot(state, sample_sigma2(state, model, rng)));
    } catch (const std::exception& e) {
      throw std::runtime_error("run_chain: failure at iteration " + std::to_string(t) + ": " +
                               e.what());
    }
  }
  return records;
}

std::vector<ChainRecord> retain(const std::vector<ChainRecord>& chain, long burn_in, int thin) {
  if (thin < 1) throw std::invalid_argument("retain: thin must be >= 1");
  std::vector<ChainRecord> out;
  for (size_t i = static_cast<size_t>(std::max<long>(burn_in, 0)); i < chain.size();
       i += static_cast<size_t>(thin))
    out.push_back(chain[i]);
  return out;
}

}  // namespace agp
