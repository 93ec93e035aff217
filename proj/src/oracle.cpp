#include "agp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <unordered_map>

namespace agp {

namespace {

constexpr std::size_t kEnumerationBudget = 1'000'000;

std::size_t component_index(const ExactPosterior& exact, const GridSpec& grids,
                            const ComponentState& c) {
  const int cell = find_grid_cell(grids, c.rho, c.lambda);
  if (cell < 0) throw std::invalid_argument("joint_state_index: scales off the grid");
  return c.gamma.key() * static_cast<std::size_t>(exact.n_cells) + cell;
}

// Inverse normal tail via bisection on the complementary CDF.
double z_for_two_sided_pvalue(double pval) {
  auto two_sided = [](double z) { return std::erfc(z / std::sqrt(2.0)); };
  double lo = 0.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (two_sided(mid) > pval)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

ExactPosterior exact_posterior(const AgpModel& model, int k, double tau, ScoreCache* cache) {
  model.validate();
  if (k < 1 || k > 2) throw std::invalid_argument("exact_posterior: k must be 1 or 2");
  const int p = model.p();
  if (p > 16) throw std::invalid_argument("exact_posterior: p too large to enumerate");

  ExactPosterior exact;
  exact.p = p;
  exact.k = k;
  exact.n_cells = model.grids.n_cells();
  exact.tau = tau;
  const std::size_t per = exact.states_per_component();
  std::size_t total = 1;
  for (int l = 0; l < k; ++l) {
    total *= per;
    if (total > kEnumerationBudget)
      throw std::invalid_argument("exact_posterior: enumeration budget exceeded");
  }

  SamplerConfig cfg;
  std::vector<ComponentState> comps(k, ComponentState{InclusionVector(p), 0.0, 1.0});
  exact.log_probs.resize(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    double log_prior = 0.0;
    for (int l = k - 1; l >= 0; --l) {
      const std::size_t comp_idx = rem % per;
      rem /= per;
      const int cell = static_cast<int>(comp_idx % exact.n_cells);
      const std::uint64_t gkey = comp_idx / exact.n_cells;
      comps[l].gamma = InclusionVector::from_key(gkey, p);
      comps[l].rho = model.grids.cell_rho(cell);
      comps[l].lambda = model.grids.cell_lambda(cell);
      log_prior += log_inclusion_prior(comps[l].gamma, tau) + model.grids.log_cell_weight(cell);
    }
    exact.log_probs[idx] = log_prior + joint_loglik(model, comps, cfg, cache);
  }

  const double lse = log_sum_exp(exact.log_probs);
  for (double& lp : exact.log_probs) lp -= lse;
  return exact;
}

std::size_t joint_state_index(const ExactPosterior& exact, const GridSpec& grids,
                              const std::vector<ComponentState>& comps) {
  if (static_cast<int>(comps.size()) != exact.k)
    throw std::invalid_argument("joint_state_index: component count mismatch");
  std::size_t idx = 0;
  for (const auto& c : comps) idx = idx * exact.states_per_component() + component_index(exact, grids, c);
  return idx;
}

std::size_t joint_state_index(const ExactPosterior& exact, const GridSpec& grids,
                              const ChainRecord& rec) {
  std::vector<ComponentState> comps;
  for (int l = 0; l < rec.n_components(); ++l) {
    ComponentState c;
    c.gamma = InclusionVector(exact.p);
    for (int j : rec.gamma_indices[l]) c.gamma.set(j, true);
    c.rho = rec.rho[l];
    c.lambda = rec.lambda[l];
    comps.push_back(std::move(c));
  }
  return joint_state_index(exact, grids, comps);
}

std::vector<double> gamma_marginal_log_probs(const ExactPosterior& exact) {
  if (exact.k != 1) throw std::invalid_argument("gamma_marginal_log_probs: needs k = 1");
  const std::size_t n_gamma = std::size_t{1} << exact.p;
  std::vector<double> out(n_gamma);
  std::vector<double> cell_terms(exact.n_cells);
  for (std::size_t g = 0; g < n_gamma; ++g) {
    for (int c = 0; c < exact.n_cells; ++c)
      cell_terms[c] = exact.log_probs[g * exact.n_cells + c];
    out[g] = log_sum_exp(cell_terms);
  }
  return out;
}

std::vector<double> gamma_pair_conditional_log_probs(const ExactPosterior& exact, int cell1,
                                                     int cell2) {
  if (exact.k != 2) throw std::invalid_argument("gamma_pair_conditional_log_probs: needs k = 2");
  const std::size_t n_gamma = std::size_t{1} << exact.p;
  const std::size_t per = exact.states_per_component();
  std::vector<double> out(n_gamma * n_gamma);
  for (std::size_t g1 = 0; g1 < n_gamma; ++g1)
    for (std::size_t g2 = 0; g2 < n_gamma; ++g2)
      out[g1 * n_gamma + g2] =
          exact.log_probs[(g1 * exact.n_cells + cell1) * per + (g2 * exact.n_cells + cell2)];
  const double lse = log_sum_exp(out);
  for (double& lp : out) lp -= lse;
  return out;
}

FluxReport check_detailed_balance(const FluxTestSpec& spec, long trials_per_state, Rng& rng) {
  if (trials_per_state < 1)
    throw std::invalid_argument("check_detailed_balance: trials_per_state must be >= 1");
  const std::size_t n = spec.log_probs.size();
  std::vector<std::unordered_map<std::size_t, long>> counts_fwd(n), counts_rev(n);

  for (std::size_t s = 0; s < n; ++s) {
    const EnsembleState base = spec.decode(s);
    for (long t = 0; t < trials_per_state; ++t) {
      EnsembleState work = base;
      spec.kernel_fwd(work, rng);
      const std::size_t dest = spec.encode(work);
      if (dest != s) counts_fwd[s][dest]++;
    }
    if (spec.self_paired) continue;
    for (long t = 0; t < trials_per_state; ++t) {
      EnsembleState work = base;
      spec.kernel_rev(work, rng);
      const std::size_t dest = spec.encode(work);
      if (dest != s) counts_rev[s][dest]++;
    }
  }
  const auto& rev_counts = spec.self_paired ? counts_fwd : counts_rev;

  FluxReport report;
  report.name = spec.name;
  report.trials_per_state = trials_per_state;
  report.n_states = n;
  const double N = static_cast<double>(trials_per_state);

  // Detailed balance pairs the forward kernel's flux x -> y against the
  // reverse kernel's flux y -> x. Collect every ordered (x, y) with observed
  // flux on either side; for self-paired kernels each unordered pair is one
  // comparison.
  std::unordered_map<std::uint64_t, char> seen;
  std::vector<std::pair<std::size_t, std::size_t>> pair_list;
  auto add_pair = [&](std::size_t x, std::size_t y) {
    if (spec.self_paired && x > y) std::swap(x, y);
    const std::uint64_t key = static_cast<std::uint64_t>(x) * n + y;
    if (seen.emplace(key, 1).second) pair_list.emplace_back(x, y);
  };
  for (std::size_t x = 0; x < n; ++x)
    for (const auto& [y, cnt] : counts_fwd[x]) add_pair(x, y);
  for (std::size_t y = 0; y < n; ++y)
    for (const auto& [x, cnt] : rev_counts[y]) add_pair(x, y);

  std::vector<FluxPair> pairs;
  pairs.reserve(pair_list.size());
  for (const auto& [x, y] : pair_list) {
    const double pi_x = std::exp(spec.log_probs[x]);
    const double pi_y = std::exp(spec.log_probs[y]);
    const double w_x = spec.weight_fwd ? spec.weight_fwd(x) : 1.0;
    const double w_y = spec.weight_rev ? spec.weight_rev(y) : 1.0;
    auto fit = counts_fwd[x].find(y);
    const long fc = fit == counts_fwd[x].end() ? 0 : fit->second;
    auto rit = rev_counts[y].find(x);
    const long rc = rit == rev_counts[y].end() ? 0 : rit->second;
    const double t_fwd = fc / N;
    const double t_rev = rc / N;
    FluxPair pr;
    pr.from = x;
    pr.to = y;
    pr.flux_fwd = pi_x * w_x * t_fwd;
    pr.flux_rev = pi_y * w_y * t_rev;
    // Null-hypothesis pooled variance: both transition rates estimated from
    // the common flux, which keeps the statistic calibrated at small counts.
    const double flux_bar = 0.5 * (pr.flux_fwd + pr.flux_rev);
    const double t_fwd0 = (pi_x * w_x > 0.0) ? std::min(1.0, flux_bar / (pi_x * w_x)) : 0.0;
    const double t_rev0 = (pi_y * w_y > 0.0) ? std::min(1.0, flux_bar / (pi_y * w_y)) : 0.0;
    const double var = pi_x * w_x * pi_x * w_x * t_fwd0 * (1.0 - t_fwd0) / N +
                       pi_y * w_y * pi_y * w_y * t_rev0 * (1.0 - t_rev0) / N;
    pr.z = (var > 0.0) ? std::abs(pr.flux_fwd - pr.flux_rev) / std::sqrt(var) : 0.0;
    pairs.push_back(pr);
  }

  report.n_pairs = pairs.size();
  const double family_alpha = 0.01;
  report.adjusted_threshold =
      std::max(3.0, z_for_two_sided_pvalue(family_alpha / std::max<std::size_t>(1, pairs.size())));
  for (const auto& pr : pairs) {
    report.max_z = std::max(report.max_z, pr.z);
    if (pr.z > 3.0) report.flagged_3sigma++;
    if (pr.z > report.adjusted_threshold) report.flagged_adjusted++;
  }
  std::sort(pairs.begin(), pairs.end(), [](const FluxPair& a, const FluxPair& b) { return a.z > b.z; });
  report.worst.assign(pairs.begin(), pairs.begin() + std::min<std::size_t>(pairs.size(), 10));
  return report;
}

namespace {

EnsembleState make_oracle_state(const AgpModel& model, int k, double tau,
                                const Vector& importance) {
  EnsembleState st = make_initial_state(model.p(), 1, k, 100);
  st.active.resize(k);
  for (int l = 0; l < k; ++l) st.active[l] = l;
  st.tau = tau;
  st.iteration = 1;
  if (importance.size() == model.p()) st.importance = importance;
  for (auto& c : st.components) {
    c.rho = model.grids.rho_values.front();
    c.lambda = model.grids.lambda_values.front();
  }
  return st;
}

}  // namespace

FluxTestSpec make_dmtm_flux_spec(const AgpModel& model, const SamplerConfig& cfg, MoveKind kind,
                                 double tau, int M, const Vector& importance, ScoreCache* cache) {
  ExactPosterior exact = exact_posterior(model, 1, tau, cache);
  FluxTestSpec spec;
  spec.name = move_kind_name(kind);
  spec.log_probs = gamma_marginal_log_probs(exact);
  const int p = model.p();
  spec.decode = [&model, tau, importance, p](std::size_t idx) {
    EnsembleState st = make_oracle_state(model, 1, tau, importance);
    st.components[0].gamma = InclusionVector::from_key(idx, p);
    return st;
  };
  spec.encode = [](const EnsembleState& st) {
    return static_cast<std::size_t>(st.components[0].gamma.key());
  };
  spec.kernel_fwd = [&model, cfg, kind, M, cache](EnsembleState& st, Rng& rng) {
    dmtm_step_forced(st, 0, kind, model, cfg, M, rng, cache);
  };
  const MoveKind rev = paired_reverse(kind);
  spec.kernel_rev = [&model, cfg, rev, M, cache](EnsembleState& st, Rng& rng) {
    dmtm_step_forced(st, 0, rev, model, cfg, M, rng, cache);
  };
  auto weight_of = [&model, p](MoveKind m) {
    return [&model, m, p](std::size_t idx) {
      const int d = static_cast<int>(std::popcount(idx));
      const MoveWeights w = move_weights(d, model.moves, p);
      switch (m) {
        case MoveKind::Add:
          return w.add;
        case MoveKind::Remove:
          return w.remove;
        default:
          return w.swap;
      }
    };
  };
  spec.weight_fwd = weight_of(kind);
  spec.weight_rev = weight_of(rev);
  spec.self_paired = kind == MoveKind::Swap;
  return spec;
}

FluxTestSpec make_mixed_dmtm_flux_spec(const AgpModel& model, const SamplerConfig& cfg, double tau,
                                       int M, const Vector& importance, ScoreCache* cache) {
  ExactPosterior exact = exact_posterior(model, 1, tau, cache);
  FluxTestSpec spec;
  spec.name = "dmtm-mixed";
  spec.log_probs = gamma_marginal_log_probs(exact);
  const int p = model.p();
  spec.decode = [&model, tau, importance, p](std::size_t idx) {
    EnsembleState st = make_oracle_state(model, 1, tau, importance);
    st.components[0].gamma = InclusionVector::from_key(idx, p);
    return st;
  };
  spec.encode = [](const EnsembleState& st) {
    return static_cast<std::size_t>(st.components[0].gamma.key());
  };
  spec.kernel_fwd = [&model, cfg, M, cache](EnsembleState& st, Rng& rng) {
    paired_dmtm_step(st, 0, model, cfg, M, rng, cache);
  };
  spec.kernel_rev = spec.kernel_fwd;
  spec.self_paired = true;
  return spec;
}

FluxTestSpec make_cross_donate_flux_spec(const AgpModel& model, const SamplerConfig& cfg,
                                         double tau, int cell1, int cell2, ScoreCache* cache) {
  ExactPosterior exact = exact_posterior(model, 2, tau, cache);
  FluxTestSpec spec;
  spec.name = "cross-donate";
  spec.log_probs = gamma_pair_conditional_log_probs(exact, cell1, cell2);
  const int p = model.p();
  const std::size_t n_gamma = std::size_t{1} << p;
  const GridSpec& g = model.grids;
  spec.decode = [&model, &g, tau, cell1, cell2, p, n_gamma](std::size_t idx) {
    EnsembleState st = make_oracle_state(model, 2, tau, Vector());
    st.components[0].gamma = InclusionVector::from_key(idx / n_gamma, p);
    st.components[0].rho = g.cell_rho(cell1);
    st.components[0].lambda = g.cell_lambda(cell1);
    st.components[1].gamma = InclusionVector::from_key(idx % n_gamma, p);
    st.components[1].rho = g.cell_rho(cell2);
    st.components[1].lambda = g.cell_lambda(cell2);
    return st;
  };
  spec.encode = [n_gamma](const EnsembleState& st) {
    return static_cast<std::size_t>(st.components[0].gamma.key()) * n_gamma +
           st.components[1].gamma.key();
  };
  spec.kernel_fwd = [&model, cfg, cache](EnsembleState& st, Rng& rng) {
    icm_propose_accept(MoveKind::CrossDonate, st, model, cfg, rng, cache);
  };
  spec.kernel_rev = spec.kernel_fwd;
  spec.self_paired = true;
  return spec;
}

FluxTestSpec make_pair_move_flux_spec(const AgpModel& model, const SamplerConfig& cfg,
                                      MoveKind kind, double tau, ScoreCache* cache) {
  if (kind != MoveKind::PairedDonate && kind != MoveKind::PairedSwap)
    throw std::invalid_argument("make_pair_move_flux_spec: needs a paired ICM kind");
  ExactPosterior exact = exact_posterior(model, 2, tau, cache);
  FluxTestSpec spec;
  spec.name = move_kind_name(kind);
  spec.log_probs = exact.log_probs;
  const int p = model.p();
  const int n_cells = model.grids.n_cells();
  const std::size_t per = exact.states_per_component();
  const GridSpec& g = model.grids;
  spec.decode = [&model, &g, tau, p, n_cells, per](std::size_t idx) {
    EnsembleState st = make_oracle_state(model, 2, tau, Vector());
    const std::size_t c0 = idx / per;
    const std::size_t c1 = idx % per;
    st.components[0].gamma = InclusionVector::from_key(c0 / n_cells, p);
    st.components[0].rho = g.cell_rho(static_cast<int>(c0 % n_cells));
    st.components[0].lambda = g.cell_lambda(static_cast<int>(c0 % n_cells));
    st.components[1].gamma = InclusionVector::from_key(c1 / n_cells, p);
    st.components[1].rho = g.cell_rho(static_cast<int>(c1 % n_cells));
    st.components[1].lambda = g.cell_lambda(static_cast<int>(c1 % n_cells));
    return st;
  };
  spec.encode = [&g, n_cells, per](const EnsembleState& st) {
    std::size_t idx = 0;
    for (const auto& c : st.components) {
      const int cell = find_grid_cell(g, c.rho, c.lambda);
      if (cell < 0) throw std::runtime_error("pair flux encode: off-grid scales");
      idx = idx * per + c.gamma.key() * n_cells + cell;
    }
    return idx;
  };
  spec.kernel_fwd = [&model, cfg, kind, cache](EnsembleState& st, Rng& rng) {
    icm_propose_accept(kind, st, model, cfg, rng, cache);
  };
  spec.kernel_rev = spec.kernel_fwd;
  spec.self_paired = true;
  return spec;
}

double check_stationarity(const std::vector<ChainRecord>& chain, const ExactPosterior& exact,
                          const GridSpec& grids) {
  if (chain.empty()) throw std::invalid_argument("check_stationarity: empty chain");
  std::vector<double> freq(exact.n_states(), 0.0);
  for (const ChainRecord& rec : chain) freq[joint_state_index(exact, grids, rec)] += 1.0;
  const double n = static_cast<double>(chain.size());
  double tv = 0.0;
  for (std::size_t s = 0; s < exact.n_states(); ++s)
    tv += std::abs(freq[s] / n - exact.prob(s));
  return 0.5 * tv;
}

void write_flux_report(std::ostream& os, const FluxReport& r) {
  os << "kernel," << r.name << ",states," << r.n_states << ",pairs," << r.n_pairs << ",max_z,"
     << r.max_z << ",flagged_3sigma," << r.flagged_3sigma << ",threshold,"
     << r.adjusted_threshold << ",flagged," << r.flagged_adjusted << "\n";
  os << "from,to,flux_fwd,flux_rev,z\n";
  for (const auto& pr : r.worst)
    os << pr.from << "," << pr.to << "," << pr.flux_fwd << "," << pr.flux_rev << "," << pr.z
       << "\n";
}

}  // namespace agp
