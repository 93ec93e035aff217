#include "agp/inference.hpp"

#include <algorithm>
#include <cmath>

#include "agp/sampler.hpp"

namespace agp {

namespace {

Matrix full_sigma(const EnsembleState& state, const AgpModel& model) {
  Matrix sigma = aggregate_kernel(state.components, model.X);
  sigma.diagonal().array() += 1.0;
  return sigma;
}

Vector gaussian_draw(const Vector& mean, const Matrix& cov, Rng& rng) {
  const int n = static_cast<int>(mean.size());
  Matrix c = cov;
  const double jitter = 1e-10 * std::max(1.0, cov.diagonal().maxCoeff());
  c.diagonal().array() += jitter;
  Eigen::LLT<Matrix> llt(c);
  if (llt.info() != Eigen::Success) {
    c.diagonal().array() += 1e4 * jitter;
    llt.compute(c);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("gaussian_draw: covariance not positive definite");
  }
  Vector z(n);
  for (int i = 0; i < n; ++i) z(i) = normal_draw(0.0, 1.0, rng);
  return mean + llt.matrixL() * z;
}

std::vector<ComponentState> record_components(const ChainRecord& rec, int p) {
  std::vector<ComponentState> comps;
  comps.reserve(rec.n_components());
  for (int l = 0; l < rec.n_components(); ++l) {
    ComponentState c;
    c.gamma = InclusionVector(p);
    for (int j : rec.gamma_indices[l]) c.gamma.set(j, true);
    c.rho = rec.rho[l];
    c.lambda = rec.lambda[l];
    comps.push_back(std::move(c));
  }
  return comps;
}

double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("empirical_quantile: no values");
  std::sort(values.begin(), values.end());
  const double pos = q * (values.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - lo;
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

}  // namespace

double sample_sigma2(const EnsembleState& state, const AgpModel& model, Rng& rng) {
  const int n = model.n();
  if (n == 0) return inv_gamma_draw(model.noise.a, model.noise.b, rng);
  const Matrix sigma = full_sigma(state, model);
  const Eigen::LLT<Matrix> llt = cholesky_with_guard(sigma);
  const double quad = model.y.dot(llt.solve(model.y));
  return inv_gamma_draw(model.noise.a + 0.5 * n, model.noise.b + 0.5 * quad, rng);
}

Vector sample_component_f(int l, const EnsembleState& state, double sigma2, const AgpModel& model,
                          Rng& rng) {
  const int n = model.n();
  const ComponentState& comp = state.components[l];
  if (comp.rho <= 0.0) return Vector::Zero(n);

  const double rho2 = comp.rho * comp.rho;
  Matrix B = rho2 * se_covariance(model.X, comp.gamma, comp.lambda);
  B.diagonal().array() += 1e-8 * rho2;
  const Eigen::LLT<Matrix> sigma_llt = cholesky_with_guard(full_sigma(state, model));
  const Matrix sigma_inv_B = sigma_llt.solve(B);
  const Vector mean = B * sigma_llt.solve(model.y);
  const Matrix cov = sigma2 * (B - B * sigma_inv_B);
  return gaussian_draw(mean, cov, rng);
}

Predictions predict(const std::vector<ChainRecord>& retained, const Matrix& X_star,
                    const AgpModel& model, Rng& rng, bool use_lowrank, double lo_q, double hi_q) {
  if (retained.empty()) throw std::invalid_argument("predict: empty chain");
  if (X_star.cols() != model.p()) throw std::invalid_argument("predict: column count mismatch");
  const int n = model.n();
  const int m = static_cast<int>(X_star.rows());

  Matrix stacked(n + m, model.p());
  stacked.topRows(n) = model.X;
  stacked.bottomRows(m) = X_star;

  Matrix draws(m, retained.size());
  for (size_t s = 0; s < retained.size(); ++s) {
    const ChainRecord& rec = retained[s];
    const double sigma2 = rec.sigma2;
    std::vector<ComponentState> comps = record_components(rec, model.p());

    bool any_signal = false;
    for (const auto& c : comps) any_signal |= c.rho > 0.0;
    if (!any_signal) {
      draws.col(s).setZero();
      continue;
    }

    const Matrix joint = aggregate_kernel(comps, stacked);
    const Matrix lam_tr = joint.topLeftCorner(n, n);
    const Matrix lam_cr = joint.bottomLeftCorner(m, n);
    const Matrix lam_star = joint.bottomRightCorner(m, m);

    // s_f | y, sigma^2 ~ N(Lam Sigma^{-1} y, sigma^2 (Lam - Lam Sigma^{-1} Lam))
    Vector sf_mean(n);
    Matrix sigma_inv_lam(n, n);
    if (use_lowrank) {
      const LowRankFactor fac = pivoted_lowrank(lam_tr, std::min(n, default_pivot_rank(n)));
      sf_mean = lam_tr * smw_solve(fac, model.y);
      for (int c = 0; c < n; ++c) sigma_inv_lam.col(c) = smw_solve(fac, lam_tr.col(c));
    } else {
      Matrix sigma = lam_tr;
      sigma.diagonal().array() += 1.0;
      const Eigen::LLT<Matrix> llt = cholesky_with_guard(sigma);
      sf_mean = lam_tr * llt.solve(model.y);
      sigma_inv_lam = llt.solve(lam_tr);
    }
    const Matrix sf_cov = sigma2 * (lam_tr - lam_tr * sigma_inv_lam);
    const Vector s_f = gaussian_draw(sf_mean, sf_cov, rng);

    // f(x*) | s_f, sigma^2; jitter keeps Lam_tr invertible at weak signal.
    Matrix lam_tr_j = lam_tr;
    lam_tr_j.diagonal().array() += 1e-8 * std::max(1e-4, lam_tr.diagonal().maxCoeff());
    const Eigen::LLT<Matrix> tr_llt = cholesky_with_guard(lam_tr_j);
    const Matrix cross_solve = tr_llt.solve(lam_cr.transpose());  // n x m
    const Vector f_mean = cross_solve.transpose() * s_f;
    const Matrix f_cov = sigma2 * (lam_star - lam_cr * cross_solve);
    draws.col(s) = gaussian_draw(f_mean, f_cov, rng);
  }

  Predictions out;
  out.mean = draws.rowwise().mean();
  out.lo.resize(m);
  out.hi.resize(m);
  for (int i = 0; i < m; ++i) {
    std::vector<double> row(retained.size());
    for (size_t s = 0; s < retained.size(); ++s) row[s] = draws(i, s);
    out.lo(i) = empirical_quantile(row, lo_q);
    out.hi(i) = empirical_quantile(std::move(row), hi_q);
  }
  return out;
}

Vector marginal_inclusion(const std::vector<ChainRecord>& retained, int p) {
  if (retained.empty()) throw std::invalid_argument("marginal_inclusion: empty chain");
  Vector incl = Vector::Zero(p);
  for (const ChainRecord& rec : retained) {
    for (int j = 0; j < p; ++j) {
      for (int l : rec.active) {
        if (rec.in_component(l, j)) {
          incl(j) += 1.0;
          break;
        }
      }
    }
  }
  return incl / static_cast<double>(retained.size());
}

InteractionGraph interaction_graph(const std::vector<ChainRecord>& retained, int p, int q,
                                   bool signal_only) {
  if (q > p) throw std::invalid_argument("interaction_graph: q > p");
  const Vector incl = marginal_inclusion(retained, p);
  std::vector<double> vals(incl.data(), incl.data() + p);
  const double thresh = empirical_quantile(vals, 1.0 - static_cast<double>(q) / p);

  InteractionGraph g;
  g.inclusion_threshold = thresh;
  for (int j = 0; j < p; ++j)
    if (incl(j) >= thresh && incl(j) > 0.0) g.nodes.push_back(j);

  for (size_t a = 0; a < g.nodes.size(); ++a) {
    for (size_t b = a + 1; b < g.nodes.size(); ++b) {
      const int j = g.nodes[a];
      const int k = g.nodes[b];
      long hits = 0;
      for (const ChainRecord& rec : retained) {
        for (int l : rec.active) {
          if (signal_only && !(rec.rho[l] > 0.0)) continue;
          if (rec.in_component(l, j) && rec.in_component(l, k)) {
            ++hits;
            break;
          }
        }
      }
      if (hits > 0)
        g.edges.push_back({j, k, static_cast<double>(hits) / retained.size()});
    }
  }
  return g;
}

std::vector<double> variance_explained(const EnsembleState& state) {
  double total = 0.0;
  for (int l : state.active) total += state.components[l].rho * state.components[l].rho;
  std::vector<double> out;
  for (int l : state.active)
    out.push_back(state.components[l].rho * state.components[l].rho / (1.0 + total));
  return out;
}

std::vector<double> variance_explained(const ChainRecord& rec) {
  double total = 0.0;
  for (int l : rec.active) total += rec.rho[l] * rec.rho[l];
  std::vector<double> out;
  for (int l : rec.active) out.push_back(rec.rho[l] * rec.rho[l] / (1.0 + total));
  return out;
}

PosteriorSummary summarize(const std::vector<ChainRecord>& retained, int p) {
  if (retained.empty()) throw std::invalid_argument("summarize: empty chain");
  PosteriorSummary s;
  s.marginal_inclusion = marginal_inclusion(retained, p);
  const int k = retained.front().n_components();
  s.mean_variance_explained.assign(k, 0.0);
  for (const ChainRecord& rec : retained) {
    s.sigma2_trace.push_back(rec.sigma2);
    int nonempty = 0;
    for (int l = 0; l < rec.n_components(); ++l)
      nonempty += rec.gamma_indices[l].empty() ? 0 : 1;
    s.active_count_hist[static_cast<int>(rec.active.size())]++;
    s.nonempty_count_hist[nonempty]++;
    const std::vector<double> ve = variance_explained(rec);
    for (size_t i = 0; i < rec.active.size(); ++i) s.mean_variance_explained[rec.active[i]] += ve[i];
  }
  for (double& v : s.mean_variance_explained) v /= static_cast<double>(retained.size());
  return s;
}

std::vector<double> model_scores(const std::vector<std::vector<InclusionVector>>& configurations,
                                 const AgpModel& model, long T, Rng& rng) {
  if (configurations.empty()) throw std::invalid_argument("model_scores: empty configuration set");
  if (T < 1) throw std::invalid_argument("model_scores: T must be >= 1");
  const double tau = model.inclusion.d_star / model.inclusion.p;
  SamplerConfig cfg;
  cfg.enable_score_cache = true;

  std::vector<double> log_scores;
  for (const auto& config : configurations) {
    if (config.empty()) throw std::invalid_argument("model_scores: empty configuration");
    const int k = static_cast<int>(config.size());
    EnsembleState state = make_initial_state(model.p(), 1, k, 100);
    state.tau = tau;
    for (int l = 0; l < k; ++l) {
      state.components[l].gamma = config[l];
      state.components[l].rho = model.grids.rho_values.back();
      state.components[l].lambda = model.grids.lambda_values.front();
    }
    ScoreCache cache;
    ScoreCache* cache_ptr = joint_encodable(model, k) ? &cache : nullptr;

    double prior = 0.0;
    for (const auto& g : config) prior += log_inclusion_prior(g, tau);

    std::vector<double> logliks;
    logliks.reserve(T);
    for (long t = 1; t <= T; ++t) {
      for (int l = 0; l < k; ++l) griddy_gibbs_scales(state, l, model, cfg, rng, cache_ptr);
      logliks.push_back(joint_loglik(model, state.components, cfg, cache_ptr));
    }
    log_scores.push_back(prior + log_sum_exp(logliks) - std::log(static_cast<double>(T)));
  }

  const double lse = log_sum_exp(log_scores);
  std::vector<double> probs;
  for (double ls : log_scores) probs.push_back(std::exp(ls - lse));
  return probs;
}

}  // namespace agp
