#include "agp/sampler.hpp"

#include "agp/simbench.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace agp;

namespace {

AgpModel tiny_model(int n, int p, std::uint64_t seed, double signal = 1.0) {
  Rng rng(seed);
  Matrix X = testing::random_uniform_matrix(n, p, rng);
  Vector y(n);
  for (int i = 0; i < n; ++i)
    y(i) = signal * std::sin(3.0 * X(i, 0)) + 0.5 * testing::random_normal_vector(1, rng)(0);
  const Dataset d = make_dataset(std::move(X), std::move(y));
  return make_default_model(d.X_std, d.y_std);
}

EnsembleState oracle_state(const AgpModel& model, int k, double tau) {
  EnsembleState st = make_initial_state(model.p(), 1, k, 100);
  st.tau = tau;
  st.iteration = 1;
  for (auto& c : st.components) {
    c.rho = model.grids.rho_values.front();
    c.lambda = model.grids.lambda_values.front();
  }
  return st;
}

}  // namespace

TEST_SUITE_BEGIN("sampler");

TEST_CASE("toggle_inclusion_probability implements the weight function") {
  InclusionVector g(1000);
  for (int j = 0; j < 3; ++j) g.set(j, true);

  SUBCASE("add fires only on excluded predictors") {
    CHECK(toggle_inclusion_probability(0, g, 1.0, 32, 1.5, MoveKind::Add) == 0.0);
    const double f1 = toggle_inclusion_probability(10, g, 1.0, 32, 1.5, MoveKind::Add);
    CHECK(f1 == doctest::Approx(32.0 / 1032.0));
  }

  SUBCASE("remove fires deterministically on included predictors") {
    CHECK(toggle_inclusion_probability(0, g, 1.0, 32, 1.5, MoveKind::Remove) == 1.0);
    CHECK(toggle_inclusion_probability(10, g, 5.0, 32, 1.5, MoveKind::Remove) == 0.0);
  }

  SUBCASE("reported inclusion probabilities at v = 5 and v = 10") {
    const double f5 = toggle_inclusion_probability(10, g, 5.0, 32, 1.5, MoveKind::Add);
    const double f10 = toggle_inclusion_probability(10, g, 10.0, 32, 1.5, MoveKind::Add);
    CHECK(f5 == doctest::Approx(0.26).epsilon(0.05));
    CHECK(f10 == doctest::Approx(0.50).epsilon(0.05));
    CHECK(f10 > f5);  // increasing in the importance score
  }

  SUBCASE("swap divides the add weight by the component size") {
    const double fs = toggle_inclusion_probability(10, g, 1.0, 32, 1.5, MoveKind::Swap);
    const double fa = toggle_inclusion_probability(10, g, 1.0, 32, 1.5, MoveKind::Add);
    CHECK(fs == doctest::Approx(fa / 3.0));
    CHECK(toggle_inclusion_probability(0, g, 1.0, 32, 1.5, MoveKind::Swap) == 1.0);
  }

  SUBCASE("expected add-neighborhood size is about M") {
    InclusionVector empty(1000);
    double expected = 0.0;
    for (int j = 0; j < 1000; ++j)
      expected += toggle_inclusion_probability(j, empty, 1.0, 32, 1.5, MoveKind::Add);
    CHECK(expected == doctest::Approx(32.0).epsilon(0.05));
  }
}

TEST_CASE("component_log_score matches a brute-force grid sum") {
  const AgpModel model = tiny_model(3, 2, 101);
  EnsembleState st = oracle_state(model, 1, 0.3);
  SamplerConfig cfg;

  InclusionVector g(2);
  g.set(1, true);
  const double got = component_log_score(g, st, model, cfg, 0);

  // direct Eq-style evaluation: prior + logsumexp over grid cells
  std::vector<double> terms;
  for (int c = 0; c < model.grids.n_cells(); ++c) {
    const double rho = model.grids.cell_rho(c);
    const Matrix K =
        rho > 0.0 ? Matrix((rho * rho) *
                           se_covariance(model.X, g, model.grids.cell_lambda(c)))
                  : Matrix(Matrix::Zero(3, 3));
    terms.push_back(model.grids.log_cell_weight(c) +
                    log_marginal_likelihood(model.y, K, model.noise));
  }
  const double want = log_inclusion_prior(g, 0.3) + log_sum_exp(terms);
  CHECK(got == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("grid marginal is gamma-free when the rho grid is {0}") {
  AgpModel model = tiny_model(4, 3, 103);
  model.grids = make_grids({0.0}, {2.0});
  EnsembleState st = oracle_state(model, 1, 0.4);
  SamplerConfig cfg;
  ComponentScorer scorer(model, st, 0, cfg);

  InclusionVector a(3), b(3);
  b.set(0, true);
  b.set(2, true);
  CHECK(scorer.grid_log_marginal(a) == doctest::Approx(scorer.grid_log_marginal(b)));
}

TEST_CASE("forward neighborhoods respect the move kind") {
  const AgpModel model = tiny_model(5, 4, 107);
  Rng rng(11);
  SamplerConfig cfg;
  InclusionVector g(4);
  g.set(0, true);
  g.set(2, true);
  const Vector v = Vector::Ones(4);

  SUBCASE("remove enumerates every included predictor") {
    const NeighborSet set = build_forward_neighborhood(MoveKind::Remove, g, v, 5, cfg, rng);
    REQUIRE(set.gammas.size() == 2);
    for (const auto& cand : set.gammas) CHECK(cand.size() == 1);
  }

  SUBCASE("add candidates grow the component by one") {
    cfg.prns_mode = true;  // deterministic: all toggles fire
    const NeighborSet set = build_forward_neighborhood(MoveKind::Add, g, v, 5, cfg, rng);
    REQUIRE(set.gammas.size() == 2);
    for (const auto& cand : set.gammas) CHECK(cand.size() == 3);
  }

  SUBCASE("swap candidates preserve size") {
    cfg.prns_mode = true;
    const NeighborSet set = build_forward_neighborhood(MoveKind::Swap, g, v, 5, cfg, rng);
    REQUIRE(set.gammas.size() == 4);  // 2 included x 2 excluded
    for (const auto& cand : set.gammas) CHECK(cand.size() == 2);
  }

  SUBCASE("reverse sets always contain the origin") {
    cfg.prns_mode = false;
    for (int trial = 0; trial < 50; ++trial) {
      const NeighborSet fwd = build_forward_neighborhood(MoveKind::Remove, g, v, 5, cfg, rng);
      const int pick = std::uniform_int_distribution<int>(0, fwd.gammas.size() - 1)(rng);
      const NeighborSet rev = build_reverse_neighborhood(
          MoveKind::Remove, fwd.gammas[pick], fwd.toggles_k[pick], -1, -1, v, 5, cfg, rng);
      REQUIRE(rev.origin_index >= 0);
      CHECK(rev.gammas[rev.origin_index] == g);
    }
  }
}

TEST_CASE("dmtm steps change the size by the move's signature") {
  const AgpModel model = tiny_model(10, 4, 109);
  SamplerConfig cfg;
  Rng rng(13);
  EnsembleState st = oracle_state(model, 1, 0.3);
  st.components[0].gamma.set(0, true);
  st.components[0].gamma.set(1, true);

  for (int trial = 0; trial < 30; ++trial) {
    EnsembleState work = st;
    const StepOutcome add = dmtm_step_forced(work, 0, MoveKind::Add, model, cfg, 5, rng);
    if (add.accepted) CHECK(work.components[0].gamma.size() == 3);

    work = st;
    const StepOutcome rem = dmtm_step_forced(work, 0, MoveKind::Remove, model, cfg, 5, rng);
    if (rem.accepted) CHECK(work.components[0].gamma.size() == 1);

    work = st;
    const StepOutcome swap = dmtm_step_forced(work, 0, MoveKind::Swap, model, cfg, 5, rng);
    if (swap.accepted) {
      CHECK(work.components[0].gamma.size() == 2);
      CHECK(!(work.components[0].gamma == st.components[0].gamma));
    }
  }
}

TEST_CASE("the PRNS special case matches the hand-computed acceptance") {
  // p = 2 instance small enough to compute Eq-style acceptance by hand.
  const AgpModel model = tiny_model(6, 2, 211);
  SamplerConfig cfg;
  cfg.prns_mode = true;
  const double tau = 0.3;

  EnsembleState st = oracle_state(model, 1, tau);
  REQUIRE(st.components[0].gamma.size() == 0);

  // scores of the two add candidates and the empty state
  std::vector<double> pi(4);
  for (std::uint64_t key = 0; key < 4; ++key) {
    EnsembleState probe = st;
    pi[key] = component_log_score(InclusionVector::from_key(key, 2), probe, model, cfg, 0);
  }
  const MoveWeights w0 = move_weights(0, model.moves, 2);
  const MoveWeights w1 = move_weights(1, model.moves, 2);
  REQUIRE(w0.add == 1.0);

  // From the empty state the forward set is both singletons; acceptance for
  // candidate {j} is min(1, w_R(1) (pi({0}) + pi({1})) / (w_A(0) pi(empty))).
  const double fwd_sum = log_sum_exp(std::vector<double>{pi[1], pi[2]});
  auto expected_transition = [&](int key) {
    const double select = std::exp(pi[key] - fwd_sum);
    const double alpha =
        std::min(1.0, std::exp(std::log(w1.remove) + fwd_sum - std::log(w0.add) - pi[0]));
    return select * alpha;
  };

  Rng rng(17);
  const int trials = 40000;
  int to1 = 0, to2 = 0;
  for (int t = 0; t < trials; ++t) {
    EnsembleState work = st;
    dmtm_step_forced(work, 0, MoveKind::Add, model, cfg, 5, rng);
    const std::uint64_t key = work.components[0].gamma.key();
    if (key == 1) ++to1;
    if (key == 2) ++to2;
  }
  const double se = 3.0 / std::sqrt(static_cast<double>(trials));
  CHECK(std::abs(static_cast<double>(to1) / trials - expected_transition(1)) < se);
  CHECK(std::abs(static_cast<double>(to2) / trials - expected_transition(2)) < se);
}

TEST_CASE("griddy gibbs with a single-cell grid always returns it") {
  AgpModel model = tiny_model(5, 2, 113);
  model.grids = make_grids({0.0}, {2.5});
  EnsembleState st = oracle_state(model, 1, 0.3);
  SamplerConfig cfg;
  Rng rng(19);
  griddy_gibbs_scales(st, 0, model, cfg, rng);
  CHECK(st.components[0].rho == 0.0);
  CHECK(st.components[0].lambda == 2.5);
}

TEST_CASE("griddy gibbs matches prior frequencies when the likelihood is flat") {
  // rho = 0 in every cell makes the data term constant.
  AgpModel model = tiny_model(4, 2, 127);
  model.grids = make_grids({0.0}, {1.0, 2.0, 3.0}, 0.0, 0.7);
  EnsembleState st = oracle_state(model, 1, 0.3);
  SamplerConfig cfg;
  Rng rng(23);
  std::vector<int> counts(3, 0);
  const int draws = 30000;
  for (int i = 0; i < draws; ++i) {
    griddy_gibbs_scales(st, 0, model, cfg, rng);
    for (int c = 0; c < 3; ++c)
      if (st.components[0].lambda == model.grids.lambda_values[c]) counts[c]++;
  }
  for (int c = 0; c < 3; ++c) {
    const double freq = static_cast<double>(counts[c]) / draws;
    CHECK(freq == doctest::Approx(model.grids.lambda_weights[c]).epsilon(0.08));
  }
}

TEST_CASE("griddy gibbs finds strong signal") {
  // y depends on predictor 0 with high signal-to-noise
  Rng rng(29);
  const int n = 40;
  Matrix X = testing::random_uniform_matrix(n, 2, rng);
  Vector y(n);
  for (int i = 0; i < n; ++i) y(i) = std::sin(6.0 * X(i, 0)) + 0.2 * normal_draw(0.0, 1.0, rng);
  const Dataset d = make_dataset(std::move(X), std::move(y));
  const AgpModel model = make_default_model(d.X_std, d.y_std);

  EnsembleState st = oracle_state(model, 1, 0.3);
  st.components[0].gamma.set(0, true);
  SamplerConfig cfg;
  int nonzero = 0;
  const int draws = 200;
  for (int i = 0; i < draws; ++i) {
    griddy_gibbs_scales(st, 0, model, cfg, rng);
    if (st.components[0].rho > 0.0) ++nonzero;
  }
  CHECK(nonzero > draws * 0.9);
}

TEST_CASE("inter-component moves preserve the predictor budget") {
  const AgpModel model = tiny_model(10, 5, 131);
  SamplerConfig cfg;
  Rng rng(31);

  EnsembleState st = oracle_state(model, 2, 0.3);
  st.active = {0, 1};
  st.components[0].gamma.set(0, true);
  st.components[0].gamma.set(1, true);
  st.components[0].rho = 1.0;
  st.components[1].gamma.set(3, true);
  st.components[1].rho = 1.0;

  SUBCASE("donate moves conserve the total size") {
    for (int trial = 0; trial < 40; ++trial) {
      EnsembleState work = st;
      const int before = work.components[0].gamma.size() + work.components[1].gamma.size();
      icm_propose_accept(trial % 2 == 0 ? MoveKind::CrossDonate : MoveKind::PairedDonate, work,
                         model, cfg, rng);
      const int after = work.components[0].gamma.size() + work.components[1].gamma.size();
      CHECK(after == before);
    }
  }

  SUBCASE("paired swap preserves each component's size") {
    for (int trial = 0; trial < 40; ++trial) {
      EnsembleState work = st;
      const StepOutcome out = icm_propose_accept(MoveKind::PairedSwap, work, model, cfg, rng);
      CHECK(work.components[0].gamma.size() == 2);
      CHECK(work.components[1].gamma.size() == 1);
      if (out.accepted) {
        // disjoint singleton side: predictor 3 moved into component 0
        CHECK(work.components[0].gamma.test(3));
      }
    }
  }

  SUBCASE("infeasible kinds are clean no-ops") {
    EnsembleState empty_state = oracle_state(model, 2, 0.3);
    empty_state.active = {0, 1};
    const StepOutcome out =
        icm_propose_accept(MoveKind::PairedSwap, empty_state, model, cfg, rng);
    CHECK(!out.attempted);
    CHECK(!out.accepted);
  }
}

TEST_CASE("run_chain smoke and determinism contracts") {
  const AgpModel model = tiny_model(12, 4, 137);

  SUBCASE("a single iteration yields one valid record") {
    SamplerConfig cfg;
    cfg.iterations = 1;
    cfg.seed = 5;
    const std::vector<ChainRecord> chain = run_chain(model, cfg);
    REQUIRE(chain.size() == 1);
    CHECK(chain[0].iteration == 1);
    CHECK(chain[0].sigma2 > 0.0);
    CHECK(!chain[0].active.empty());
  }

  SUBCASE("same seed, same chain") {
    SamplerConfig cfg;
    cfg.iterations = 25;
    cfg.seed = 99;
    const auto a = run_chain(model, cfg);
    const auto b = run_chain(model, cfg);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(record_to_line(a[i]) == record_to_line(b[i]));
  }

  SUBCASE("icm_prob zero still mixes inclusion vectors") {
    SamplerConfig cfg;
    cfg.iterations = 40;
    cfg.icm_prob = 0.0;
    cfg.seed = 7;
    const auto chain = run_chain(model, cfg);
    CHECK(chain.size() == 40);
  }

  SUBCASE("retain drops burn-in and thins") {
    SamplerConfig cfg;
    cfg.iterations = 20;
    cfg.seed = 21;
    const auto chain = run_chain(model, cfg);
    const auto kept = retain(chain, 10, 4);
    REQUIRE(kept.size() == 3);  // records 10, 14, 18 (0-based)
    CHECK(kept[0].iteration == 11);
    CHECK(kept[1].iteration == 15);
  }
}

TEST_SUITE_END();
