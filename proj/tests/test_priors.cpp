#include "agp/priors.hpp"

#include <numeric>

#include "agp/state.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace agp;

TEST_SUITE_BEGIN("priors");

TEST_CASE("default grids invert the calibration targets") {
  const GridSpec g = default_grids();
  REQUIRE(g.n_rho() == 6);
  REQUIRE(g.n_lambda() == 5);
  CHECK(g.rho_values[0] == 0.0);
  CHECK(g.rho_values[2] == doctest::Approx(1.0));           // R2 = 0.5
  CHECK(g.rho_values[5] == doctest::Approx(std::sqrt(99.0)));  // R2 = 0.99
  CHECK(g.lambda_values[0] == doctest::Approx(1.0025).epsilon(1e-3));   // c = 0.99
  CHECK(g.lambda_values[4] == doctest::Approx(5.9722).epsilon(1e-3));   // c = 0.70
  for (double w : g.rho_weights) CHECK(w == doctest::Approx(1.0 / 6));
  for (double w : g.lambda_weights) CHECK(w == doctest::Approx(1.0 / 5));
}

TEST_CASE("grid weights sum to one for any decay exponents") {
  for (double alpha : {0.0, 0.5, 2.0})
    for (double beta : {0.0, 0.3, 1.5}) {
      const GridSpec g = make_grids({0.0, 0.5, 1.0, 2.0}, {1.0, 2.0, 4.0}, alpha, beta);
      CHECK(std::abs(std::accumulate(g.rho_weights.begin(), g.rho_weights.end(), 0.0) - 1.0) <
            1e-12);
      CHECK(std::abs(std::accumulate(g.lambda_weights.begin(), g.lambda_weights.end(), 0.0) -
                     1.0) < 1e-12);
    }
}

TEST_CASE("grid validation catches bad supports") {
  CHECK_THROWS(make_grids({0.5, 1.0}, {1.0}));       // rho grid must contain 0
  CHECK_THROWS(make_grids({0.0, 0.0}, {1.0}));       // not increasing
  CHECK_THROWS(make_grids({0.0, 1.0}, {0.0, 1.0}));  // lambda must be positive
}

TEST_CASE("log_inclusion_prior closed forms") {
  InclusionVector g(10);
  g.set(2, true);
  g.set(5, true);
  CHECK(log_inclusion_prior(g, 0.5) == doctest::Approx(-10.0 * std::log(2.0)));

  InclusionVector empty(100);
  CHECK(log_inclusion_prior(empty, 0.01) == doctest::Approx(100.0 * std::log(0.99)));

  InclusionVector one(3);
  one.set(0, true);
  CHECK(log_inclusion_prior(one, 0.2) == doctest::Approx(std::log(0.2 * 0.8 * 0.8)));

  CHECK_THROWS_AS(log_inclusion_prior(g, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(log_inclusion_prior(g, 1.0), std::invalid_argument);
}

TEST_CASE("complement identities hold for the inclusion prior") {
  Rng rng(5);
  const int p = 12;
  const double tau = 0.3;
  const double constant_sum = p * std::log(tau * (1.0 - tau));
  for (int trial = 0; trial < 5; ++trial) {
    InclusionVector g(p);
    InclusionVector comp(p);
    for (int j = 0; j < p; ++j) {
      const bool in = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
      g.set(j, in);
      comp.set(j, !in);
    }
    // complementing both the vector and tau leaves the prior unchanged
    CHECK(log_inclusion_prior(comp, 1.0 - tau) ==
          doctest::Approx(log_inclusion_prior(g, tau)).epsilon(1e-12));
    // complementing the vector alone gives a gamma-free total
    CHECK(log_inclusion_prior(g, tau) + log_inclusion_prior(comp, tau) ==
          doctest::Approx(constant_sum).epsilon(1e-12));
  }
}

TEST_CASE("sample_tau draws from the Algorithm-1 Beta posterior") {
  const int p = 100;
  EnsembleState state = make_initial_state(p, 1, 10, 100);
  // 9 contributing components holding 5 predictors total
  for (int l = 0; l < 9; ++l) state.components[l].rho = 1.0;
  for (int j = 0; j < 5; ++j) state.components[j].gamma.set(j, true);
  REQUIRE(state.contributing_count() == 9);

  const InclusionPrior prior{1.0, p};
  Rng rng(17);
  double sum = 0.0;
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) sum += sample_tau(state, prior, rng);
  // nu' = 1000, mu' = (1 + 5) / 1000
  CHECK(sum / draws == doctest::Approx(0.006).epsilon(0.05));
}

TEST_CASE("sample_tau with no contributing components reduces to the hyper-prior") {
  const int p = 50;
  EnsembleState state = make_initial_state(p, 1, 5, 100);
  state.active.clear();
  const InclusionPrior prior{1.0, p};
  Rng rng(19);
  double sum = 0.0;
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) sum += sample_tau(state, prior, rng);
  CHECK(sum / draws == doctest::Approx(1.0 / 50).epsilon(0.05));
}

TEST_CASE("move_weights boundary and shape behavior") {
  const MoveSchedule sched;
  const int p = 20;

  const MoveWeights w0 = move_weights(0, sched, p);
  CHECK(w0.add == 1.0);
  CHECK(w0.remove == 0.0);
  CHECK(w0.swap == 0.0);

  for (int d = 0; d <= p; ++d) {
    const MoveWeights w = move_weights(d, sched, p);
    CHECK(w.add + w.remove + w.swap == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w.add >= 0.0);
    CHECK(w.remove >= 0.0);
    CHECK(w.swap >= 0.0);
    if (d >= 1) {
      CHECK(w.remove >= 0.05);  // removal always reachable
      if (d < p) CHECK(w.add > 0.0);
    }
  }

  // swap propensity peaks at the Poisson mode d_bar = 4
  double best = -1.0;
  int argmax = -1;
  for (int d = 1; d < p; ++d) {
    const double ws = move_weights(d, sched, p).swap;
    if (ws > best) {
      best = ws;
      argmax = d;
    }
  }
  CHECK(argmax == 4);

  // add propensity decreases with size
  double prev = move_weights(1, sched, p).add;
  for (int d = 2; d <= 10; ++d) {
    const double wa = move_weights(d, sched, p).add;
    CHECK(wa < prev);
    prev = wa;
  }

  CHECK(move_weights(p, sched, p).swap == 0.0);  // no swap partner at d = p
  CHECK_THROWS_AS(move_weights(p + 1, sched, p), std::invalid_argument);
}

TEST_CASE("component_bounds formulas") {
  CHECK(component_bounds(1000) == std::pair<int, int>{6, 32});
  CHECK(component_bounds(50) == std::pair<int, int>{3, 8});
  CHECK(component_bounds(2).first == 1);
  CHECK(component_bounds(3).first == 1);
  CHECK_THROWS_AS(component_bounds(1), std::invalid_argument);
}

TEST_CASE("Beta-binomial prior with d*=1 concentrates on tiny models") {
  const int p = 100;
  double mass_small = 0.0;
  for (int d = 0; d <= 3; ++d) mass_small += testing::beta_binomial_pmf(d, p, 1.0);
  CHECK(mass_small > 0.90);
}

TEST_SUITE_END();
