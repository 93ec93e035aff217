#include "agp/inference.hpp"

#include "agp/sampler.hpp"
#include "agp/simbench.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace agp;

namespace {

AgpModel signal_model(int n, int p, std::uint64_t seed, double noise_sd = 0.3) {
  Rng rng(seed);
  Matrix X = testing::random_uniform_matrix(n, p, rng);
  Vector y(n);
  for (int i = 0; i < n; ++i)
    y(i) = std::sin(4.0 * X(i, 0)) + noise_sd * normal_draw(0.0, 1.0, rng);
  const Dataset d = make_dataset(std::move(X), std::move(y));
  return make_default_model(d.X_std, d.y_std);
}

ChainRecord manual_record(int p, int k, const std::vector<std::vector<int>>& gammas,
                          const std::vector<double>& rho, double lambda = 2.0) {
  ChainRecord rec;
  rec.gamma_indices = gammas;
  rec.rho = rho;
  rec.lambda.assign(k, lambda);
  rec.active.resize(k);
  for (int l = 0; l < k; ++l) rec.active[l] = l;
  rec.sigma2 = 0.25;
  return rec;
}

}  // namespace

TEST_SUITE_BEGIN("inference");

TEST_CASE("sample_sigma2 matches the inverse-gamma moments") {
  SUBCASE("null model at the origin reduces to IG(2, 1)") {
    Rng rng(3);
    Matrix X = testing::random_uniform_matrix(2, 2, rng);
    AgpModel model = make_default_model(X, Vector::Zero(2));
    // y = 0, K = 0: posterior IG(a + 1, b) with a = b = 1 -> mean b'/(a'-1) = 1
    EnsembleState st = make_initial_state(2, 1, 1, 100);
    double sum = 0.0;
    const int draws = 40000;
    for (int i = 0; i < draws; ++i) sum += sample_sigma2(st, model, rng);
    CHECK(sum / draws == doctest::Approx(1.0).epsilon(0.05));
  }

  SUBCASE("general state matches the IG mean identity") {
    const AgpModel model = signal_model(10, 2, 7);
    EnsembleState st = make_initial_state(2, 1, 1, 100);
    st.components[0].gamma.set(0, true);
    st.components[0].rho = 1.0;
    st.components[0].lambda = model.grids.lambda_values[2];

    Matrix sigma = aggregate_kernel(st.components, model.X);
    sigma.diagonal().array() += 1.0;
    const double quad = model.y.dot(sigma.llt().solve(model.y));
    const double want = (model.noise.b + quad / 2) / (model.noise.a + 10.0 / 2 - 1.0);

    Rng rng(11);
    double sum = 0.0;
    const int draws = 40000;
    for (int i = 0; i < draws; ++i) sum += sample_sigma2(st, model, rng);
    CHECK(sum / draws == doctest::Approx(want).epsilon(0.05));
  }
}

TEST_CASE("sample_component_f has the closed-form conditional moments") {
  const AgpModel model = signal_model(20, 2, 13);
  EnsembleState st = make_initial_state(2, 1, 1, 100);

  SUBCASE("a zero-signal component returns the prior mean") {
    Rng rng(17);
    const Vector f = sample_component_f(0, st, 1.0, model, rng);
    CHECK(f.norm() == 0.0);
  }

  SUBCASE("with sigma2 near zero the draw collapses to K Sigma^{-1} y") {
    st.components[0].gamma.set(0, true);
    st.components[0].rho = 1.5275252316519468;
    st.components[0].lambda = model.grids.lambda_values[1];

    const double rho2 = st.components[0].rho * st.components[0].rho;
    Matrix B = rho2 * se_covariance(model.X, st.components[0].gamma,
                                    st.components[0].lambda);
    B.diagonal().array() += 1e-8 * rho2;
    Matrix sigma = B;
    sigma.diagonal().array() += 1.0;
    const Vector want = B * sigma.llt().solve(model.y);

    Rng rng(19);
    const Vector f = sample_component_f(0, st, 1e-14, model, rng);
    CHECK((f - want).norm() / want.norm() < 1e-4);
  }

  SUBCASE("aggregated draws plus noise variance reproduce the response scale") {
    // strong single-component fit: residual variance should be near sigma2
    Rng rng(23);
    const AgpModel strong = signal_model(60, 2, 29, 0.2);
    EnsembleState fit = make_initial_state(2, 1, 1, 100);
    fit.components[0].gamma.set(0, true);
    SamplerConfig cfg;
    for (int sweep = 0; sweep < 20; ++sweep) griddy_gibbs_scales(fit, 0, strong, cfg, rng);
    REQUIRE(fit.components[0].rho > 0.0);

    const double sigma2 = sample_sigma2(fit, strong, rng);
    double resid_var = 0.0;
    const int draws = 50;
    for (int i = 0; i < draws; ++i) {
      const Vector f = sample_component_f(0, fit, sigma2, strong, rng);
      resid_var += (strong.y - f).squaredNorm() / strong.n();
    }
    resid_var /= draws;
    CHECK(resid_var / sigma2 > 0.3);
    CHECK(resid_var / sigma2 < 3.0);
  }
}

TEST_CASE("predict basics") {
  const int p = 2;

  SUBCASE("an all-noise chain predicts exactly zero on the model scale") {
    const AgpModel model = signal_model(15, p, 31);
    std::vector<ChainRecord> chain{
        manual_record(p, 1, {{}}, {0.0}),
        manual_record(p, 1, {{}}, {0.0}),
    };
    Rng rng(37);
    const Predictions pred = predict(chain, model.X.topRows(4), model, rng);
    CHECK(pred.mean.cwiseAbs().maxCoeff() == 0.0);
    CHECK(pred.lo.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("strong-signal records interpolate the training data") {
    const AgpModel model = signal_model(25, p, 41, 0.05);
    ChainRecord rec = manual_record(p, 1, {{0}}, {9.9498743710662}, 2.4477314226436856);
    rec.sigma2 = 1e-6;
    std::vector<ChainRecord> chain(30, rec);
    Rng rng(43);
    const Predictions pred = predict(chain, model.X, model, rng);
    CHECK((pred.mean - model.y).norm() / model.y.norm() < 0.15);
    // bands have positive width
    CHECK((pred.hi - pred.lo).minCoeff() >= 0.0);
  }

  SUBCASE("low-rank and dense prediction means agree") {
    const AgpModel model = signal_model(40, p, 47, 0.2);
    ChainRecord rec = manual_record(p, 1, {{0}}, {1.5275252316519468}, 2.4477314226436856);
    std::vector<ChainRecord> chain(40, rec);
    Rng rng_a(53), rng_b(53);
    const Matrix X_star = model.X.topRows(10);
    const Predictions dense = predict(chain, X_star, model, rng_a, false);
    const Predictions lowrank = predict(chain, X_star, model, rng_b, true);
    CHECK((dense.mean - lowrank.mean).cwiseAbs().maxCoeff() < 1e-4);
  }

  SUBCASE("column mismatch is rejected") {
    const AgpModel model = signal_model(10, p, 59);
    std::vector<ChainRecord> chain{manual_record(p, 1, {{}}, {0.0})};
    Rng rng(61);
    CHECK_THROWS_AS(predict(chain, Matrix::Zero(3, p + 1), model, rng), std::invalid_argument);
  }
}

TEST_CASE("marginal_inclusion counts active-component membership exactly") {
  const int p = 4;
  std::vector<ChainRecord> chain{
      manual_record(p, 2, {{0, 1}, {}}, {1.0, 0.0}),
      manual_record(p, 2, {{0}, {2}}, {1.0, 1.0}),
      manual_record(p, 2, {{}, {}}, {0.0, 0.0}),
      manual_record(p, 2, {{0, 2}, {0}}, {1.0, 0.5}),
  };
  const Vector incl = marginal_inclusion(chain, p);
  CHECK(incl(0) == doctest::Approx(0.75));
  CHECK(incl(1) == doctest::Approx(0.25));
  CHECK(incl(2) == doctest::Approx(0.5));
  CHECK(incl(3) == doctest::Approx(0.0));

  CHECK_THROWS_AS(marginal_inclusion({}, p), std::invalid_argument);
}

TEST_CASE("interaction_graph weights equal brute-force co-occurrence counts") {
  const int p = 5;
  std::vector<ChainRecord> chain{
      manual_record(p, 2, {{0, 1}, {2}}, {1.0, 1.0}),
      manual_record(p, 2, {{0, 1, 2}, {}}, {1.0, 0.0}),
      manual_record(p, 2, {{0}, {1, 2}}, {1.0, 1.0}),
      manual_record(p, 2, {{0, 1}, {1, 2}}, {0.0, 1.0}),
  };
  const InteractionGraph g = interaction_graph(chain, p, p);  // keep all nodes

  auto weight_of = [&](int j, int k) {
    for (const auto& e : g.edges)
      if ((e.j == j && e.k == k) || (e.j == k && e.k == j)) return e.weight;
    return 0.0;
  };
  CHECK(weight_of(0, 1) == doctest::Approx(0.75));
  CHECK(weight_of(1, 2) == doctest::Approx(0.75));
  CHECK(weight_of(0, 2) == doctest::Approx(0.25));
  CHECK(weight_of(0, 3) == 0.0);

  // signal-only counting drops the rho = 0 co-occurrence of (0,1)
  const InteractionGraph gs = interaction_graph(chain, p, p, true);
  for (const auto& e : gs.edges)
    if (e.j == 0 && e.k == 1) CHECK(e.weight == doctest::Approx(0.5));
}

TEST_CASE("variance_explained closed forms") {
  EnsembleState st = make_initial_state(3, 1, 2, 100);
  st.active = {0, 1};

  SUBCASE("single component at rho 1 explains half") {
    st.components[0].rho = 1.0;
    const std::vector<double> ve = variance_explained(st);
    CHECK(ve[0] == doctest::Approx(0.5));
    CHECK(ve[1] == doctest::Approx(0.0));
  }

  SUBCASE("all-zero signal explains nothing") {
    for (double v : variance_explained(st)) CHECK(v == 0.0);
  }

  SUBCASE("two unit components explain a third each") {
    st.components[0].rho = 1.0;
    st.components[1].rho = 1.0;
    const std::vector<double> ve = variance_explained(st);
    CHECK(ve[0] == doctest::Approx(1.0 / 3));
    CHECK(ve[1] == doctest::Approx(1.0 / 3));
  }
}

TEST_CASE("model_scores ranks configurations sensibly") {
  SUBCASE("a single configuration scores one") {
    const AgpModel model = signal_model(12, 2, 67);
    Rng rng(71);
    InclusionVector g(2);
    g.set(0, true);
    const std::vector<double> probs = model_scores({{g}}, model, 50, rng);
    REQUIRE(probs.size() == 1);
    CHECK(probs[0] == doctest::Approx(1.0));
  }

  SUBCASE("the data-supported configuration dominates") {
    const AgpModel model = signal_model(30, 2, 73, 0.1);
    Rng rng(79);
    InclusionVector truth(2), wrong(2);
    truth.set(0, true);
    wrong.set(1, true);
    const std::vector<double> probs = model_scores({{truth}, {wrong}}, model, 100, rng);
    CHECK(probs[0] > 0.95);
  }

  SUBCASE("duplicated predictors score equally") {
    Rng rng(83);
    const int n = 15;
    Matrix X(n, 2);
    const Matrix col = testing::random_uniform_matrix(n, 1, rng);
    X.col(0) = col.col(0);
    X.col(1) = col.col(0);
    Vector y(n);
    for (int i = 0; i < n; ++i)
      y(i) = std::sin(4.0 * col(i, 0)) + 0.2 * normal_draw(0.0, 1.0, rng);
    const Dataset d = make_dataset(std::move(X), std::move(y));
    const AgpModel model = make_default_model(d.X_std, d.y_std);
    InclusionVector a(2), b(2);
    a.set(0, true);
    b.set(1, true);
    const std::vector<double> probs = model_scores({{a}, {b}}, model, 200, rng);
    CHECK(probs[0] == doctest::Approx(0.5).epsilon(0.08));
  }

  SUBCASE("empty configuration set is rejected") {
    const AgpModel model = signal_model(10, 2, 89);
    Rng rng(97);
    CHECK_THROWS_AS(model_scores({}, model, 10, rng), std::invalid_argument);
  }
}

TEST_CASE("summarize aggregates the retained records") {
  const int p = 3;
  std::vector<ChainRecord> chain{
      manual_record(p, 2, {{0}, {}}, {1.0, 0.0}),
      manual_record(p, 2, {{0, 1}, {2}}, {1.0, 1.0}),
  };
  chain[0].sigma2 = 0.5;
  chain[1].sigma2 = 1.5;
  const PosteriorSummary s = summarize(chain, p);
  CHECK(s.sigma2_trace == std::vector<double>{0.5, 1.5});
  CHECK(s.nonempty_count_hist.at(1) == 1);
  CHECK(s.nonempty_count_hist.at(2) == 1);
  CHECK(s.active_count_hist.at(2) == 2);
  CHECK(s.marginal_inclusion(0) == doctest::Approx(1.0));
}

TEST_SUITE_END();
