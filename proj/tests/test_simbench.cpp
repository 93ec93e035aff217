#include "agp/simbench.hpp"

#include <filesystem>

#include "doctest.h"

using namespace agp;

TEST_SUITE_BEGIN("simbench");

TEST_CASE("test function values match their formulas") {
  Eigen::RowVectorXd x(10);

  SUBCASE("friedman at the center point") {
    x.setConstant(0.5);
    const double want =
        10.0 * std::sin(M_PI * 0.25) + 10.0 * std::cos(M_PI * 0.75) + 5.0;
    CHECK(test_fn_value(TestFn::Friedman, x) == doctest::Approx(want));
  }

  SUBCASE("single at the origin is 10") {
    x.setZero();
    CHECK(test_fn_value(TestFn::Single, x) == doctest::Approx(10.0));
  }

  SUBCASE("linear at the origin is 0") {
    x.setZero();
    CHECK(test_fn_value(TestFn::Linear, x) == doctest::Approx(0.0));
  }

  SUBCASE("confounded at the origin") {
    x.setZero();
    CHECK(test_fn_value(TestFn::Confounded, x) == doctest::Approx(10.0));
  }
}

TEST_CASE("function metadata") {
  CHECK(parse_test_fn("friedman") == TestFn::Friedman);
  CHECK(parse_test_fn("unknown") == std::nullopt);
  CHECK(test_fn_min_p(TestFn::Friedman) == 7);
  CHECK(test_fn_min_p(TestFn::Linear) == 10);
  CHECK(test_fn_support(TestFn::Single) == std::vector<int>{0, 1});
}

TEST_CASE("generate is deterministic and rejects undersized p") {
  const SimData a = generate(TestFn::Single, 20, 5, 42);
  const SimData b = generate(TestFn::Single, 20, 5, 42);
  CHECK(a.train.X_raw == b.train.X_raw);
  CHECK(a.train.y_raw == b.train.y_raw);
  CHECK(a.X_test_raw == b.X_test_raw);

  const SimData c = generate(TestFn::Single, 20, 5, 43);
  CHECK(a.train.y_raw != c.train.y_raw);

  CHECK_THROWS_AS(generate(TestFn::Friedman, 20, 5, 1), std::invalid_argument);
}

TEST_CASE("generated noise has unit variance at large n") {
  const SimData sim = generate(TestFn::Friedman, 10000, 7, 7, 1);
  const Vector resid = sim.train.y_raw - sim.f_train;
  const double mean = resid.mean();
  const double var = (resid.array() - mean).square().sum() / (resid.size() - 1);
  CHECK(var > 0.8);
  CHECK(var < 1.2);
}

TEST_CASE("standardization round-trips and produces unit-variance response") {
  const SimData sim = generate(TestFn::Linear, 50, 12, 11);
  const Dataset& d = sim.train;
  CHECK(std::abs(d.y_std.mean()) < 1e-12);
  const double var = d.y_std.squaredNorm() / (d.n() - 1);
  CHECK(var == doctest::Approx(1.0).epsilon(1e-12));
  const Vector back = destandardize_y(d.y_std, d);
  CHECK((back - d.y_raw).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("rmse closed forms") {
  Vector a(3), b(3);
  a << 1.0, 2.0, 3.0;
  b = a;
  CHECK(rmse(a, b) == 0.0);
  CHECK(rmse(a, (b.array() + 2.0).matrix()) == doctest::Approx(2.0));
  CHECK_THROWS_AS(rmse(a, Vector(2)), std::invalid_argument);
  CHECK_THROWS_AS(rmse(Vector(0), Vector(0)), std::invalid_argument);
}

TEST_CASE("null predictor RMSE on friedman data sits near the reported scale") {
  // sd of the friedman surface under Unif(0,1)^7 inputs plus unit noise
  double total = 0.0;
  int count = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const SimData sim = generate(TestFn::Friedman, 100, 7, seed, 400);
    const Vector null_pred = Vector::Constant(sim.y_test.size(), sim.train.y_raw.mean());
    total += rmse(null_pred, sim.y_test);
    ++count;
  }
  CHECK(total / count == doctest::Approx(7.82).epsilon(0.12));
}

TEST_CASE("run_experiment smoke run emits every report section") {
  ExperimentConfig config;
  config.fn = TestFn::Single;
  config.n = 25;
  config.p = 6;
  config.replicates = 1;
  config.seed = 5;
  config.sampler.iterations = 10;
  config.sampler.burn_in = 0;
  config.sampler.thin = 1;

  const ExperimentReport report = run_experiment(config);
  REQUIRE(report.replicates.size() == 1);
  REQUIRE(!report.replicates[0].failed);
  CHECK(report.mean_rmse > 0.0);
  CHECK(report.replicates[0].inclusion.size() == 6);
  CHECK(!report.replicates[0].summary.sigma2_trace.empty());

  const std::string dir = "smoke_report_dir";
  write_report(report, dir);
  CHECK(std::filesystem::exists(dir + "/summary.csv"));
  CHECK(std::filesystem::exists(dir + "/report.json"));
  CHECK(std::filesystem::exists(dir + "/inclusion.csv"));
  CHECK(std::filesystem::exists(dir + "/edges.csv"));
  CHECK(std::filesystem::exists(dir + "/component_hist.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("replicate failures are recorded without aborting the experiment") {
  ExperimentConfig config;
  config.fn = TestFn::Single;
  config.n = 25;
  config.p = 6;
  config.replicates = 1;
  config.sampler.iterations = 5;
  config.sampler.burn_in = 100;  // leaves no retained draws: replicate fails
  config.sampler.thin = 1;
  const ExperimentReport report = run_experiment(config);
  CHECK(report.n_failed == 1);
  CHECK(!report.replicates[0].error.empty());
}

TEST_SUITE_END();
