#pragma once

#include <optional>
#include <string>

#include "agp/data.hpp"
#include "agp/inference.hpp"
#include "agp/sampler.hpp"

namespace agp {

enum class TestFn { Friedman, Confounded, Linear, Single };

std::optional<TestFn> parse_test_fn(const std::string& name);
std::string test_fn_name(TestFn fn);
// Smallest p the function is defined for.
int test_fn_min_p(TestFn fn);
// Predictors (0-based) the function actually depends on.
std::vector<int> test_fn_support(TestFn fn);

// Noise-free regression surface at a raw [0,1]-scale predictor row.
double test_fn_value(TestFn fn, const Eigen::RowVectorXd& x);

struct SimData {
  Dataset train;
  Matrix X_test_raw;
  Matrix X_test_std;  // standardized with training statistics
  Vector y_test;      // observed (noisy) test responses
  Vector f_train;     // noise-free truth
  Vector f_test;
};

// x_ij ~ Unif(0,1), y_i ~ N(f(x_i), 1); fresh i.i.d. test draw. Deterministic
// given the seed.
SimData generate(TestFn fn, int n, int p, std::uint64_t seed, int n_test = 200,
                 bool standardize_x = true);

double rmse(const Vector& pred, const Vector& target);

struct ExperimentConfig {
  TestFn fn = TestFn::Friedman;
  int n = 100;
  int p = 50;
  int replicates = 10;
  int n_test = 200;
  std::uint64_t seed = 1;
  bool standardize_x = true;
  double d_star = 1.0;
  SamplerConfig sampler;
  bool icm_ablation = false;  // re-run each replicate with Delta = 0
  int jobs = 1;
  int q = 10;  // interaction-graph threshold count
};

struct ReplicateResult {
  bool failed = false;
  std::string error;
  double rmse_test = 0.0;    // against observed test responses
  double rmse_truth = 0.0;   // against the noise-free surface
  double rmse_null = 0.0;    // train-mean predictor baseline
  double sigma2_mean = 0.0;
  Vector inclusion;
  PosteriorSummary summary;
  InteractionGraph graph;
  double rmse_test_no_icm = -1.0;  // ablation pass, when requested
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<ReplicateResult> replicates;
  double mean_rmse = 0.0;
  double se_rmse = 0.0;
  double mean_rmse_truth = 0.0;
  double mean_sigma2 = 0.0;
  double support_recall = 0.0;   // truth predictors with inclusion > 0.5
  double mean_false_positives = 0.0;
  int n_failed = 0;
  double mean_rmse_no_icm = -1.0;
};

ExperimentReport run_experiment(const ExperimentConfig& config);

// summary.csv, per-replicate JSON, inclusion/edge/histogram CSVs.
void write_report(const ExperimentReport& report, const std::string& out_dir);

}  // namespace agp
