#pragma once

#include <string>
#include <vector>

namespace agp::cli {

// Exit codes: 0 success, 1 usage/config error, 2 numerical failure.
constexpr int kOk = 0;
constexpr int kUsageError = 1;
constexpr int kNumericalError = 2;

struct FitOptions {
  std::string data_path;
  std::string response_column;  // empty: last column
  std::string out_dir = "agp_out";
  double d_star = 1.0;
  double a = 1.0;
  double b = 1.0;
  double grid_alpha = 0.0;
  double grid_beta = 0.0;
  double delta = 0.20;
  double alpha_incl = 1.5;
  long iterations = 1000;
  long burn_in = 200;
  int thin = 4;
  int budget = 0;  // 0: 10 * k_max
  int q = 10;
  unsigned long long seed = 1;
  bool standardize_x = true;
};

struct PredictOptions {
  std::string model_dir;  // fit output directory
  std::string data_path;
  std::string out_path = "predictions.csv";
};

struct SimulateOptions {
  std::string function = "friedman";
  int n = 100;
  int p = 50;
  int replicates = 10;
  long iterations = 1000;
  long burn_in = 200;
  int thin = 4;
  int jobs = 1;
  unsigned long long seed = 1;
  std::string out_dir = "agp_sim";
  bool icm_ablation = false;
  bool standardize_x = true;
};

struct OracleCheckOptions {
  int p = 4;
  int n = 20;
  int k = 1;
  long dmtm_trials = 20000;
  long icm_trials = 10000;
  long stationarity_steps = 100000;
  unsigned long long seed = 1;
  std::string mutate;  // "", drop-w-ratio, drop-omega-ratio, wrong-reverse
  std::string out_path;  // optional flux table dump
};

int cmd_fit(const FitOptions& opt);
int cmd_predict(const PredictOptions& opt);
int cmd_simulate(const SimulateOptions& opt);
int cmd_oracle_check(const OracleCheckOptions& opt);

}  // namespace agp::cli
