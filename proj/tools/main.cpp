#include <cstdlib>

#include "CLI11.hpp"
#include "cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Additive Gaussian process regression with stochastic-search variable selection"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a key=value file (flags override)");

  const char* env_out = std::getenv("AGP_OUT_DIR");

  agp::cli::FitOptions fit;
  if (env_out) fit.out_dir = env_out;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit the model to a CSV dataset");
  fit_cmd->add_option("--data", fit.data_path, "Headered CSV with predictors and response")
      ->required();
  fit_cmd->add_option("--response", fit.response_column, "Response column name (default: last)");
  fit_cmd->add_option("--out", fit.out_dir, "Output directory");
  fit_cmd->add_option("--d-star", fit.d_star, "Prior expected component size");
  fit_cmd->add_option("--a", fit.a, "Noise prior shape");
  fit_cmd->add_option("--b", fit.b, "Noise prior rate");
  fit_cmd->add_option("--grid-alpha", fit.grid_alpha, "rho grid weight decay");
  fit_cmd->add_option("--grid-beta", fit.grid_beta, "lambda grid weight decay");
  fit_cmd->add_option("--delta", fit.delta, "Inter-component move probability");
  fit_cmd->add_option("--alpha-incl", fit.alpha_incl, "Inclusion-bias exponent");
  fit_cmd->add_option("--iters", fit.iterations, "MCMC iterations");
  fit_cmd->add_option("--burn-in", fit.burn_in, "Burn-in discarded by summaries");
  fit_cmd->add_option("--thin", fit.thin, "Thinning stride");
  fit_cmd->add_option("--budget", fit.budget, "Likelihood evaluations per iteration (0: auto)");
  fit_cmd->add_option("--q", fit.q, "Interaction-graph node count");
  fit_cmd->add_option("--seed", fit.seed, "RNG seed");
  fit_cmd->add_flag("--no-standardize-x{false}", fit.standardize_x,
                    "Use raw predictor columns in the kernel");

  agp::cli::PredictOptions pred;
  CLI::App* pred_cmd = app.add_subcommand("predict", "Predict from a fitted chain");
  pred_cmd->add_option("--model", pred.model_dir, "Fit output directory")->required();
  pred_cmd->add_option("--data", pred.data_path, "CSV of new observations")->required();
  pred_cmd->add_option("--out", pred.out_path, "Predictions CSV path");

  agp::cli::SimulateOptions sim;
  if (env_out) sim.out_dir = env_out;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Run a synthetic benchmark");
  sim_cmd->add_option("--fn", sim.function, "friedman|confounded|linear|single");
  sim_cmd->add_option("--n", sim.n, "Training sample size");
  sim_cmd->add_option("--p", sim.p, "Predictor count");
  sim_cmd->add_option("--reps", sim.replicates, "Replicates");
  sim_cmd->add_option("--iters", sim.iterations, "MCMC iterations");
  sim_cmd->add_option("--burn-in", sim.burn_in, "Burn-in");
  sim_cmd->add_option("--thin", sim.thin, "Thinning stride");
  sim_cmd->add_option("--jobs", sim.jobs, "Parallel replicate workers");
  sim_cmd->add_option("--seed", sim.seed, "RNG seed");
  sim_cmd->add_option("--out", sim.out_dir, "Report directory");
  sim_cmd->add_flag("--icm-ablation", sim.icm_ablation, "Also run with ICM moves disabled");
  sim_cmd->add_flag("--no-standardize-x{false}", sim.standardize_x,
                    "Use raw predictor columns in the kernel");

  agp::cli::OracleCheckOptions oracle;
  CLI::App* oracle_cmd =
      app.add_subcommand("oracle-check", "Validate the samplers against exact enumeration");
  oracle_cmd->add_option("--p", oracle.p, "Predictors (<= 8)");
  oracle_cmd->add_option("--n", oracle.n, "Observations");
  oracle_cmd->add_option("--k", oracle.k, "Components (<= 2)");
  oracle_cmd->add_option("--dmtm-trials", oracle.dmtm_trials, "Flux trials per state (DMTM)");
  oracle_cmd->add_option("--icm-trials", oracle.icm_trials, "Flux trials per state (ICM)");
  oracle_cmd->add_option("--steps", oracle.stationarity_steps, "Stationarity chain length");
  oracle_cmd->add_option("--seed", oracle.seed, "RNG seed");
  oracle_cmd->add_option("--mutate", oracle.mutate,
                         "Seed an acceptance-ratio bug: drop-w-ratio|drop-omega-ratio|wrong-reverse");
  oracle_cmd->add_option("--flux-table", oracle.out_path, "Write the flux table to this file");

  CLI11_PARSE(app, argc, argv);

  if (fit_cmd->parsed()) return agp::cli::cmd_fit(fit);
  if (pred_cmd->parsed()) return agp::cli::cmd_predict(pred);
  if (sim_cmd->parsed()) return agp::cli::cmd_simulate(sim);
  if (oracle_cmd->parsed()) return agp::cli::cmd_oracle_check(oracle);
  return agp::cli::kUsageError;
}
