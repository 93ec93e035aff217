#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include "agp/csv.hpp"
#include "agp/oracle.hpp"
#include "agp/simbench.hpp"
#include "json.hpp"

namespace agp::cli {

namespace fs = std::filesystem;

namespace {

struct LoadedData {
  Dataset dataset;
  std::vector<std::string> predictor_names;
  std::string response_name;
};

LoadedData load_training_csv(const std::string& path, const std::string& response_column,
                             bool standardize_x) {
  const CsvTable table = read_csv(path);
  if (table.n_rows() < 2) throw std::runtime_error("need at least 2 data rows in " + path);
  if (table.n_cols() < 2) throw std::runtime_error("need at least 2 columns in " + path);

  int y_col = table.n_cols() - 1;
  if (!response_column.empty()) {
    y_col = table.column_index(response_column);
    if (y_col < 0)
      throw std::runtime_error("response column '" + response_column + "' not found in " + path);
  }

  LoadedData out;
  out.response_name = table.columns[y_col];
  const int n = table.n_rows();
  const int p = table.n_cols() - 1;
  Matrix X(n, p);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    int c = 0;
    for (int j = 0; j < table.n_cols(); ++j) {
      if (j == y_col) {
        y(i) = table.rows[i][j];
      } else {
        X(i, c++) = table.rows[i][j];
      }
    }
  }
  for (int j = 0; j < table.n_cols(); ++j)
    if (j != y_col) out.predictor_names.push_back(table.columns[j]);
  out.dataset = make_dataset(std::move(X), std::move(y), standardize_x);
  return out;
}

void write_config_echo(const std::string& path, const FitOptions& opt) {
  std::ofstream out(path);
  out << "data=" << opt.data_path << "\n";
  if (!opt.response_column.empty()) out << "response=" << opt.response_column << "\n";
  out << "out=" << opt.out_dir << "\n";
  out << "d-star=" << opt.d_star << "\n";
  out << "a=" << opt.a << "\n";
  out << "b=" << opt.b << "\n";
  out << "grid-alpha=" << opt.grid_alpha << "\n";
  out << "grid-beta=" << opt.grid_beta << "\n";
  out << "delta=" << opt.delta << "\n";
  out << "alpha-incl=" << opt.alpha_incl << "\n";
  out << "iters=" << opt.iterations << "\n";
  out << "burn-in=" << opt.burn_in << "\n";
  out << "thin=" << opt.thin << "\n";
  out << "budget=" << opt.budget << "\n";
  out << "q=" << opt.q << "\n";
  out << "seed=" << opt.seed << "\n";
  out << "standardize-x=" << (opt.standardize_x ? "true" : "false") << "\n";
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t c = 0; c < rows[i].size(); ++c) m(i, c) = rows[i][c];
  return m;
}

nlohmann::json vector_to_json(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Vector vector_from_json(const nlohmann::json& j) {
  const auto vals = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(vals.data(), vals.size());
}

}  // namespace

int cmd_fit(const FitOptions& opt) {
  LoadedData data;
  try {
    data = load_training_csv(opt.data_path, opt.response_column, opt.standardize_x);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  }

  try {
    AgpModel model = make_default_model(data.dataset.X_std, data.dataset.y_std, opt.d_star);
    model.noise = MarginalScale{opt.a, opt.b};
    if (opt.grid_alpha != 0.0 || opt.grid_beta != 0.0)
      model.grids = make_grids(model.grids.rho_values, model.grids.lambda_values, opt.grid_alpha,
                               opt.grid_beta);

    SamplerConfig cfg;
    cfg.iterations = opt.iterations;
    cfg.burn_in = opt.burn_in;
    cfg.thin = opt.thin;
    cfg.seed = opt.seed;
    cfg.icm_prob = opt.delta;
    cfg.alpha_incl = opt.alpha_incl;
    cfg.budget = opt.budget;

    const std::vector<ChainRecord> chain = run_chain(model, cfg);
    const std::vector<ChainRecord> kept = retain(chain, cfg.burn_in, cfg.thin);

    fs::create_directories(opt.out_dir);
    {
      std::ofstream os(opt.out_dir + "/chain.jsonl");
      write_chain(os, chain);
    }
    {
      nlohmann::json j;
      j["X_std"] = matrix_to_json(model.X);
      j["y_std"] = vector_to_json(model.y);
      j["x_center"] = vector_to_json(data.dataset.x_center);
      j["x_scale"] = vector_to_json(data.dataset.x_scale);
      j["y_center"] = data.dataset.y_center;
      j["y_scale"] = data.dataset.y_scale;
      j["d_star"] = opt.d_star;
      j["a"] = opt.a;
      j["b"] = opt.b;
      j["grid_alpha"] = opt.grid_alpha;
      j["grid_beta"] = opt.grid_beta;
      j["burn_in"] = opt.burn_in;
      j["thin"] = opt.thin;
      j["seed"] = opt.seed;
      j["predictors"] = data.predictor_names;
      j["response"] = data.response_name;
      std::ofstream(opt.out_dir + "/model.json") << j.dump() << "\n";
    }

    const PosteriorSummary summary = summarize(kept, model.p());
    std::vector<std::vector<double>> incl_rows;
    for (int j = 0; j < model.p(); ++j)
      incl_rows.push_back({static_cast<double>(j + 1), summary.marginal_inclusion(j)});
    write_csv(opt.out_dir + "/inclusion.csv", {"predictor", "probability"}, incl_rows);

    const InteractionGraph graph = interaction_graph(kept, model.p(), std::min(opt.q, model.p()));
    std::vector<std::vector<double>> edge_rows;
    for (const auto& e : graph.edges)
      edge_rows.push_back({static_cast<double>(e.j + 1), static_cast<double>(e.k + 1), e.weight});
    write_csv(opt.out_dir + "/edges.csv", {"predictor_j", "predictor_k", "weight"}, edge_rows);

    std::vector<std::vector<double>> s2_rows;
    for (size_t i = 0; i < kept.size(); ++i)
      s2_rows.push_back({static_cast<double>(kept[i].iteration), summary.sigma2_trace[i]});
    write_csv(opt.out_dir + "/sigma2_trace.csv", {"iteration", "sigma2"}, s2_rows);

    std::vector<std::vector<double>> hist_rows;
    for (const auto& [count, freq] : summary.active_count_hist)
      hist_rows.push_back({0.0, static_cast<double>(count), static_cast<double>(freq)});
    for (const auto& [count, freq] : summary.nonempty_count_hist)
      hist_rows.push_back({1.0, static_cast<double>(count), static_cast<double>(freq)});
    write_csv(opt.out_dir + "/component_hist.csv", {"is_nonempty_hist", "count", "frequency"},
              hist_rows);

    write_config_echo(opt.out_dir + "/config_echo.cfg", opt);
    std::cout << "fit: wrote " << chain.size() << " records to " << opt.out_dir << "\n";
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumericalError;
  }
}

int cmd_predict(const PredictOptions& opt) {
  nlohmann::json mj;
  CsvTable table;
  try {
    std::ifstream ms(opt.model_dir + "/model.json");
    if (!ms) throw std::runtime_error("cannot open " + opt.model_dir + "/model.json");
    ms >> mj;
    table = read_csv(opt.data_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  }

  try {
    Dataset train;
    train.X_std = matrix_from_json(mj.at("X_std"));
    train.y_std = vector_from_json(mj.at("y_std"));
    train.x_center = vector_from_json(mj.at("x_center"));
    train.x_scale = vector_from_json(mj.at("x_scale"));
    train.y_center = mj.at("y_center").get<double>();
    train.y_scale = mj.at("y_scale").get<double>();
    train.X_raw = train.X_std;
    train.y_raw = train.y_std;

    const int p = static_cast<int>(train.X_std.cols());
    const auto names = mj.at("predictors").get<std::vector<std::string>>();
    const std::string response = mj.at("response").get<std::string>();

    // New data may or may not carry the response column; match by names.
    const int m = table.n_rows();
    Matrix X_new(m, p);
    int c = 0;
    for (int j = 0; j < table.n_cols(); ++j) {
      if (table.columns[j] == response) continue;
      if (c >= p) {
        c = p + 1;
        break;
      }
      for (int i = 0; i < m; ++i) X_new(i, c) = table.rows[i][j];
      ++c;
    }
    if (c != p) {
      std::cerr << "error: expected " << p << " predictor columns, found " << c << "\n";
      return kUsageError;
    }

    AgpModel model = make_default_model(train.X_std, train.y_std, mj.at("d_star").get<double>());
    model.noise = MarginalScale{mj.at("a").get<double>(), mj.at("b").get<double>()};
    const double ga = mj.at("grid_alpha").get<double>();
    const double gb = mj.at("grid_beta").get<double>();
    if (ga != 0.0 || gb != 0.0)
      model.grids = make_grids(model.grids.rho_values, model.grids.lambda_values, ga, gb);

    std::ifstream cs(opt.model_dir + "/chain.jsonl");
    if (!cs) throw std::runtime_error("cannot open " + opt.model_dir + "/chain.jsonl");
    const std::vector<ChainRecord> chain = read_chain(cs);
    const std::vector<ChainRecord> kept =
        retain(chain, mj.at("burn_in").get<long>(), mj.at("thin").get<int>());

    Rng rng(mj.at("seed").get<unsigned long long>() + 1000003ull);
    const Predictions pred = predict(kept, apply_x_standardization(X_new, train), model, rng);

    std::vector<std::vector<double>> rows;
    const Vector mean = destandardize_y(pred.mean, train);
    const Vector lo = destandardize_y(pred.lo, train);
    const Vector hi = destandardize_y(pred.hi, train);
    for (int i = 0; i < m; ++i) rows.push_back({mean(i), lo(i), hi(i)});
    write_csv(opt.out_path, {"mean", "lo2.5", "hi97.5"}, rows);
    std::cout << "predict: wrote " << m << " rows to " << opt.out_path << "\n";
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumericalError;
  }
}

int cmd_simulate(const SimulateOptions& opt) {
  const std::optional<TestFn> fn = parse_test_fn(opt.function);
  if (!fn) {
    std::cerr << "error: unknown test function '" << opt.function
              << "'; choose one of: friedman, confounded, linear, single\n";
    return kUsageError;
  }
  try {
    ExperimentConfig config;
    config.fn = *fn;
    config.n = opt.n;
    config.p = opt.p;
    config.replicates = opt.replicates;
    config.seed = opt.seed;
    config.jobs = opt.jobs;
    config.icm_ablation = opt.icm_ablation;
    config.standardize_x = opt.standardize_x;
    config.sampler.iterations = opt.iterations;
    config.sampler.burn_in = opt.burn_in;
    config.sampler.thin = opt.thin;

    const ExperimentReport report = run_experiment(config);
    write_report(report, opt.out_dir);
    std::cout << "simulate " << test_fn_name(*fn) << ": mean RMSE " << report.mean_rmse << " (se "
              << report.se_rmse << "), truth RMSE " << report.mean_rmse_truth << ", sigma2 "
              << report.mean_sigma2 << ", recall " << report.support_recall << ", fp "
              << report.mean_false_positives << "\n";
    if (report.mean_rmse_no_icm >= 0.0)
      std::cout << "  ablation (no ICM): mean RMSE " << report.mean_rmse_no_icm << "\n";
    if (report.n_failed > 0) std::cout << "  failed replicates: " << report.n_failed << "\n";
    return report.n_failed == report.config.replicates ? kNumericalError : kOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumericalError;
  }
}

int cmd_oracle_check(const OracleCheckOptions& opt) {
  if (opt.p > 8 || opt.k > 2 || opt.p < 2 || opt.k < 1) {
    std::cerr << "error: oracle enumeration supports 2 <= p <= 8 and k in {1, 2}\n";
    return kUsageError;
  }
  const std::optional<Mutation> mut = parse_mutation(opt.mutate);
  if (!mut) {
    std::cerr << "error: unknown mutation '" << opt.mutate
              << "'; choose drop-w-ratio, drop-omega-ratio, or wrong-reverse\n";
    return kUsageError;
  }

  try {
    Rng data_rng(opt.seed);
    Matrix X(opt.n, opt.p);
    Vector y(opt.n);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < opt.n; ++i) {
      for (int j = 0; j < opt.p; ++j) X(i, j) = unif(data_rng);
      y(i) = std::sin(3.0 * X(i, 0)) + 0.5 * X(i, 1) + 0.3 * normal_draw(0.0, 1.0, data_rng);
    }
    Dataset data = make_dataset(std::move(X), std::move(y));

    AgpModel model = make_default_model(data.X_std, data.y_std);
    model.grids = make_grids({0.0, 1.0}, {1.0025156841465656, 2.4477314226436856});
    const double tau = 0.25;

    SamplerConfig cfg;
    cfg.mutation = *mut;
    cfg.fixed_tau = tau;
    cfg.adapt_importance = false;
    cfg.enable_score_cache = true;

    ScoreCache cache;
    Rng rng(opt.seed + 1);
    Vector v = Vector::Ones(opt.p);
    for (int j = 0; j < opt.p; ++j) v(j) = 1.0 + j;

    bool all_pass = true;
    std::ofstream table_out;
    if (!opt.out_path.empty()) table_out.open(opt.out_path);

    auto run_spec = [&](FluxTestSpec spec, long trials) {
      const FluxReport rep = check_detailed_balance(spec, trials, rng);
      std::cout << "  " << rep.name << ": pairs " << rep.n_pairs << ", max z " << rep.max_z
                << ", flagged " << rep.flagged_adjusted << " (threshold "
                << rep.adjusted_threshold << ") -> " << (rep.pass() ? "PASS" : "FAIL") << "\n";
      if (table_out.is_open()) write_flux_report(table_out, rep);
      all_pass = all_pass && rep.pass();
    };

    std::cout << "detailed balance (p=" << opt.p << ", n=" << opt.n << "):\n";
    const int M = 10;
    run_spec(make_dmtm_flux_spec(model, cfg, MoveKind::Add, tau, M, v, &cache), opt.dmtm_trials);
    run_spec(make_dmtm_flux_spec(model, cfg, MoveKind::Remove, tau, M, v, &cache),
             opt.dmtm_trials);
    run_spec(make_dmtm_flux_spec(model, cfg, MoveKind::Swap, tau, M, v, &cache), opt.dmtm_trials);
    if (opt.k >= 2) {
      run_spec(make_cross_donate_flux_spec(model, cfg, tau, 1, 2, &cache), opt.icm_trials);
      run_spec(make_pair_move_flux_spec(model, cfg, MoveKind::PairedDonate, tau, &cache),
               opt.icm_trials);
      run_spec(make_pair_move_flux_spec(model, cfg, MoveKind::PairedSwap, tau, &cache),
               opt.icm_trials);
    }

    // Stationarity of the composed sampler against exact enumeration.
    if (*mut == Mutation::None) {
      SamplerConfig chain_cfg = cfg;
      chain_cfg.iterations = opt.stationarity_steps;
      chain_cfg.seed = opt.seed + 2;
      chain_cfg.icm_prob = opt.k >= 2 ? 0.5 : 0.0;
      chain_cfg.k_min_override = opt.k;
      chain_cfg.k_max_override = opt.k;
      const std::vector<ChainRecord> chain = run_chain(model, chain_cfg);
      const ExactPosterior exact = exact_posterior(model, opt.k, tau, &cache);
      const double tv = check_stationarity(chain, exact, model.grids);
      const double bound = opt.k >= 2 ? 0.03 : 0.02;
      std::cout << "stationarity TV: " << tv << " (bound " << bound << ") -> "
                << (tv < bound ? "PASS" : "FAIL") << "\n";
      all_pass = all_pass && tv < bound;
    }

    std::cout << (all_pass ? "oracle-check: PASS" : "oracle-check: FAIL") << "\n";
    return all_pass ? kOk : kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumericalError;
  }
}

}  // namespace agp::cli
