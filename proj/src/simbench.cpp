#include "agp/simbench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include "agp/csv.hpp"
#include "json.hpp"

namespace agp {

Dataset make_dataset(Matrix X, Vector y, bool standardize_x) {
  if (X.rows() != y.size()) throw std::invalid_argument("make_dataset: X rows != y length");
  if (X.rows() < 2) throw std::invalid_argument("make_dataset: need at least 2 rows");
  Dataset d;
  d.X_raw = std::move(X);
  d.y_raw = std::move(y);
  const int n = static_cast<int>(d.X_raw.rows());
  const int p = static_cast<int>(d.X_raw.cols());

  d.y_center = d.y_raw.mean();
  const double ss = (d.y_raw.array() - d.y_center).square().sum() / (n - 1);
  if (!(ss > 0.0)) throw std::invalid_argument("make_dataset: constant response");
  d.y_scale = std::sqrt(ss);
  d.y_std = (d.y_raw.array() - d.y_center) / d.y_scale;

  d.x_center = Vector::Zero(p);
  d.x_scale = Vector::Ones(p);
  if (standardize_x) {
    for (int j = 0; j < p; ++j) {
      d.x_center(j) = d.X_raw.col(j).mean();
      const double v = (d.X_raw.col(j).array() - d.x_center(j)).square().sum() / (n - 1);
      d.x_scale(j) = v > 0.0 ? std::sqrt(v) : 1.0;  // constant columns carry no distance
    }
  }
  d.X_std = (d.X_raw.rowwise() - d.x_center.transpose()).array().rowwise() /
            d.x_scale.transpose().array();
  return d;
}

Matrix apply_x_standardization(const Matrix& X_new, const Dataset& train) {
  if (X_new.cols() != train.p())
    throw std::invalid_argument("apply_x_standardization: column count mismatch");
  return (X_new.rowwise() - train.x_center.transpose()).array().rowwise() /
         train.x_scale.transpose().array();
}

Vector destandardize_y(const Vector& values, const Dataset& train) {
  return (values.array() * train.y_scale + train.y_center).matrix();
}

std::optional<TestFn> parse_test_fn(const std::string& name) {
  if (name == "friedman") return TestFn::Friedman;
  if (name == "confounded") return TestFn::Confounded;
  if (name == "linear") return TestFn::Linear;
  if (name == "single") return TestFn::Single;
  return std::nullopt;
}

std::string test_fn_name(TestFn fn) {
  switch (fn) {
    case TestFn::Friedman:
      return "friedman";
    case TestFn::Confounded:
      return "confounded";
    case TestFn::Linear:
      return "linear";
    case TestFn::Single:
      return "single";
  }
  return "?";
}

int test_fn_min_p(TestFn fn) {
  switch (fn) {
    case TestFn::Friedman:
      return 7;
    case TestFn::Confounded:
      return 5;
    case TestFn::Linear:
      return 10;
    case TestFn::Single:
      return 2;
  }
  return 0;
}

std::vector<int> test_fn_support(TestFn fn) {
  std::vector<int> s(test_fn_min_p(fn));
  for (size_t j = 0; j < s.size(); ++j) s[j] = static_cast<int>(j);
  return s;
}

double test_fn_value(TestFn fn, const Eigen::RowVectorXd& x) {
  switch (fn) {
    case TestFn::Friedman:
      return 10.0 * std::sin(M_PI * x(0) * x(1)) + 10.0 * std::cos(M_PI * (x(2) * x(3) + x(4))) +
             20.0 * (x(5) - 0.5) * (x(5) - 0.5) + 10.0 * x(6);
    case TestFn::Confounded:
      return 10.0 * std::cos(M_PI * (x(0) + x(1) + x(2))) + 10.0 * std::sin(M_PI * (x(1) + x(3))) +
             10.0 * x(4) * (x(0) + x(1));
    case TestFn::Linear:
      return 5.0 * (x(0) + x(1) + x(2) + x(3) + x(4)) + 2.0 * (x(5) + x(6) + x(7) + x(8) + x(9));
    case TestFn::Single:
      return 10.0 * std::cos(M_PI * (x(0) + 5.0 * x(1)));
  }
  return 0.0;
}

SimData generate(TestFn fn, int n, int p, std::uint64_t seed, int n_test, bool standardize_x) {
  if (p < test_fn_min_p(fn))
    throw std::invalid_argument("generate: p too small for " + test_fn_name(fn) + ", need >= " +
                                std::to_string(test_fn_min_p(fn)));
  if (n < 2 || n_test < 1) throw std::invalid_argument("generate: bad sample sizes");
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  auto draw_block = [&](int rows, Matrix& X, Vector& f, Vector& y) {
    X.resize(rows, p);
    f.resize(rows);
    y.resize(rows);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < p; ++j) X(i, j) = unif(rng);
      f(i) = test_fn_value(fn, X.row(i));
      y(i) = f(i) + normal_draw(0.0, 1.0, rng);
    }
  };

  SimData out;
  Matrix X_train;
  Vector y_train;
  draw_block(n, X_train, out.f_train, y_train);
  draw_block(n_test, out.X_test_raw, out.f_test, out.y_test);
  out.train = make_dataset(std::move(X_train), std::move(y_train), standardize_x);
  out.X_test_std = apply_x_standardization(out.X_test_raw, out.train);
  return out;
}

double rmse(const Vector& pred, const Vector& target) {
  if (pred.size() != target.size()) throw std::invalid_argument("rmse: length mismatch");
  if (pred.size() == 0) throw std::invalid_argument("rmse: empty vectors");
  return std::sqrt((pred - target).squaredNorm() / pred.size());
}

namespace {

ReplicateResult run_replicate(const ExperimentConfig& config, int rep) {
  ReplicateResult res;
  try {
    const std::uint64_t seed = config.seed + 7919ull * static_cast<std::uint64_t>(rep);
    SimData sim = generate(config.fn, config.n, config.p, seed, config.n_test,
                           config.standardize_x);
    AgpModel model = make_default_model(sim.train.X_std, sim.train.y_std, config.d_star);

    SamplerConfig scfg = config.sampler;
    scfg.seed = seed + 1;
    const std::vector<ChainRecord> chain = run_chain(model, scfg);
    const std::vector<ChainRecord> kept = retain(chain, scfg.burn_in, scfg.thin);

    Rng pred_rng(seed + 2);
    const Predictions pred = predict(kept, sim.X_test_std, model, pred_rng);
    const Vector mean_raw = destandardize_y(pred.mean, sim.train);

    res.rmse_test = rmse(mean_raw, sim.y_test);
    res.rmse_truth = rmse(mean_raw, sim.f_test);
    const Vector null_pred = Vector::Constant(sim.y_test.size(), sim.train.y_raw.mean());
    res.rmse_null = rmse(null_pred, sim.y_test);
    res.summary = summarize(kept, config.p);
    res.inclusion = res.summary.marginal_inclusion;
    res.graph = interaction_graph(kept, config.p, std::min(config.q, config.p));

    double s2 = 0.0;
    for (double v : res.summary.sigma2_trace) s2 += v;
    // sigma^2 is drawn on the standardized response scale
    res.sigma2_mean = s2 / res.summary.sigma2_trace.size() * sim.train.y_scale *
                      sim.train.y_scale;

    if (config.icm_ablation) {
      SamplerConfig no_icm = scfg;
      no_icm.icm_prob = 0.0;
      const std::vector<ChainRecord> chain2 = run_chain(model, no_icm);
      Rng rng2(seed + 3);
      const Predictions pred2 =
          predict(retain(chain2, no_icm.burn_in, no_icm.thin), sim.X_test_std, model, rng2);
      res.rmse_test_no_icm = rmse(destandardize_y(pred2.mean, sim.train), sim.y_test);
    }
  } catch (const std::exception& e) {
    res.failed = true;
    res.error = e.what();
  }
  return res;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  if (config.replicates < 1) throw std::invalid_argument("run_experiment: replicates must be >= 1");
  ExperimentReport report;
  report.config = config;
  report.replicates.resize(config.replicates);

  const int jobs = std::max(1, std::min(config.jobs, config.replicates));
  if (jobs == 1) {
    for (int r = 0; r < config.replicates; ++r) report.replicates[r] = run_replicate(config, r);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < jobs; ++w)
      pool.emplace_back([&]() {
        for (int r = next.fetch_add(1); r < config.replicates; r = next.fetch_add(1))
          report.replicates[r] = run_replicate(config, r);
      });
    for (auto& th : pool) th.join();
  }

  const std::vector<int> support = test_fn_support(config.fn);
  double sum = 0.0, sum_sq = 0.0, sum_truth = 0.0, sum_s2 = 0.0, sum_recall = 0.0, sum_fp = 0.0,
         sum_no_icm = 0.0;
  int ok = 0, ok_no_icm = 0;
  for (const auto& rep : report.replicates) {
    if (rep.failed) {
      report.n_failed++;
      continue;
    }
    ++ok;
    sum += rep.rmse_test;
    sum_sq += rep.rmse_test * rep.rmse_test;
    sum_truth += rep.rmse_truth;
    sum_s2 += rep.sigma2_mean;
    int hits = 0, fps = 0;
    for (int j = 0; j < config.p; ++j) {
      const bool truth = std::find(support.begin(), support.end(), j) != support.end();
      const bool picked = rep.inclusion(j) > 0.5;
      if (truth && picked) ++hits;
      if (!truth && picked) ++fps;
    }
    sum_recall += static_cast<double>(hits) / support.size();
    sum_fp += fps;
    if (rep.rmse_test_no_icm >= 0.0) {
      sum_no_icm += rep.rmse_test_no_icm;
      ++ok_no_icm;
    }
  }
  if (ok > 0) {
    report.mean_rmse = sum / ok;
    report.mean_rmse_truth = sum_truth / ok;
    report.mean_sigma2 = sum_s2 / ok;
    report.support_recall = sum_recall / ok;
    report.mean_false_positives = sum_fp / ok;
    if (ok > 1) {
      const double var = (sum_sq - sum * sum / ok) / (ok - 1);
      report.se_rmse = std::sqrt(std::max(0.0, var) / ok);
    }
    if (ok_no_icm > 0) report.mean_rmse_no_icm = sum_no_icm / ok_no_icm;
  }
  return report;
}

void write_report(const ExperimentReport& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  std::vector<std::vector<double>> summary_rows;
  for (size_t r = 0; r < report.replicates.size(); ++r) {
    const auto& rep = report.replicates[r];
    if (rep.failed) continue;
    summary_rows.push_back({static_cast<double>(r), rep.rmse_test, rep.rmse_truth, rep.rmse_null,
                            rep.sigma2_mean});
  }
  write_csv(out_dir + "/summary.csv",
            {"replicate", "rmse_test", "rmse_truth", "rmse_null", "sigma2_mean"}, summary_rows);

  nlohmann::json j;
  j["function"] = test_fn_name(report.config.fn);
  j["n"] = report.config.n;
  j["p"] = report.config.p;
  j["replicates"] = report.config.replicates;
  j["failed"] = report.n_failed;
  j["mean_rmse"] = report.mean_rmse;
  j["se_rmse"] = report.se_rmse;
  j["mean_rmse_truth"] = report.mean_rmse_truth;
  j["mean_sigma2"] = report.mean_sigma2;
  j["support_recall"] = report.support_recall;
  j["mean_false_positives"] = report.mean_false_positives;
  if (report.mean_rmse_no_icm >= 0.0) j["mean_rmse_no_icm"] = report.mean_rmse_no_icm;
  nlohmann::json reps = nlohmann::json::array();
  for (const auto& rep : report.replicates) {
    nlohmann::json rj;
    rj["failed"] = rep.failed;
    if (rep.failed) {
      rj["error"] = rep.error;
    } else {
      rj["rmse_test"] = rep.rmse_test;
      rj["rmse_truth"] = rep.rmse_truth;
      rj["sigma2_mean"] = rep.sigma2_mean;
      if (rep.rmse_test_no_icm >= 0.0) rj["rmse_test_no_icm"] = rep.rmse_test_no_icm;
    }
    reps.push_back(rj);
  }
  j["per_replicate"] = reps;
  std::ofstream(out_dir + "/report.json") << j.dump(2) << "\n";

  // Averaged marginal inclusion, 1-based predictor indices.
  if (!report.replicates.empty()) {
    Vector incl = Vector::Zero(report.config.p);
    int ok = 0;
    for (const auto& rep : report.replicates)
      if (!rep.failed) {
        incl += rep.inclusion;
        ++ok;
      }
    if (ok > 0) incl /= ok;
    std::vector<std::vector<double>> rows;
    for (int jx = 0; jx < report.config.p; ++jx)
      rows.push_back({static_cast<double>(jx + 1), incl(jx)});
    write_csv(out_dir + "/inclusion.csv", {"predictor", "probability"}, rows);

    std::vector<std::vector<double>> edge_rows;
    std::vector<std::vector<double>> hist_rows;
    for (const auto& rep : report.replicates) {
      if (rep.failed) continue;
      for (const auto& e : rep.graph.edges)
        edge_rows.push_back({static_cast<double>(e.j + 1), static_cast<double>(e.k + 1), e.weight});
      for (const auto& [count, freq] : rep.summary.active_count_hist)
        hist_rows.push_back({0.0, static_cast<double>(count), static_cast<double>(freq)});
      for (const auto& [count, freq] : rep.summary.nonempty_count_hist)
        hist_rows.push_back({1.0, static_cast<double>(count), static_cast<double>(freq)});
      break;  // first successful replicate is representative for plots
    }
    write_csv(out_dir + "/edges.csv", {"predictor_j", "predictor_k", "weight"}, edge_rows);
    write_csv(out_dir + "/component_hist.csv", {"is_nonempty_hist", "count", "frequency"},
              hist_rows);
  }
}

}  // namespace agp
