#include "ssgp/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "ssgp/adaptive.hpp"
#include "ssgp/basis_select.hpp"
#include "ssgp/csv.hpp"
#include "ssgp/errors.hpp"
#include "ssgp/neighborhood.hpp"
#include "ssgp/predict.hpp"

namespace ssgp {

namespace {

using nlohmann::json;

template <typename T>
void maybe_get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

struct RawTable {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> feature_names;
  int dropped_rows = 0;
};

RawTable extract_xy(const CsvTable& table, const std::string& target) {
  const int tcol = table.find_column(target);
  if (tcol < 0) throw DataError("target column '" + target + "' not found");
  RawTable out;
  for (size_t j = 0; j < table.header.size(); ++j)
    if (static_cast<int>(j) != tcol)
      out.feature_names.push_back(table.header[j]);

  std::vector<std::vector<double>> kept;
  std::vector<double> ys;
  for (const auto& row : table.rows) {
    bool complete = true;
    for (const auto& cell : row)
      if (!cell.has_value()) {
        complete = false;
        break;
      }
    if (!complete) {
      ++out.dropped_rows;
      continue;
    }
    std::vector<double> feats;
    feats.reserve(row.size() - 1);
    for (size_t j = 0; j < row.size(); ++j)
      if (static_cast<int>(j) != tcol) feats.push_back(*row[j]);
    kept.push_back(std::move(feats));
    ys.push_back(*row[tcol]);
  }
  if (kept.empty()) throw DataError("no complete rows in CSV");
  out.X.resize(static_cast<int>(kept.size()),
               static_cast<int>(kept.front().size()));
  out.y.resize(static_cast<int>(ys.size()));
  for (size_t i = 0; i < kept.size(); ++i) {
    for (size_t j = 0; j < kept[i].size(); ++j)
      out.X(static_cast<int>(i), static_cast<int>(j)) = kept[i][j];
    out.y(static_cast<int>(i)) = ys[i];
  }
  return out;
}

Priors priors_from(const RunConfig& cfg, int dim) {
  return isotropic_priors(dim, cfg.mu_lambda0, cfg.sigma_lambda0_scale,
                          cfg.a_sigma, cfg.a_gamma);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

}  // namespace

RunConfig config_from_json(const json& j) {
  RunConfig c;
  maybe_get(j, "mode", c.mode);
  maybe_get(j, "m", c.m);
  maybe_get(j, "k", c.k);
  maybe_get(j, "threads", c.threads);
  maybe_get(j, "reuse_stage1_basis", c.reuse_stage1_basis);
  maybe_get(j, "output_dir", c.output_dir);
  if (j.contains("priors")) {
    const auto& p = j.at("priors");
    maybe_get(p, "a_sigma", c.a_sigma);
    maybe_get(p, "a_gamma", c.a_gamma);
    maybe_get(p, "mu_lambda0", c.mu_lambda0);
    maybe_get(p, "sigma_lambda0_scale", c.sigma_lambda0_scale);
  }
  if (j.contains("fit")) {
    const auto& f = j.at("fit");
    maybe_get(f, "tol", c.fit.tol);
    maybe_get(f, "max_iter", c.fit.max_iter);
    maybe_get(f, "rho", c.fit.rho);
    maybe_get(f, "restarts", c.fit.restarts);
    maybe_get(f, "restart_iters", c.fit.restart_iters);
    maybe_get(f, "local_restarts", c.fit.local_restarts);
    maybe_get(f, "seed", c.fit.seed);
    maybe_get(f, "guard_max_halvings", c.fit.guard_max_halvings);
  }
  if (j.contains("data")) {
    const auto& d = j.at("data");
    maybe_get(d, "train_csv", c.train_csv);
    maybe_get(d, "test_csv", c.test_csv);
    maybe_get(d, "target", c.target);
    maybe_get(d, "test_fraction", c.test_fraction);
    c.split_seed = c.fit.seed;
    maybe_get(d, "split_seed", c.split_seed);
  }
  return c;
}

json config_to_json(const RunConfig& c) {
  return json{
      {"mode", c.mode},
      {"m", c.m},
      {"k", c.k},
      {"threads", c.threads},
      {"reuse_stage1_basis", c.reuse_stage1_basis},
      {"output_dir", c.output_dir},
      {"priors",
       {{"a_sigma", c.a_sigma},
        {"a_gamma", c.a_gamma},
        {"mu_lambda0", c.mu_lambda0},
        {"sigma_lambda0_scale", c.sigma_lambda0_scale}}},
      {"fit",
       {{"tol", c.fit.tol},
        {"max_iter", c.fit.max_iter},
        {"rho", c.fit.rho},
        {"restarts", c.fit.restarts},
        {"restart_iters", c.fit.restart_iters},
        {"local_restarts", c.fit.local_restarts},
        {"seed", c.fit.seed},
        {"guard_max_halvings", c.fit.guard_max_halvings}}},
      {"data",
       {{"train_csv", c.train_csv},
        {"test_csv", c.test_csv},
        {"target", c.target},
        {"test_fraction", c.test_fraction},
        {"split_seed", c.split_seed}}}};
}

IngestResult ingest(const std::string& csv_path, const std::string& target) {
  const CsvTable table = read_csv(csv_path);
  RawTable raw = extract_xy(table, target);
  IngestResult out;
  out.feature_names = std::move(raw.feature_names);
  out.dropped_rows = raw.dropped_rows;
  out.dataset = make_dataset(raw.X, raw.y, &out.degenerate_columns);
  return out;
}

namespace {

struct PreparedData {
  IngestResult train;
  Eigen::MatrixXd x_test_raw;
  Eigen::VectorXd y_test;
  bool has_test = false;
};

PreparedData prepare_data(const RunConfig& cfg) {
  if (cfg.train_csv.empty()) throw ConfigError("data.train_csv is required");
  PreparedData out;

  if (!cfg.test_csv.empty()) {
    out.train = ingest(cfg.train_csv, cfg.target);
    const CsvTable test_table = read_csv(cfg.test_csv);
    RawTable raw = extract_xy(test_table, cfg.target);
    if (raw.feature_names != out.train.feature_names)
      throw DataError("test CSV columns do not match training CSV");
    out.x_test_raw = std::move(raw.X);
    out.y_test = std::move(raw.y);
    out.has_test = true;
    return out;
  }

  if (cfg.test_fraction > 0.0) {
    if (cfg.test_fraction >= 1.0)
      throw ConfigError("data.test_fraction must be in (0, 1)");
    const CsvTable table = read_csv(cfg.train_csv);
    RawTable raw = extract_xy(table, cfg.target);
    const int n = static_cast<int>(raw.X.rows());
    const int n_test = std::max(1, static_cast<int>(
                                       std::lround(cfg.test_fraction * n)));
    if (n_test >= n)
      throw ConfigError("test fraction leaves no training rows");
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(cfg.split_seed);
    std::shuffle(idx.begin(), idx.end(), rng);

    Eigen::MatrixXd x_train(n - n_test, raw.X.cols());
    Eigen::VectorXd y_train(n - n_test);
    out.x_test_raw.resize(n_test, raw.X.cols());
    out.y_test.resize(n_test);
    for (int i = 0; i < n_test; ++i) {
      out.x_test_raw.row(i) = raw.X.row(idx[i]);
      out.y_test(i) = raw.y(idx[i]);
    }
    for (int i = n_test; i < n; ++i) {
      x_train.row(i - n_test) = raw.X.row(idx[i]);
      y_train(i - n_test) = raw.y(idx[i]);
    }
    out.train.feature_names = std::move(raw.feature_names);
    out.train.dropped_rows = raw.dropped_rows;
    out.train.dataset =
        make_dataset(x_train, y_train, &out.train.degenerate_columns);
    out.has_test = true;
    return out;
  }

  out.train = ingest(cfg.train_csv, cfg.target);
  return out;
}

void write_global_outputs(const RunConfig& cfg, const PreparedData& data,
                          const FitResult& fit,
                          const std::vector<Prediction>& preds,
                          double wall_seconds) {
  namespace fs = std::filesystem;
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);

  std::string trace = "iteration,lower_bound,step_size,accepted\n";
  {
    // join the two traces on the iteration index
    std::vector<double> step(fit.lb_trace.size(), 1.0);
    std::vector<int> acc(fit.lb_trace.size(), 1);
    for (const auto& s : fit.step_trace) {
      if (s.iteration >= 0 &&
          s.iteration < static_cast<int>(step.size())) {
        step[s.iteration] = s.step_size;
        acc[s.iteration] = s.accepted ? 1 : 0;
      }
    }
    for (size_t i = 0; i < fit.lb_trace.size(); ++i) {
      trace += std::to_string(fit.lb_trace[i].iteration) + "," +
               format_double(fit.lb_trace[i].lower_bound) + "," +
               format_double(step[i]) + "," + std::to_string(acc[i]) + "\n";
    }
  }
  write_text(dir / "trace.csv", trace);

  json metrics{{"n_train", data.train.dataset.n()},
               {"n_test", data.has_test ? int(preds.size()) : 0},
               {"dropped_rows", data.train.dropped_rows},
               {"y_train_mean", data.train.dataset.y_mean},
               {"lower_bound", fit.final_lower_bound},
               {"iterations", fit.iterations},
               {"converged", fit.converged},
               {"wall_clock_seconds", wall_seconds}};
  if (data.has_test && !preds.empty()) {
    metrics["nmse"] = nmse(preds, data.y_test, data.train.dataset.y_mean);
    metrics["mnlp"] = mnlp(preds, data.y_test);
  }
  write_text(dir / "metrics.json", metrics.dump(2) + "\n");

  if (data.has_test) {
    std::string pred_csv = "id,mean,variance\n";
    for (size_t i = 0; i < preds.size(); ++i)
      pred_csv += std::to_string(i) + "," + format_double(preds[i].mean) +
                  "," + format_double(preds[i].variance) + "\n";
    write_text(dir / "predictions.csv", pred_csv);
  }
  write_text(dir / "effective_config.json", config_to_json(cfg).dump(2) + "\n");
}

int run_global(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  PreparedData data = prepare_data(cfg);
  const Dataset& train = data.train.dataset;
  const Priors priors = priors_from(cfg, train.dim());

  SelectedBasis sel = select_basis(train, priors, cfg.fit, cfg.m,
                                   cfg.fit.seed, cfg.fit.restarts);
  FitResult fit =
      fit_adaptive(train, sel.basis, priors, cfg.fit, sel.warm_state);

  std::vector<Prediction> preds;
  if (data.has_test) {
    preds.reserve(data.x_test_raw.rows());
    for (int i = 0; i < data.x_test_raw.rows(); ++i)
      preds.push_back(predictive(fit.state, sel.basis, train, priors,
                                 data.x_test_raw.row(i).transpose()));
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  write_global_outputs(cfg, data, fit, preds, wall);
  return 0;
}

int run_local(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  PreparedData data = prepare_data(cfg);
  const Dataset& train = data.train.dataset;
  if (!data.has_test)
    throw ConfigError("local mode needs a test file or test fraction");
  if (cfg.k > train.n())
    throw ConfigError("k (" + std::to_string(cfg.k) +
                      ") exceeds the number of training rows (" +
                      std::to_string(train.n()) + ")");
  const Priors priors = priors_from(cfg, train.dim());

  LocalOptions opts;
  opts.k = cfg.k;
  opts.m = cfg.m;
  opts.restarts = cfg.fit.local_restarts;
  opts.reuse_stage1_basis = cfg.reuse_stage1_basis;
  const BatchLocalResult batch = batch_local_predict(
      train, data.x_test_raw, opts, priors, cfg.fit, cfg.threads);

  namespace fs = std::filesystem;
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);

  std::string pred_csv = "id,mean,variance\n";
  std::string trace =
      "query,ok,iterations_stage1,iterations_stage2,lower_bound_stage1,"
      "lower_bound_stage2,euclidean_fallback\n";
  std::vector<Prediction> preds, preds1;
  Eigen::VectorXd y_ok(data.y_test.size());
  int n_ok = 0;
  for (size_t qi = 0; qi < batch.queries.size(); ++qi) {
    const auto& q = batch.queries[qi];
    trace += std::to_string(qi) + "," + std::to_string(q.ok ? 1 : 0) + "," +
             std::to_string(q.iterations1) + "," +
             std::to_string(q.iterations2) + "," + format_double(q.lb1) +
             "," + format_double(q.lb2) + "," +
             std::to_string(q.euclidean_fallback ? 1 : 0) + "\n";
    if (!q.ok) continue;
    pred_csv += std::to_string(qi) + "," + format_double(q.prediction.mean) +
                "," + format_double(q.prediction.variance) + "\n";
    preds.push_back(q.prediction);
    preds1.push_back(q.stage1_prediction);
    y_ok(n_ok++) = data.y_test(static_cast<int>(qi));
  }
  y_ok.conservativeResize(n_ok);

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  json metrics{{"n_train", train.n()},
               {"n_test", static_cast<int>(batch.queries.size())},
               {"n_failed", batch.failures},
               {"dropped_rows", data.train.dropped_rows},
               {"y_train_mean", train.y_mean},
               {"wall_clock_seconds", wall}};
  if (n_ok > 0) {
    metrics["nmse"] = nmse(preds, y_ok, train.y_mean);
    metrics["mnlp"] = mnlp(preds, y_ok);
    metrics["nmse_stage1"] = nmse(preds1, y_ok, train.y_mean);
    metrics["mnlp_stage1"] = mnlp(preds1, y_ok);
  }
  write_text(dir / "predictions.csv", pred_csv);
  write_text(dir / "trace.csv", trace);
  write_text(dir / "metrics.json", metrics.dump(2) + "\n");
  write_text(dir / "effective_config.json", config_to_json(cfg).dump(2) + "\n");
  return 0;
}

}  // namespace

int run(const RunConfig& cfg) {
  if (cfg.mode != "global" && cfg.mode != "local")
    throw ConfigError("mode must be 'global' or 'local'");
  if (cfg.m < 1) throw ConfigError("m must be >= 1");
  if (cfg.mode == "local" && cfg.k < 1)
    throw ConfigError("local mode requires k >= 1");
  return cfg.mode == "global" ? run_global(cfg) : run_local(cfg);
}

nlohmann::json eval_metrics(const std::string& predictions_csv,
                            const std::string& truth_csv,
                            const std::string& target, double y_train_mean) {
  const CsvTable pred_table = read_csv(predictions_csv);
  const int mean_col = pred_table.find_column("mean");
  const int var_col = pred_table.find_column("variance");
  const int id_col = pred_table.find_column("id");
  if (mean_col < 0 || var_col < 0 || id_col < 0)
    throw DataError("predictions CSV must have id, mean, variance columns");

  const CsvTable truth_table = read_csv(truth_csv);
  RawTable truth = extract_xy(truth_table, target);

  std::vector<Prediction> preds;
  Eigen::VectorXd y(pred_table.rows.size());
  int n = 0;
  for (const auto& row : pred_table.rows) {
    if (!row[id_col] || !row[mean_col] || !row[var_col])
      throw DataError("predictions CSV has missing cells");
    const int id = static_cast<int>(*row[id_col]);
    if (id < 0 || id >= truth.y.size())
      throw DataError("prediction id out of range of the truth file");
    preds.push_back({*row[mean_col], *row[var_col]});
    y(n++) = truth.y(id);
  }
  y.conservativeResize(n);
  return nlohmann::json{{"nmse", nmse(preds, y, y_train_mean)},
                        {"mnlp", mnlp(preds, y)},
                        {"n_test", n},
                        {"y_train_mean", y_train_mean}};
}

}  // namespace ssgp
