#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "ssgp/dataset.hpp"
#include "ssgp/vmp.hpp"

namespace ssgp {

/// Everything one CLI invocation needs; defaults follow the experimental
/// protocol (A_sigma = A_gamma = 25, rho = 1.5, ten restarts of two cycles).
struct RunConfig {
  std::string mode = "global";  // "global" or "local"
  int m = 20;
  int k = 60;           // neighbourhood size, local mode
  int threads = 1;      // local-mode query parallelism
  bool reuse_stage1_basis = false;

  double a_sigma = 25.0;
  double a_gamma = 25.0;
  double mu_lambda0 = 0.0;
  double sigma_lambda0_scale = 10.0;

  FitConfig fit;

  std::string train_csv;
  std::string test_csv;
  std::string target = "y";
  double test_fraction = 0.0;   // one-file split when > 0
  std::uint64_t split_seed = 0;

  std::string output_dir = ".";
};

RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& config);

struct IngestResult {
  Dataset dataset;
  std::vector<std::string> feature_names;
  int dropped_rows = 0;
  std::vector<int> degenerate_columns;
};

/// CSV to Dataset: rows with missing cells are dropped (counted), inputs
/// rescaled to [-1,1], targets centered by the training mean.
IngestResult ingest(const std::string& csv_path, const std::string& target);

/// Runs one configured job and writes predictions.csv, metrics.json,
/// trace.csv and effective_config.json into output_dir.  Returns 0;
/// failures surface as ConfigError / DataError / NumericalError.
int run(const RunConfig& config);

/// Recomputes NMSE/MNLP from a predictions file and a truth file.
nlohmann::json eval_metrics(const std::string& predictions_csv,
                            const std::string& truth_csv,
                            const std::string& target, double y_train_mean);

}  // namespace ssgp
