#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "ssgp/dataset.hpp"
#include "ssgp/predict.hpp"
#include "ssgp/vmp.hpp"

namespace ssgp {

/// Weighted nearest-neighbour query: d(x*, x_i)² = (x*-x_i)' diag(w) (x*-x_i).
/// All-ones weights give the Euclidean metric of the first stage; squared
/// fitted lengthscales give the second-stage metric.
struct NeighborhoodSpec {
  int k = 60;
  Eigen::VectorXd weights;
};

/// Indices of the k nearest rows of X under the weighted metric, ordered by
/// increasing distance with ties broken by ascending index.
std::vector<int> knn(const Eigen::MatrixXd& X, const Eigen::VectorXd& x_star,
                     const NeighborhoodSpec& spec);

struct LocalOptions {
  int k = 60;
  int m = 20;              // basis pairs per local fit
  int restarts = 3;        // spectral-point draws per stage
  bool reuse_stage1_basis = false;
};

/// Everything the two-stage procedure produced for one query.
struct LocalResult {
  Prediction prediction;          // from the stage-2 model
  Prediction stage1_prediction;   // from the stage-1 model, for comparison
  FitResult stage1;
  FitResult stage2;
  SpectralBasis basis1;
  SpectralBasis basis2;
  std::vector<int> neighbors1;
  std::vector<int> neighbors2;
  bool euclidean_fallback = false;  // stage-2 weights were degenerate
};

/// Two-stage adaptive-neighbourhood prediction: Euclidean kNN fit, then a
/// refit on the neighbourhood selected by the lengthscale-weighted metric.
/// Exactly two fits; the procedure is never iterated further.
LocalResult local_predict(const Dataset& train,
                          const Eigen::VectorXd& x_star_raw,
                          const LocalOptions& options, const Priors& priors,
                          const FitConfig& config,
                          std::uint64_t seed_override);
LocalResult local_predict(const Dataset& train,
                          const Eigen::VectorXd& x_star_raw,
                          const LocalOptions& options, const Priors& priors,
                          const FitConfig& config);

struct BatchQueryRecord {
  bool ok = false;
  std::string error;
  Prediction prediction;
  Prediction stage1_prediction;
  bool euclidean_fallback = false;
  int iterations1 = 0;
  int iterations2 = 0;
  double lb1 = 0.0;
  double lb2 = 0.0;
};

struct BatchLocalResult {
  std::vector<BatchQueryRecord> queries;
  int failures = 0;
};

/// Runs local_predict independently for each row of X_star_raw.  Per-query
/// seeds are derived from (config.seed, query index), so results do not
/// depend on execution order or the number of threads, and one failed query
/// never aborts the batch.
BatchLocalResult batch_local_predict(const Dataset& train,
                                     const Eigen::MatrixXd& X_star_raw,
                                     const LocalOptions& options,
                                     const Priors& priors,
                                     const FitConfig& config, int threads = 1);

/// Deterministic seed derivation shared by the batch driver and basis
/// selection (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace ssgp
