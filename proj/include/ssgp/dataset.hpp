#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace ssgp {

/// Training data with the transforms applied on ingestion recorded: inputs
/// rescaled per dimension to [-1, 1] (computed on training rows only) and
/// targets centered by subtracting their mean.  Query points must be pushed
/// through rescale_point before any basis evaluation.
struct Dataset {
  Eigen::MatrixXd X;   // n x d, rescaled
  Eigen::VectorXd y;   // n, centered: raw targets minus y_mean
  double y_mean = 0.0;
  std::vector<std::pair<double, double>> rescale_params;  // per-dim (min,max)

  int n() const { return static_cast<int>(X.rows()); }
  int dim() const { return static_cast<int>(X.cols()); }
};

/// Builds a Dataset from raw inputs/targets, computing the [-1,1] rescale
/// and the target centering.  Constant columns map to zero; their indices
/// are reported through degenerate_columns when non-null.
Dataset make_dataset(const Eigen::MatrixXd& X_raw,
                     const Eigen::VectorXd& y_raw,
                     std::vector<int>* degenerate_columns = nullptr);

/// Applies the training rescale to one raw query point.
Eigen::VectorXd rescale_point(const Dataset& data,
                              const Eigen::VectorXd& x_raw);

/// Neighbourhood view: keeps the parent's input coordinates (the rescale is
/// never refit), recenters the targets on the subset mean.
Dataset subset_dataset(const Dataset& data, const std::vector<int>& indices);

}  // namespace ssgp
