#include "ssgp/dataset.hpp"

#include <cmath>
#include <stdexcept>

#include "ssgp/errors.hpp"

namespace ssgp {

Dataset make_dataset(const Eigen::MatrixXd& X_raw, const Eigen::VectorXd& y_raw,
                     std::vector<int>* degenerate_columns) {
  if (X_raw.rows() != y_raw.size())
    throw std::invalid_argument("make_dataset: row count mismatch");
  if (X_raw.rows() < 1) throw DataError("make_dataset: empty data");
  if (!X_raw.allFinite() || !y_raw.allFinite())
    throw DataError("make_dataset: non-finite values");

  Dataset out;
  const int n = static_cast<int>(X_raw.rows());
  const int d = static_cast<int>(X_raw.cols());
  out.X.resize(n, d);
  out.rescale_params.resize(d);
  for (int j = 0; j < d; ++j) {
    const double lo = X_raw.col(j).minCoeff();
    const double hi = X_raw.col(j).maxCoeff();
    out.rescale_params[j] = {lo, hi};
    if (hi - lo <= 0.0) {
      out.X.col(j).setZero();
      if (degenerate_columns) degenerate_columns->push_back(j);
    } else {
      out.X.col(j) = 2.0 * (X_raw.col(j).array() - lo) / (hi - lo) - 1.0;
    }
  }
  out.y_mean = y_raw.mean();
  out.y = y_raw.array() - out.y_mean;
  return out;
}

Eigen::VectorXd rescale_point(const Dataset& data,
                              const Eigen::VectorXd& x_raw) {
  if (x_raw.size() != data.dim())
    throw std::invalid_argument("rescale_point: dimension mismatch");
  Eigen::VectorXd x(data.dim());
  for (int j = 0; j < data.dim(); ++j) {
    const auto [lo, hi] = data.rescale_params[j];
    x(j) = (hi - lo > 0.0) ? 2.0 * (x_raw(j) - lo) / (hi - lo) - 1.0 : 0.0;
  }
  return x;
}

Dataset subset_dataset(const Dataset& data, const std::vector<int>& indices) {
  Dataset out;
  const int k = static_cast<int>(indices.size());
  if (k < 1) throw std::invalid_argument("subset_dataset: empty index set");
  out.X.resize(k, data.dim());
  Eigen::VectorXd y_raw(k);
  for (int i = 0; i < k; ++i) {
    const int idx = indices[i];
    if (idx < 0 || idx >= data.n())
      throw std::invalid_argument("subset_dataset: index out of range");
    out.X.row(i) = data.X.row(idx);
    y_raw(i) = data.y(idx) + data.y_mean;
  }
  out.y_mean = y_raw.mean();
  out.y = y_raw.array() - out.y_mean;
  out.rescale_params = data.rescale_params;
  return out;
}

}  // namespace ssgp
