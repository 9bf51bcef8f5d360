#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ssgp/dataset.hpp"
#include "ssgp/moments.hpp"
#include "ssgp/vmp.hpp"

namespace ssgp {

/// Posterior predictive summary in original target units.  The variance is
/// never below the noise term H(n-4,·,·)/H(n-2,·,·).
struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Predictive mean/variance at one raw query point.  The query is pushed
/// through the training rescale before basis evaluation and the training
/// target mean is added back to the mean.  Requires n >= 5.
Prediction predictive(const VariationalState& state, const SpectralBasis& basis,
                      const Dataset& data, const Priors& priors,
                      const Eigen::VectorXd& x_star_raw);

/// Test squared error normalized by squared deviation from the training
/// target mean.  Throws on a zero denominator.
double nmse(const std::vector<Prediction>& predictions,
            const Eigen::VectorXd& y_star, double y_train_mean);

/// Mean negative log predictive density under the Gaussian summary,
/// including the log(2*pi) constant.
double mnlp(const std::vector<Prediction>& predictions,
            const Eigen::VectorXd& y_star);

}  // namespace ssgp
