#include "ssgp/predict.hpp"

#include <cmath>
#include <stdexcept>

#include "ssgp/errors.hpp"
#include "ssgp/quadrature.hpp"

namespace ssgp {

Prediction predictive(const VariationalState& state, const SpectralBasis& basis,
                      const Dataset& data, const Priors& priors,
                      const Eigen::VectorXd& x_star_raw) {
  const int n = data.n();
  if (n < 5)
    throw std::invalid_argument(
        "predictive: needs at least 5 training points (noise term undefined)");

  const Eigen::VectorXd x = rescale_point(data, x_star_raw);
  const auto [ez, ezz] = expected_point_moments(
      x, basis, {state.mu_lambda, state.sigma_lambda});

  const double a_g2 = priors.a_gamma * priors.a_gamma;
  const double noise = std::exp(log_h(n - 4, state.c_gamma, a_g2) -
                                log_h(n - 2, state.c_gamma, a_g2));
  const Eigen::MatrixXd big =
      state.mu_alpha * state.mu_alpha.transpose() + state.sigma_alpha;
  const double mean_centered = ez.dot(state.mu_alpha);

  Prediction out;
  out.mean = mean_centered + data.y_mean;
  out.variance = noise + big.cwiseProduct(ezz).sum() -
                 mean_centered * mean_centered;
  return out;
}

double nmse(const std::vector<Prediction>& predictions,
            const Eigen::VectorXd& y_star, double y_train_mean) {
  const auto n = static_cast<Eigen::Index>(predictions.size());
  if (n < 1 || y_star.size() != n)
    throw std::invalid_argument("nmse: length mismatch or empty input");
  double num = 0.0, den = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double e = y_star(j) - predictions[j].mean;
    const double b = y_star(j) - y_train_mean;
    num += e * e;
    den += b * b;
  }
  if (den <= 0.0)
    throw DataError("nmse: degenerate metric, test targets all equal the "
                    "training mean");
  return num / den;
}

double mnlp(const std::vector<Prediction>& predictions,
            const Eigen::VectorXd& y_star) {
  const auto n = static_cast<Eigen::Index>(predictions.size());
  if (n < 1 || y_star.size() != n)
    throw std::invalid_argument("mnlp: length mismatch or empty input");
  double sum = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double v = predictions[j].variance;
    if (!(v > 0.0))
      throw std::invalid_argument("mnlp: nonpositive predictive variance");
    const double e = y_star(j) - predictions[j].mean;
    sum += e * e / v + std::log(v) + std::log(2.0 * M_PI);
  }
  return 0.5 * sum / n;
}

}  // namespace ssgp
