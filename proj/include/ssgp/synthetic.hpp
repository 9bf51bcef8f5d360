#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "ssgp/dataset.hpp"
#include "ssgp/moments.hpp"

namespace ssgp {

enum class Nonstationarity { none, piecewise, irrelevant_dims };

/// Seeded generator for desk-scale regression data: trigonometric-basis
/// draws from the model itself, optionally with appended irrelevant
/// covariates or a piecewise amplitude/noise overlay.
struct SyntheticSpec {
  int n = 200;
  int d = 2;
  int m_true = 20;
  Eigen::VectorXd lambda_true;   // d, defaults to all ones when empty
  double sigma_true = 1.0;
  double gamma_true = 0.1;
  Nonstationarity mode = Nonstationarity::none;
  int irrelevant_count = 0;      // extra uniform [0,1] columns
  std::uint64_t seed = 0;
};

struct GeneratedData {
  Dataset dataset;               // rescaled inputs, centered targets
  Eigen::MatrixXd x_raw;         // n x (d + irrelevant)
  Eigen::VectorXd y_raw;
  Eigen::VectorXd f;             // noiseless model values (before overlay)
  Eigen::VectorXd noise;         // standard normal draws
  SpectralBasis basis_true;      // m_true x d
  Eigen::VectorXd alpha_true;    // 2 m_true
};

GeneratedData generate(const SyntheticSpec& spec);

}  // namespace ssgp
