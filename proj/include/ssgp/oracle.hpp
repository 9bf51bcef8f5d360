#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>

#include "ssgp/dataset.hpp"
#include "ssgp/moments.hpp"
#include "ssgp/vmp.hpp"

namespace ssgp::oracle {

/// A brute-force estimate with its uncertainty; reproducible from the seed.
struct OracleReport {
  double estimate = 0.0;
  double std_error = 0.0;
  long n_samples = 0;
  std::uint64_t seed = 0;
};

/// Monte Carlo estimates of the five trigonometric expectations
/// (cos·cos, sin·sin, sin·cos, cos, sin), by direct sampling of the
/// Gaussian law and averaging the trig products.
std::array<OracleReport, 5> mc_trig_moments(const Eigen::VectorXd& t1,
                                            const Eigen::VectorXd& t2,
                                            const GaussianLaw& law,
                                            long n_samples,
                                            std::uint64_t seed);

/// Central finite differences of a scalar functional; second-order in the
/// step.  step must lie in [1e-7, 1e-3].
Eigen::VectorXd fd_gradient(
    const std::function<double(const Eigen::VectorXd&)>& functional,
    const Eigen::VectorXd& point, double step);

/// Monte Carlo estimate of E_q log p(y, theta) - E_q log q(theta) by
/// sampling all four variational factors.  The design matrix is evaluated
/// by direct trigonometry on each sampled lengthscale vector and the
/// half-Cauchy factors are sampled by inverse-CDF on a tabulated grid, so
/// no code is shared with the closed-form path this checks.  Desk-scale
/// only (n <= 50, m <= 5).
OracleReport mc_elbo(const VariationalState& state, const Dataset& data,
                     const SpectralBasis& basis, const Priors& priors,
                     long n_samples, std::uint64_t seed);

/// log H(p, q, r) by adaptive Gauss-Kronrod in extended precision, to
/// relative tolerance `tol` on the integral.  Independent of the
/// windowed-rule evaluator in the quadrature module.
long double gk_log_h(int p, double q, double r, long double tol = 1e-13L);

/// Inverse-CDF sampler for the half-Cauchy variational factors: the
/// unnormalized density exp(-c/s^2) s^-(p+2) / (a^2 + s^2) is tabulated on
/// 4096 log-spaced points and the CDF inverted by monotone interpolation.
class ScaleSampler {
 public:
  ScaleSampler(int p, double c, double a);

  double sample(double u01) const;      // u01 in (0, 1)
  double log_density_unnormalized(double s) const;
  int grid_size() const { return static_cast<int>(grid_.size()); }

 private:
  int p_;
  double c_, a_;
  std::vector<double> grid_;  // scale values
  std::vector<double> cdf_;   // normalized cumulative weights
};

}  // namespace ssgp::oracle
