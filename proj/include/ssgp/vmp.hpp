#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ssgp/dataset.hpp"
#include "ssgp/moments.hpp"

namespace ssgp {

struct Priors {
  Eigen::VectorXd mu_lambda0;     // d
  Eigen::MatrixXd sigma_lambda0;  // d x d, SPD
  double a_sigma = 25.0;          // half-Cauchy scale of the signal sd
  double a_gamma = 25.0;          // half-Cauchy scale of the noise sd
};

/// Convenience: mu_lambda0 = mu0 * 1, sigma_lambda0 = scale * I.
Priors isotropic_priors(int dim, double mu0 = 0.0, double scale = 10.0,
                        double a_sigma = 25.0, double a_gamma = 25.0);

/// The six variational parameters.  Both covariance matrices stay
/// symmetric positive definite after every accepted update.
struct VariationalState {
  Eigen::VectorXd mu_alpha;      // 2m
  Eigen::MatrixXd sigma_alpha;   // 2m x 2m
  Eigen::VectorXd mu_lambda;     // d
  Eigen::MatrixXd sigma_lambda;  // d x d
  double c_sigma = 0.0;
  double c_gamma = 0.0;
};

struct FitConfig {
  double tol = 1e-6;      // relative lower-bound increase to declare done
  int max_iter = 500;
  double rho = 1.5;       // step growth factor, also the guard shrink factor
  int restarts = 10;      // spectral-point draws in basis selection
  int restart_iters = 2;  // cycles run per candidate draw
  int local_restarts = 3; // basis draws per stage in local fits
  std::uint64_t seed = 0;
  int guard_max_halvings = 60;
};

struct StepEvent {
  int iteration = 0;
  double step_size = 1.0;
  bool accepted = false;
};

struct LowerBoundEvent {
  int iteration = 0;
  double lower_bound = 0.0;
};

struct DecreaseEvent {
  int iteration = 0;
  double delta = 0.0;
};

struct FitResult {
  VariationalState state;
  double final_lower_bound = 0.0;          // lower bound of `state`
  std::vector<LowerBoundEvent> lb_trace;   // entry 0 is the initial state
  std::vector<StepEvent> step_trace;       // one entry per attempt
  int iterations = 0;                      // failed attempts included
  bool converged = false;
  std::vector<DecreaseEvent> decreases;    // committed lower-bound drops
  bool guard_exhausted = false;
};

/// Natural-gradient update ingredients for q(lambda): the unit-step
/// target precision and the bound's gradient with respect to the mean,
/// assembled from the trigonometric moment sums at the current state.
struct LambdaGradients {
  Eigen::MatrixXd precision_target;  // d x d
  Eigen::VectorXd mean_gradient;  // d
};

LambdaGradients lambda_gradients(const VariationalState& state,
                                 const Dataset& data,
                                 const SpectralBasis& basis,
                                 const Priors& priors);
LambdaGradients lambda_gradients(const VariationalState& state,
                                 const BasisProjection& proj,
                                 const Eigen::VectorXd& y,
                                 const Priors& priors);

/// One damped natural-gradient step on q(lambda):
///   Sigma <- [(1-a) Sigma^-1 + a P]^-1,  mu <- mu + a Sigma_new g,
/// with P the target precision and g the mean gradient.
/// Returns nullopt (committing nothing) when the bracketed precision is not
/// positive definite; the caller shrinks a and retries.
std::optional<std::pair<Eigen::MatrixXd, Eigen::VectorXd>> update_lambda(
    const VariationalState& state, const Eigen::MatrixXd& precision_target,
    const Eigen::VectorXd& mean_gradient, double step_size);

struct AlphaUpdate {
  Eigen::MatrixXd sigma_alpha;
  Eigen::VectorXd mu_alpha;
};

/// Closed-form Gaussian update of q(alpha) given the design moments at
/// the current lengthscale law.
AlphaUpdate update_alpha(const VariationalState& state, const Dataset& data,
                         const SpectralBasis& basis, const Priors& priors);
AlphaUpdate update_alpha(const VariationalState& state,
                         const DesignMoments& moments,
                         const Eigen::VectorXd& y, const Priors& priors);

/// Scale-factor updates.  c_gamma is half the expected residual sum of
/// squares and therefore nonnegative.
std::pair<double, double> update_scales(const VariationalState& state,
                                        const Dataset& data,
                                        const SpectralBasis& basis);
std::pair<double, double> update_scales(const VariationalState& state,
                                        const DesignMoments& moments,
                                        const Eigen::VectorXd& y);

/// The simplified closed-form lower bound.  Valid only on states whose
/// c_sigma / c_gamma were just refreshed from the current alpha moments
/// (the scale updates must be the last applied).
double lower_bound(const VariationalState& state, const Dataset& data,
                   const SpectralBasis& basis, const Priors& priors);

/// Term-by-term evaluation of the unsimplified lower bound, for
/// cross-checking and finite differencing.  Tolerates a mildly asymmetric
/// sigma_lambda so entries can be perturbed one at a time.
struct LowerBoundTerms {
  double ep_y = 0.0;       // E_q log p(y | alpha, lambda, gamma)
  double ep_alpha = 0.0;   // E_q log p(alpha | sigma)
  double ep_lambda = 0.0;  // E_q log p(lambda)
  double ep_sigma = 0.0;   // E_q log p(sigma)
  double ep_gamma = 0.0;   // E_q log p(gamma)
  double eq_alpha = 0.0;   // E_q log q(alpha)
  double eq_lambda = 0.0;  // E_q log q(lambda)
  double eq_sigma = 0.0;   // E_q log q(sigma)
  double eq_gamma = 0.0;   // E_q log q(gamma)

  double sum() const {
    return ep_y + ep_alpha + ep_lambda + ep_sigma + ep_gamma - eq_alpha -
           eq_lambda - eq_sigma - eq_gamma;
  }
};

LowerBoundTerms lower_bound_terms(const VariationalState& state,
                                  const Dataset& data,
                                  const SpectralBasis& basis,
                                  const Priors& priors);

/// E_q ||y - Z alpha||^2 given the design moments; shared by the scale
/// update and the likelihood term of the lower bound.
double expected_sse(const Eigen::VectorXd& y, const DesignMoments& moments,
                    const Eigen::VectorXd& mu_alpha,
                    const Eigen::MatrixXd& sigma_alpha);

/// Initialization shared by both fitting algorithms.
VariationalState initial_state(const Dataset& data, const SpectralBasis& basis,
                               const Priors& priors);

/// Unit-step fixed-point cycles (lambda covariance and mean, then the
/// coefficient and scale factors, with the SPD guard damping the lambda
/// step) until the relative lower-bound increase drops below config.tol.
FitResult fit_vmp(const Dataset& data, const SpectralBasis& basis,
                  const Priors& priors, const FitConfig& config);

/// Number of full fitting runs performed by this process (diagnostic).
std::uint64_t fit_invocations();

}  // namespace ssgp
