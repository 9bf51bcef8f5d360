#pragma once

#include <Eigen/Dense>
#include <optional>

#include "ssgp/vmp.hpp"

namespace ssgp {

/// Cholesky factor of the symmetrized matrix, or nullopt on any
/// nonpositive pivot.  Never regularizes; failure is the caller's signal
/// to shrink the step size.
std::optional<Eigen::MatrixXd> spd_guard(const Eigen::MatrixXd& candidate);

/// Natural-gradient fixed-point fitting with adaptive step sizes: the step
/// grows by config.rho after every cycle that raises the lower bound, is
/// halved by rho while the lambda precision candidate is not positive
/// definite, and resets to 1 after a failed cycle, which is retried with
/// the cached gradients (one damped retry at 0.5 before a drop is
/// accepted).  Failed attempts count toward config.max_iter.
FitResult fit_adaptive(const Dataset& data, const SpectralBasis& basis,
                       const Priors& priors, const FitConfig& config,
                       const std::optional<VariationalState>& init = {});

}  // namespace ssgp
