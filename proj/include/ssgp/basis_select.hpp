#pragma once

#include <cstdint>
#include <vector>

#include "ssgp/adaptive.hpp"
#include "ssgp/dataset.hpp"
#include "ssgp/vmp.hpp"

namespace ssgp {

struct SelectedBasis {
  SpectralBasis basis;
  VariationalState warm_state;      // state after the probe cycles
  double lower_bound = 0.0;         // best bound attained by the winner
  std::vector<double> candidate_lbs;
};

/// Draws a spectral basis of the given size from N(0, I_d).
SpectralBasis draw_basis(int pairs, int dim, std::uint64_t seed);

/// Restart protocol: draw `restarts` candidate bases, run `restart_iters`
/// adaptive cycles on each, keep the one with the highest attained lower
/// bound (ties to the lowest index).  The winner's state is returned so the
/// main fit continues from it.
SelectedBasis select_basis(const Dataset& data, const Priors& priors,
                           const FitConfig& config, int pairs,
                           std::uint64_t seed, int restarts);

}  // namespace ssgp
