#include "ssgp/basis_select.hpp"

#include <limits>
#include <random>
#include <stdexcept>

#include "ssgp/errors.hpp"
#include "ssgp/neighborhood.hpp"

namespace ssgp {

SpectralBasis draw_basis(int pairs, int dim, std::uint64_t seed) {
  if (pairs < 1 || dim < 1)
    throw std::invalid_argument("draw_basis: pairs and dim must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  SpectralBasis basis;
  basis.frequencies.resize(pairs, dim);
  for (int r = 0; r < pairs; ++r)
    for (int j = 0; j < dim; ++j) basis.frequencies(r, j) = normal(rng);
  return basis;
}

SelectedBasis select_basis(const Dataset& data, const Priors& priors,
                           const FitConfig& config, int pairs,
                           std::uint64_t seed, int restarts) {
  if (restarts < 1)
    throw std::invalid_argument("select_basis: restarts must be >= 1");

  FitConfig probe = config;
  probe.max_iter = config.restart_iters;
  probe.tol = -1.0;  // run the probe cycles unconditionally

  SelectedBasis best;
  best.lower_bound = -std::numeric_limits<double>::infinity();
  std::string last_error;
  int failures = 0;

  for (int c = 0; c < restarts; ++c) {
    SpectralBasis cand = draw_basis(pairs, data.dim(), mix_seed(seed, c));
    try {
      FitResult probe_fit = fit_adaptive(data, cand, priors, probe);
      double attained = -std::numeric_limits<double>::infinity();
      for (const auto& e : probe_fit.lb_trace)
        attained = std::max(attained, e.lower_bound);
      best.candidate_lbs.push_back(attained);
      if (attained > best.lower_bound) {
        best.lower_bound = attained;
        best.basis = std::move(cand);
        best.warm_state = probe_fit.state;
      }
    } catch (const std::exception& e) {
      best.candidate_lbs.push_back(
          -std::numeric_limits<double>::infinity());
      last_error = e.what();
      ++failures;
    }
  }
  if (failures == restarts)
    throw NumericalError("select_basis: every candidate failed; last: " +
                         last_error);
  return best;
}

}  // namespace ssgp
