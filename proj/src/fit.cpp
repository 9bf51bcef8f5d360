#include <atomic>
#include <cmath>
#include <utility>

#include "ssgp/adaptive.hpp"
#include "ssgp/errors.hpp"
#include "ssgp/quadrature.hpp"
#include "ssgp/vmp.hpp"

namespace ssgp {

namespace {

std::atomic<std::uint64_t> g_fit_invocations{0};

// One shared cycle engine so the two algorithms differ only in their
// step-size policy.  A cycle updates the lambda covariance (guarded), the
// lambda mean, the coefficients, and the scale factors, in that order.
struct Engine {
  const Dataset& data;
  const SpectralBasis& basis;
  const Priors& priors;
  const FitConfig& cfg;
  BasisProjection proj;

  Engine(const Dataset& d, const SpectralBasis& b, const Priors& p,
         const FitConfig& c)
      : data(d), basis(b), priors(p), cfg(c), proj(d.X, b) {}

  struct Attempt {
    bool ok = false;          // false: guard exhausted
    VariationalState state;
    double lb = 0.0;
    double step_used = 1.0;
    int halvings = 0;
  };

  // One full cycle plus the lower bound, starting from a committed
  // lambda update at the largest step <= step0 that keeps the precision
  // positive definite.
  Attempt run_cycle(const VariationalState& snap, const LambdaGradients& g,
                    double step0) {
    Attempt att;
    att.step_used = step0;
    while (true) {
      auto upd = update_lambda(snap, g.precision_target, g.mean_gradient, att.step_used);
      if (upd) {
        att.state = snap;
        att.state.sigma_lambda = std::move(upd->first);
        att.state.mu_lambda = std::move(upd->second);
        break;
      }
      if (++att.halvings > cfg.guard_max_halvings) return att;
      att.step_used /= cfg.rho;
    }
    const auto dm = design_moments(
        proj, {att.state.mu_lambda, att.state.sigma_lambda});
    auto au = update_alpha(att.state, dm, data.y, priors);
    att.state.sigma_alpha = std::move(au.sigma_alpha);
    att.state.mu_alpha = std::move(au.mu_alpha);
    std::tie(att.state.c_sigma, att.state.c_gamma) =
        update_scales(att.state, dm, data.y);
    att.lb = lower_bound(att.state, data, basis, priors);
    att.ok = true;
    return att;
  }

  LambdaGradients gradients(const VariationalState& st) const {
    return lambda_gradients(st, proj, data.y, priors);
  }
};

double relative_increase(double delta, double prev) {
  return delta / (std::abs(prev) + 1e-12);
}

}  // namespace

std::uint64_t fit_invocations() { return g_fit_invocations.load(); }

std::optional<Eigen::MatrixXd> spd_guard(const Eigen::MatrixXd& candidate) {
  const Eigen::MatrixXd sym = 0.5 * (candidate + candidate.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(sym);
  if (llt.info() != Eigen::Success) return std::nullopt;
  return Eigen::MatrixXd(llt.matrixL());
}

FitResult fit_vmp(const Dataset& data, const SpectralBasis& basis,
                  const Priors& priors, const FitConfig& config) {
  g_fit_invocations.fetch_add(1);
  Engine eng(data, basis, priors, config);

  FitResult res;
  VariationalState st = initial_state(data, basis, priors);
  double lb_prev = lower_bound(st, data, basis, priors);
  res.lb_trace.push_back({0, lb_prev});

  for (int t = 1; t <= config.max_iter; ++t) {
    res.iterations = t;
    const auto grads = eng.gradients(st);
    const auto att = eng.run_cycle(st, grads, 1.0);
    if (!att.ok) {
      res.guard_exhausted = true;
      break;
    }
    st = att.state;
    const double delta = att.lb - lb_prev;
    res.lb_trace.push_back({t, att.lb});
    res.step_trace.push_back({t, att.step_used, delta > 0.0});
    if (delta < -1e-8 * std::max(1.0, std::abs(lb_prev)))
      res.decreases.push_back({t, delta});
    const double rel = relative_increase(delta, lb_prev);
    lb_prev = att.lb;
    if (delta >= 0.0 && rel < config.tol) {
      res.converged = true;
      break;
    }
  }
  res.state = std::move(st);
  res.final_lower_bound = lb_prev;
  return res;
}

FitResult fit_adaptive(const Dataset& data, const SpectralBasis& basis,
                       const Priors& priors, const FitConfig& config,
                       const std::optional<VariationalState>& init) {
  g_fit_invocations.fetch_add(1);
  Engine eng(data, basis, priors, config);

  FitResult res;
  VariationalState st = init ? *init : initial_state(data, basis, priors);
  double lb_prev = lower_bound(st, data, basis, priors);
  res.lb_trace.push_back({0, lb_prev});

  // Growth switched off when rho is within 1e-12 of 1 (recovers the
  // unit-step algorithm exactly).
  const double growth = (config.rho - 1.0 < 1e-12) ? 1.0 : config.rho;
  const double step_floor =
      std::pow(config.rho, -config.guard_max_halvings);
  double step_next = 1.0;
  int t = 0;

  auto accept = [&](const Engine::Attempt& att, double delta) {
    st = att.state;
    res.step_trace.push_back({t, att.step_used, true});
    const double rel = relative_increase(delta, lb_prev);
    lb_prev = att.lb;
    step_next = growth * att.step_used;
    if (rel < config.tol) res.converged = true;
  };

  while (t < config.max_iter && !res.converged) {
    const auto grads = eng.gradients(st);
    const VariationalState snap = st;

    // One cycle at the grown step; on a lower-bound drop, revert and
    // retry with the cached gradients at unit step, then down a damped
    // ladder.  Every attempt counts as an iteration.
    double requested = step_next;
    Engine::Attempt best;
    bool have_best = false, accepted = false;
    while (true) {
      ++t;
      res.iterations = t;
      const auto att = eng.run_cycle(snap, grads, requested);
      if (!att.ok) {
        res.guard_exhausted = true;
        res.state = std::move(st);
        res.final_lower_bound = lb_prev;
        return res;
      }
      res.lb_trace.push_back({t, att.lb});
      const double delta = att.lb - lb_prev;
      if (delta > 0.0) {
        accept(att, delta);
        accepted = true;
        break;
      }
      res.step_trace.push_back({t, att.step_used, false});
      if (!have_best || att.lb > best.lb) {
        best = att;
        have_best = true;
      }
      if (t >= config.max_iter) break;
      if (requested > 1.0) {
        requested = 1.0;
      } else {
        requested *= 0.5;
        if (requested < step_floor) break;  // ladder exhausted
      }
    }
    if (accepted) continue;

    // Nothing raised the bound: commit the least-bad state, note the drop,
    // and carry on from a unit step.
    if (have_best) {
      const double delta = best.lb - lb_prev;
      if (delta < -1e-8 * std::max(1.0, std::abs(lb_prev)))
        res.decreases.push_back({t, delta});
      st = best.state;
      if (std::abs(relative_increase(delta, lb_prev)) < config.tol)
        res.converged = true;  // pinned at a fixed point within noise
      lb_prev = best.lb;
      step_next = 1.0;
    }
  }
  res.state = std::move(st);
  res.final_lower_bound = lb_prev;
  return res;
}

}  // namespace ssgp
