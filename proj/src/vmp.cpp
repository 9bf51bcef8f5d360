#include "ssgp/vmp.hpp"

#include <cmath>
#include <stdexcept>

#include "ssgp/adaptive.hpp"
#include "ssgp/errors.hpp"
#include "ssgp/quadrature.hpp"

namespace ssgp {

namespace {

inline double damp(double quad) {
  return (0.5 * quad > 745.0) ? 0.0 : std::exp(-0.5 * quad);
}

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw NumericalError(std::string(what) + ": matrix not positive definite");
  Eigen::MatrixXd inv =
      llt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
  return 0.5 * (inv + inv.transpose());
}

double spd_log_det(const Eigen::MatrixXd& a, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw NumericalError(std::string(what) + ": matrix not positive definite");
  return 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
}

}  // namespace

Priors isotropic_priors(int dim, double mu0, double scale, double a_sigma,
                        double a_gamma) {
  Priors p;
  p.mu_lambda0 = Eigen::VectorXd::Constant(dim, mu0);
  p.sigma_lambda0 = scale * Eigen::MatrixXd::Identity(dim, dim);
  p.a_sigma = a_sigma;
  p.a_gamma = a_gamma;
  return p;
}

LambdaGradients lambda_gradients(const VariationalState& state,
                                 const BasisProjection& proj,
                                 const Eigen::VectorXd& y,
                                 const Priors& priors) {
  const int n = proj.n(), m = proj.pairs(), d = proj.dim();
  if (y.size() != n || state.mu_lambda.size() != d ||
      state.mu_alpha.size() != 2 * m)
    throw std::invalid_argument("lambda_gradients: dimension mismatch");

  const Eigen::MatrixXd big =
      state.mu_alpha * state.mu_alpha.transpose() + state.sigma_alpha;
  const auto a_blk = big.topLeftCorner(m, m);
  const auto b_blk = big.bottomLeftCorner(m, m);
  const auto d_blk = big.bottomRightCorner(m, m);

  Eigen::MatrixXd f12 = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd f34 = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd omega(m, m);
  Eigen::VectorXd coef(m), v(m);
  Eigen::ArrayXd w(m), cw(m), sw(m), er(m);
  Eigen::ArrayXd gs(m), tt(m), num(m), nup(m), cm(m), sm(m), cp(m), sp(m);
  Eigen::ArrayXd sum_ad(m), dif_ad(m), bm(m), bp(m), zm(m), zp(m);

  for (int i = 0; i < n; ++i) {
    const Eigen::MatrixXd& ti = proj.point(i);
    w = (ti.transpose() * state.mu_lambda).array();
    const Eigen::MatrixXd g = ti.transpose() * (state.sigma_lambda * ti);
    cw = w.cos();
    sw = w.sin();
    for (int r = 0; r < m; ++r) er(r) = damp(g(r, r));
    const double gd_max = g.diagonal().maxCoeff();
    omega.setZero();
    v.setZero();
    const double yi = y(i);
    for (int r = 0; r < m; ++r) {
      // single-frequency terms (data misfit against each basis pair)
      omega(r, r) += yi * er(r) *
                     (state.mu_alpha(r) * cw(r) + state.mu_alpha(m + r) * sw(r));
      coef(r) = -2.0 * yi * er(r) *
                (state.mu_alpha(m + r) * cw(r) - state.mu_alpha(r) * sw(r));

      // same-frequency pair (t- = 0, t+ = 2 t_ir)
      const double nud = damp(4.0 * g(r, r));
      const double cp2 = cw(r) * cw(r) - sw(r) * sw(r);
      const double sp2 = 2.0 * sw(r) * cw(r);
      omega(r, r) -=
          nud * ((a_blk(r, r) - d_blk(r, r)) * cp2 + 2.0 * b_blk(r, r) * sp2);
      v(r) += 2.0 * nud *
              (2.0 * b_blk(r, r) * cp2 + (d_blk(r, r) - a_blk(r, r)) * sp2);

      // off-diagonal pairs, folded over (r,l) and (l,r)
      const int len = m - r - 1;
      if (len == 0) continue;
      auto seg = Eigen::seqN(r + 1, len);
      gs.head(len) = 0.5 * (g.row(r).segment(r + 1, len).transpose().array() +
                            g.col(r).segment(r + 1, len).array());
      if (gd_max < 1400.0 && gs.head(len).maxCoeff() < 700.0) {
        tt.head(len) = gs.head(len).exp();
        num.head(len) = er(r) * er(seg) * tt.head(len);
        nup.head(len) = er(r) * er(seg) / tt.head(len);
      } else {
        for (int l = r + 1; l < m; ++l) {
          const double cross = 2.0 * gs(l - r - 1);
          num(l - r - 1) = damp(g(r, r) + g(l, l) - cross);
          nup(l - r - 1) = damp(g(r, r) + g(l, l) + cross);
        }
      }
      cm.head(len) = cw(r) * cw(seg) + sw(r) * sw(seg);
      sm.head(len) = sw(r) * cw(seg) - cw(r) * sw(seg);
      cp.head(len) = cw(r) * cw(seg) - sw(r) * sw(seg);
      sp.head(len) = sw(r) * cw(seg) + cw(r) * sw(seg);
      sum_ad.head(len) = a_blk.row(r).segment(r + 1, len).transpose().array() +
                         d_blk.row(r).segment(r + 1, len).transpose().array();
      dif_ad.head(len) = a_blk.row(r).segment(r + 1, len).transpose().array() -
                         d_blk.row(r).segment(r + 1, len).transpose().array();
      bm.head(len) = b_blk.row(r).segment(r + 1, len).transpose().array() -
                     b_blk.col(r).segment(r + 1, len).array();
      bp.head(len) = b_blk.row(r).segment(r + 1, len).transpose().array() +
                     b_blk.col(r).segment(r + 1, len).array();

      zm.head(len) = -0.5 * num.head(len) *
                     (sum_ad.head(len) * cm.head(len) +
                      bm.head(len) * sm.head(len));
      zp.head(len) = -0.5 * nup.head(len) *
                     (dif_ad.head(len) * cp.head(len) +
                      bp.head(len) * sp.head(len));
      omega(r, r) += (zm.head(len) + zp.head(len)).sum();
      omega.diagonal().segment(r + 1, len).array() +=
          zm.head(len) + zp.head(len);
      omega.row(r).segment(r + 1, len).array() +=
          (zp.head(len) - zm.head(len)).transpose();
      omega.col(r).segment(r + 1, len).array() += zp.head(len) - zm.head(len);

      const auto z4m = (2.0 * num.head(len) *
                        (bm.head(len) * cm.head(len) -
                         sum_ad.head(len) * sm.head(len)))
                           .eval();
      const auto z4p = (2.0 * nup.head(len) *
                        (bp.head(len) * cp.head(len) -
                         dif_ad.head(len) * sp.head(len)))
                           .eval();
      v(r) += (z4m + z4p).sum();
      v.segment(r + 1, len).array() += z4p - z4m;
    }
    f12.noalias() += ti * omega * ti.transpose();
    f34.noalias() += ti * (coef + 0.5 * v);
  }

  const Eigen::MatrixXd prior_prec =
      spd_inverse(priors.sigma_lambda0, "lambda_gradients");
  LambdaGradients out;
  out.mean_gradient = prior_prec * (priors.mu_lambda0 - state.mu_lambda);
  out.precision_target = prior_prec;
  if (n > 0) {
    const double hr_gamma =
        h_ratio(n, state.c_gamma, priors.a_gamma * priors.a_gamma);
    out.precision_target += hr_gamma * f12;
    out.mean_gradient -= 0.5 * hr_gamma * f34;
  }
  out.precision_target = 0.5 * (out.precision_target + out.precision_target.transpose()).eval();
  return out;
}

LambdaGradients lambda_gradients(const VariationalState& state,
                                 const Dataset& data,
                                 const SpectralBasis& basis,
                                 const Priors& priors) {
  return lambda_gradients(state, BasisProjection(data.X, basis), data.y,
                          priors);
}

std::optional<std::pair<Eigen::MatrixXd, Eigen::VectorXd>> update_lambda(
    const VariationalState& state, const Eigen::MatrixXd& precision_target,
    const Eigen::VectorXd& mean_gradient, double step_size) {
  if (!(step_size > 0.0))
    throw std::invalid_argument("update_lambda: step size must be positive");
  if (!precision_target.allFinite() || !mean_gradient.allFinite())
    throw NumericalError("update_lambda: non-finite gradients");

  Eigen::MatrixXd candidate;
  if (step_size == 1.0) {
    candidate = precision_target;
  } else {
    candidate = (1.0 - step_size) * spd_inverse(state.sigma_lambda,
                                                "update_lambda") +
                step_size * precision_target;
  }
  auto chol = spd_guard(candidate);
  if (!chol) return std::nullopt;

  const int d = static_cast<int>(precision_target.rows());
  Eigen::MatrixXd inv = chol->triangularView<Eigen::Lower>().solve(
      Eigen::MatrixXd::Identity(d, d));
  Eigen::MatrixXd sigma_new =
      chol->transpose().triangularView<Eigen::Upper>().solve(inv);
  sigma_new = 0.5 * (sigma_new + sigma_new.transpose()).eval();
  Eigen::VectorXd mu_new = state.mu_lambda + step_size * (sigma_new * mean_gradient);
  return std::make_pair(std::move(sigma_new), std::move(mu_new));
}

AlphaUpdate update_alpha(const VariationalState& state,
                         const DesignMoments& moments,
                         const Eigen::VectorXd& y, const Priors& priors) {
  const int m2 = static_cast<int>(moments.ezz.rows());
  const int m = m2 / 2;
  const int n = static_cast<int>(y.size());
  const double hr_sigma =
      h_ratio(2 * m, state.c_sigma, priors.a_sigma * priors.a_sigma);

  Eigen::MatrixXd prec =
      m * hr_sigma * Eigen::MatrixXd::Identity(m2, m2);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m2);
  if (n > 0) {
    const double hr_gamma =
        h_ratio(n, state.c_gamma, priors.a_gamma * priors.a_gamma);
    prec += hr_gamma * moments.ezz;
    rhs.noalias() = hr_gamma * (moments.ez.transpose() * y);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(prec);
  if (llt.info() != Eigen::Success)
    throw NumericalError("update_alpha: coefficient precision not SPD");
  AlphaUpdate out;
  out.sigma_alpha = llt.solve(Eigen::MatrixXd::Identity(m2, m2));
  out.sigma_alpha =
      0.5 * (out.sigma_alpha + out.sigma_alpha.transpose()).eval();
  out.mu_alpha = llt.solve(rhs);
  return out;
}

AlphaUpdate update_alpha(const VariationalState& state, const Dataset& data,
                         const SpectralBasis& basis, const Priors& priors) {
  const auto dm = design_moments(BasisProjection(data.X, basis),
                                 {state.mu_lambda, state.sigma_lambda});
  return update_alpha(state, dm, data.y, priors);
}

double expected_sse(const Eigen::VectorXd& y, const DesignMoments& moments,
                    const Eigen::VectorXd& mu_alpha,
                    const Eigen::MatrixXd& sigma_alpha) {
  const Eigen::MatrixXd big = mu_alpha * mu_alpha.transpose() + sigma_alpha;
  double sse = y.squaredNorm();
  if (y.size() > 0) sse -= 2.0 * y.dot(moments.ez * mu_alpha);
  sse += big.cwiseProduct(moments.ezz).sum();
  return sse;
}

std::pair<double, double> update_scales(const VariationalState& state,
                                        const DesignMoments& moments,
                                        const Eigen::VectorXd& y) {
  const int m = static_cast<int>(moments.ezz.rows()) / 2;
  const double c_sigma =
      0.5 * m *
      (state.mu_alpha.squaredNorm() + state.sigma_alpha.trace());
  const double c_gamma =
      0.5 * expected_sse(y, moments, state.mu_alpha, state.sigma_alpha);
  return {c_sigma, c_gamma};
}

std::pair<double, double> update_scales(const VariationalState& state,
                                        const Dataset& data,
                                        const SpectralBasis& basis) {
  const auto dm = design_moments(BasisProjection(data.X, basis),
                                 {state.mu_lambda, state.sigma_lambda});
  return update_scales(state, dm, data.y);
}

double lower_bound(const VariationalState& state, const Dataset& data,
                   const SpectralBasis& basis, const Priors& priors) {
  const int n = data.n();
  const int d = data.dim();
  const int m = basis.pairs();

  const Eigen::MatrixXd prior_prec =
      spd_inverse(priors.sigma_lambda0, "lower_bound");
  const Eigen::VectorXd dmu = state.mu_lambda - priors.mu_lambda0;

  double lb = m * std::log(double(m)) +
              std::log(4.0 * priors.a_sigma * priors.a_gamma / (M_PI * M_PI));
  lb += 0.5 * (spd_log_det(state.sigma_lambda, "lower_bound") -
               spd_log_det(priors.sigma_lambda0, "lower_bound"));
  lb -= 0.5 * dmu.dot(prior_prec * dmu);
  lb -= 0.5 * (prior_prec * state.sigma_lambda).trace();
  lb += 0.5 * spd_log_det(state.sigma_alpha, "lower_bound");
  lb += log_h(n - 2, state.c_gamma, priors.a_gamma * priors.a_gamma);
  lb += log_h(2 * m - 2, state.c_sigma, priors.a_sigma * priors.a_sigma);
  lb += m + 0.5 * d - 0.5 * n * std::log(2.0 * M_PI);
  return lb;
}

LowerBoundTerms lower_bound_terms(const VariationalState& state,
                                  const Dataset& data,
                                  const SpectralBasis& basis,
                                  const Priors& priors) {
  const int n = data.n();
  const int d = data.dim();
  const int m = basis.pairs();
  if (n < 1) throw std::invalid_argument("lower_bound_terms: empty data");

  const double a_s2 = priors.a_sigma * priors.a_sigma;
  const double a_g2 = priors.a_gamma * priors.a_gamma;
  const double hr_sigma = h_ratio(2 * m, state.c_sigma, a_s2);
  const double hr_gamma = h_ratio(n, state.c_gamma, a_g2);

  // Expectations of log sigma^2, log(A^2 + sigma^2) under the half-Cauchy
  // variational factors, written in the x = 1/scale variable.
  const auto neg_log_x2 = [](double x) { return -2.0 * std::log(x); };
  const double e_log_s2 =
      h_expectation(2 * m - 2, state.c_sigma, a_s2, neg_log_x2);
  const double e_log_g2 =
      h_expectation(n - 2, state.c_gamma, a_g2, neg_log_x2);
  const double e_log_as = h_expectation(
      2 * m - 2, state.c_sigma, a_s2,
      [a_s2](double x) { return std::log1p(a_s2 * x * x) - 2.0 * std::log(x); });
  const double e_log_ag = h_expectation(
      n - 2, state.c_gamma, a_g2,
      [a_g2](double x) { return std::log1p(a_g2 * x * x) - 2.0 * std::log(x); });

  const GaussianLaw law{state.mu_lambda, state.sigma_lambda};
  const auto dm = design_moments(BasisProjection(data.X, basis), law);
  const double sse =
      expected_sse(data.y, dm, state.mu_alpha, state.sigma_alpha);

  const Eigen::MatrixXd prior_prec =
      spd_inverse(priors.sigma_lambda0, "lower_bound_terms");
  const Eigen::VectorXd dmu = state.mu_lambda - priors.mu_lambda0;
  // Perturbed states may carry a slightly asymmetric sigma_lambda; the log
  // determinant must stay a smooth function of every entry.
  const double log_det_sl =
      std::log(Eigen::PartialPivLU<Eigen::MatrixXd>(state.sigma_lambda)
                   .determinant());
  const double log_det_s0 = spd_log_det(priors.sigma_lambda0, "lower_bound_terms");
  const double log_det_sa = spd_log_det(state.sigma_alpha, "lower_bound_terms");
  const double log2pi = std::log(2.0 * M_PI);

  LowerBoundTerms t;
  t.ep_y = -0.5 * n * log2pi - 0.5 * n * e_log_g2 - 0.5 * sse * hr_gamma;
  t.ep_alpha = -m * log2pi - m * e_log_s2 + m * std::log(double(m)) -
               0.5 * m * hr_sigma *
                   (state.mu_alpha.squaredNorm() + state.sigma_alpha.trace());
  t.ep_lambda = -0.5 * d * log2pi - 0.5 * log_det_s0 -
                0.5 * dmu.dot(prior_prec * dmu) -
                0.5 * (prior_prec * state.sigma_lambda).trace();
  t.ep_sigma = std::log(2.0 * priors.a_sigma) - std::log(M_PI) - e_log_as;
  t.ep_gamma = std::log(2.0 * priors.a_gamma) - std::log(M_PI) - e_log_ag;
  t.eq_alpha = -m * log2pi - 0.5 * log_det_sa - m;
  t.eq_lambda = -0.5 * d * log2pi - 0.5 * log_det_sl - 0.5 * d;
  t.eq_sigma = -state.c_sigma * hr_sigma - m * e_log_s2 -
               log_h(2 * m - 2, state.c_sigma, a_s2) - e_log_as;
  t.eq_gamma = -state.c_gamma * hr_gamma - 0.5 * n * e_log_g2 -
               log_h(n - 2, state.c_gamma, a_g2) - e_log_ag;
  return t;
}

VariationalState initial_state(const Dataset& data, const SpectralBasis& basis,
                               const Priors& priors) {
  const int n = data.n();
  const int d = data.dim();
  const int m = basis.pairs();

  VariationalState st;
  st.mu_lambda = Eigen::VectorXd::Constant(d, 0.5);
  st.sigma_lambda = 0.5 * Eigen::MatrixXd::Identity(d, d);
  double var_y = (n > 0) ? data.y.squaredNorm() / n : 0.0;
  if (!(var_y > 0.0)) var_y = 1e-8;
  // (n/2 - 1) and (m - 1) are nonpositive for tiny n, m; clamp so the
  // half-Cauchy factors stay proper.
  st.c_gamma = std::max((0.5 * n - 1.0) * var_y / 4.0, 1e-8);
  st.c_sigma = std::max((m - 1.0) * var_y, 1e-8);

  const auto dm = design_moments(BasisProjection(data.X, basis),
                                 {st.mu_lambda, st.sigma_lambda});
  auto au = update_alpha(st, dm, data.y, priors);
  st.sigma_alpha = std::move(au.sigma_alpha);
  st.mu_alpha = std::move(au.mu_alpha);
  return st;
}

}  // namespace ssgp
