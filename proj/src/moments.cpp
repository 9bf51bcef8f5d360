#include "ssgp/moments.hpp"

#include <cmath>
#include <stdexcept>

namespace ssgp {

namespace {

// exp(-q/2) with a hard zero once the exponent would underflow; the error
// is below 1e-300 and this keeps the inner loops out of the denormal range.
inline double damp(double quad) {
  return (0.5 * quad > 745.0) ? 0.0 : std::exp(-0.5 * quad);
}

inline void check_dims(const Eigen::MatrixXd& X, const SpectralBasis& basis) {
  if (X.cols() != basis.frequencies.cols())
    throw std::invalid_argument("spectral basis dimension does not match X");
  if (basis.pairs() < 1)
    throw std::invalid_argument("spectral basis must have at least one pair");
}

}  // namespace

TrigMoments trig_moments(const Eigen::VectorXd& t1, const Eigen::VectorXd& t2,
                         const GaussianLaw& law) {
  const auto d = law.mu.size();
  if (t1.size() != d || t2.size() != d || law.sigma.rows() != d ||
      law.sigma.cols() != d)
    throw std::invalid_argument("trig_moments: dimension mismatch");

  const Eigen::VectorXd tm = t1 - t2;
  const Eigen::VectorXd tp = t1 + t2;
  const double num = damp(tm.dot(law.sigma * tm));
  const double nup = damp(tp.dot(law.sigma * tp));
  const double wm = tm.dot(law.mu);
  const double wp = tp.dot(law.mu);

  TrigMoments out;
  out.cos_cos = 0.5 * (num * std::cos(wm) + nup * std::cos(wp));
  out.sin_sin = 0.5 * (num * std::cos(wm) - nup * std::cos(wp));
  out.sin_cos = 0.5 * (num * std::sin(wm) + nup * std::sin(wp));
  const double e1 = damp(t1.dot(law.sigma * t1));
  const double w1 = t1.dot(law.mu);
  out.cos1 = e1 * std::cos(w1);
  out.sin1 = e1 * std::sin(w1);
  return out;
}

BasisProjection::BasisProjection(const Eigen::MatrixXd& X,
                                 const SpectralBasis& basis) {
  check_dims(X, basis);
  n_ = static_cast<int>(X.rows());
  m_ = basis.pairs();
  d_ = basis.dim();
  t_.reserve(n_);
  for (int i = 0; i < n_; ++i) {
    // column r holds t_ir = s_r ⊙ x_i
    t_.push_back(
        (basis.frequencies.array().rowwise() * X.row(i).array()).transpose());
  }
}

DesignMoments design_moments(const BasisProjection& proj,
                             const GaussianLaw& law) {
  const int n = proj.n(), m = proj.pairs();
  DesignMoments out;
  out.ez = Eigen::MatrixXd::Zero(n, 2 * m);
  out.ezz = Eigen::MatrixXd::Zero(2 * m, 2 * m);

  // dampings factor over pairs: exp(-q±/2) = e_r e_l exp(∓gs) with
  // gs = (g_rl + g_lr)/2, so one exp serves both signs.  The slow path
  // guards the rare case where exp(gs) alone would overflow.
  Eigen::ArrayXd w(m), cw(m), sw(m), er(m);
  Eigen::ArrayXd gs(m), tt(m), num(m), nup(m), cm(m), sm(m), cp(m), sp(m);
  for (int i = 0; i < n; ++i) {
    const Eigen::MatrixXd& ti = proj.point(i);
    w = (ti.transpose() * law.mu).array();
    const Eigen::MatrixXd g = ti.transpose() * (law.sigma * ti);
    cw = w.cos();
    sw = w.sin();
    for (int r = 0; r < m; ++r) {
      er(r) = damp(g(r, r));
      out.ez(i, r) = er(r) * cw(r);
      out.ez(i, m + r) = er(r) * sw(r);
    }
    const double gd_max = g.diagonal().maxCoeff();
    for (int r = 0; r < m; ++r) {
      // diagonal pair (t- = 0, t+ = 2 t_ir)
      {
        const double nud = damp(4.0 * g(r, r));
        const double cp2 = cw(r) * cw(r) - sw(r) * sw(r);
        const double sp2 = 2.0 * sw(r) * cw(r);
        out.ezz(r, r) += 0.5 * (1.0 + nud * cp2);
        out.ezz(m + r, m + r) += 0.5 * (1.0 - nud * cp2);
        out.ezz(r, m + r) += 0.5 * nud * sp2;
        out.ezz(m + r, r) += 0.5 * nud * sp2;
      }
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

      const auto pc =
          (0.5 * (num.head(len) * cm.head(len) + nup.head(len) * cp.head(len)))
              .eval();
      const auto rc =
          (0.5 * (num.head(len) * cm.head(len) - nup.head(len) * cp.head(len)))
              .eval();
      const auto url =
          (0.5 * (nup.head(len) * sp.head(len) - num.head(len) * sm.head(len)))
              .eval();
      const auto ulr =
          (0.5 * (nup.head(len) * sp.head(len) + num.head(len) * sm.head(len)))
              .eval();

      out.ezz.row(r).segment(r + 1, len) += pc.matrix().transpose();
      out.ezz.col(r).segment(r + 1, len) += pc.matrix();
      out.ezz.row(m + r).segment(m + r + 1, len) += rc.matrix().transpose();
      out.ezz.col(m + r).segment(m + r + 1, len) += rc.matrix();
      out.ezz.row(r).segment(m + r + 1, len) += url.matrix().transpose();
      out.ezz.col(r).segment(m + r + 1, len) += url.matrix();
      out.ezz.row(m + r).segment(r + 1, len) += ulr.matrix().transpose();
      out.ezz.col(m + r).segment(r + 1, len) += ulr.matrix();
    }
  }
  return out;
}

Eigen::MatrixXd expected_design(const BasisProjection& proj,
                                const GaussianLaw& law) {
  const int n = proj.n(), m = proj.pairs();
  Eigen::MatrixXd ez(n, 2 * m);
  for (int i = 0; i < n; ++i) {
    const Eigen::MatrixXd& ti = proj.point(i);
    const Eigen::VectorXd w = ti.transpose() * law.mu;
    const Eigen::MatrixXd st = law.sigma * ti;
    for (int r = 0; r < m; ++r) {
      const double e = damp(ti.col(r).dot(st.col(r)));
      ez(i, r) = e * std::cos(w(r));
      ez(i, m + r) = e * std::sin(w(r));
    }
  }
  return ez;
}

Eigen::MatrixXd expected_design(const Eigen::MatrixXd& X,
                                const SpectralBasis& basis,
                                const GaussianLaw& law) {
  return expected_design(BasisProjection(X, basis), law);
}

Eigen::MatrixXd expected_gram(const BasisProjection& proj,
                              const GaussianLaw& law) {
  return design_moments(proj, law).ezz;
}

Eigen::MatrixXd expected_gram(const Eigen::MatrixXd& X,
                              const SpectralBasis& basis,
                              const GaussianLaw& law) {
  return expected_gram(BasisProjection(X, basis), law);
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> expected_point_moments(
    const Eigen::VectorXd& x_star, const SpectralBasis& basis,
    const GaussianLaw& law) {
  const DesignMoments dm =
      design_moments(BasisProjection(x_star.transpose(), basis), law);
  return {dm.ez.row(0).transpose(), dm.ezz};
}

}  // namespace ssgp
