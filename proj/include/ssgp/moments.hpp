#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace ssgp {

/// Gaussian law of the lengthscale vector; Sigma may be positive
/// semidefinite (a point mass at mu when Sigma = 0).
struct GaussianLaw {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
};

/// The m spectral frequency vectors, one per cosine/sine basis pair,
/// stored as the rows of an m x d matrix.  Drawn from N(0, I_d) and fixed
/// for the duration of a fit.
struct SpectralBasis {
  Eigen::MatrixXd frequencies;

  int pairs() const { return static_cast<int>(frequencies.rows()); }
  int dim() const { return static_cast<int>(frequencies.cols()); }
};

/// The five Gaussian trigonometric expectations for a pair of projection
/// vectors: E[cos(t1'λ)cos(t2'λ)], E[sin(t1'λ)sin(t2'λ)],
/// E[sin(t1'λ)cos(t2'λ)], E[cos(t1'λ)], E[sin(t1'λ)].
struct TrigMoments {
  double cos_cos = 0.0;
  double sin_sin = 0.0;
  double sin_cos = 0.0;
  double cos1 = 0.0;
  double sin1 = 0.0;
};

TrigMoments trig_moments(const Eigen::VectorXd& t1, const Eigen::VectorXd& t2,
                         const GaussianLaw& law);

/// Per-fit cache of the projection vectors t_ir = s_r ⊙ x_i.  Immutable
/// after construction; point(i) is d x m with column r = t_ir.
class BasisProjection {
 public:
  BasisProjection(const Eigen::MatrixXd& X, const SpectralBasis& basis);

  const Eigen::MatrixXd& point(int i) const { return t_[i]; }
  int n() const { return n_; }
  int pairs() const { return m_; }
  int dim() const { return d_; }

 private:
  std::vector<Eigen::MatrixXd> t_;
  int n_ = 0, m_ = 0, d_ = 0;
};

/// E_q(Z) (n x 2m, cosines then sines) and E_q(Z'Z) (2m x 2m) under the
/// given lengthscale law.
struct DesignMoments {
  Eigen::MatrixXd ez;
  Eigen::MatrixXd ezz;
};

DesignMoments design_moments(const BasisProjection& proj,
                             const GaussianLaw& law);

Eigen::MatrixXd expected_design(const Eigen::MatrixXd& X,
                                const SpectralBasis& basis,
                                const GaussianLaw& law);
Eigen::MatrixXd expected_design(const BasisProjection& proj,
                                const GaussianLaw& law);

Eigen::MatrixXd expected_gram(const Eigen::MatrixXd& X,
                              const SpectralBasis& basis,
                              const GaussianLaw& law);
Eigen::MatrixXd expected_gram(const BasisProjection& proj,
                              const GaussianLaw& law);

/// Single-query versions: E_q(Z*) as a 2m vector and E_q(Z* Z*') as a
/// 2m x 2m matrix.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> expected_point_moments(
    const Eigen::VectorXd& x_star, const SpectralBasis& basis,
    const GaussianLaw& law);

}  // namespace ssgp
