#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "ssgp/moments.hpp"
#include "ssgp/oracle.hpp"

using namespace ssgp;

namespace {

GaussianLaw random_law(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd mu(d);
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i) {
    mu(i) = 0.5 * normal(rng);
    for (int j = 0; j < d; ++j) a(i, j) = 0.4 * normal(rng);
  }
  return {mu, a * a.transpose()};
}

SpectralBasis random_basis(int m, int d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  SpectralBasis basis;
  basis.frequencies.resize(m, d);
  for (int r = 0; r < m; ++r)
    for (int j = 0; j < d; ++j) basis.frequencies(r, j) = normal(rng);
  return basis;
}

Eigen::MatrixXd random_inputs(int n, int d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = unif(rng);
  return x;
}

// Direct Monte Carlo of Z and Z'Z by sampling lambda; no shared code with
// the closed forms.
struct McDesign {
  Eigen::MatrixXd ez, ezz, se_ez;
  double max_se_ezz = 0.0;
  Eigen::MatrixXd se_ezz;
};

McDesign mc_design(const Eigen::MatrixXd& x, const SpectralBasis& basis,
                   const GaussianLaw& law, long n_samples,
                   std::uint64_t seed) {
  const int n = static_cast<int>(x.rows());
  const int m = basis.pairs();
  const int d = basis.dim();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(law.sigma);
  const Eigen::MatrixXd root = es.eigenvectors() *
                               es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                               es.eigenvectors().transpose();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  McDesign out;
  out.ez = Eigen::MatrixXd::Zero(n, 2 * m);
  out.ezz = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  Eigen::MatrixXd ez_sq = Eigen::MatrixXd::Zero(n, 2 * m);
  Eigen::MatrixXd ezz_sq = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  Eigen::VectorXd z(d), lambda(d), row(2 * m);
  Eigen::MatrixXd zmat(n, 2 * m);
  for (long s = 0; s < n_samples; ++s) {
    for (int j = 0; j < d; ++j) z(j) = normal(rng);
    lambda = law.mu + root * z;
    for (int i = 0; i < n; ++i) {
      for (int r = 0; r < m; ++r) {
        const double arg = (basis.frequencies.row(r).transpose().array() *
                            x.row(i).transpose().array() * lambda.array())
                               .sum();
        zmat(i, r) = std::cos(arg);
        zmat(i, m + r) = std::sin(arg);
      }
    }
    out.ez += zmat;
    ez_sq += zmat.cwiseProduct(zmat);
    const Eigen::MatrixXd gram = zmat.transpose() * zmat;
    out.ezz += gram;
    ezz_sq += gram.cwiseProduct(gram);
  }
  out.ez /= double(n_samples);
  out.ezz /= double(n_samples);
  out.se_ez = ((ez_sq / double(n_samples) - out.ez.cwiseProduct(out.ez))
                   .cwiseMax(0.0) /
               double(n_samples))
                  .cwiseSqrt();
  out.se_ezz = ((ezz_sq / double(n_samples) - out.ezz.cwiseProduct(out.ezz))
                    .cwiseMax(0.0) /
                double(n_samples))
                   .cwiseSqrt();
  return out;
}

}  // namespace

TEST_CASE("zero projections give the deterministic pattern") {
  GaussianLaw law{Eigen::VectorXd::Constant(3, 0.2),
                  0.7 * Eigen::MatrixXd::Identity(3, 3)};
  const auto tm = trig_moments(Eigen::VectorXd::Zero(3),
                               Eigen::VectorXd::Zero(3), law);
  CHECK(tm.cos_cos == 1.0);
  CHECK(tm.sin_sin == 0.0);
  CHECK(tm.sin_cos == 0.0);
  CHECK(tm.cos1 == 1.0);
  CHECK(tm.sin1 == 0.0);
}

TEST_CASE("point mass law reduces to plain trigonometry") {
  Eigen::VectorXd t1(2), t2(2), mu(2);
  t1 << 1.3, -0.4;
  t2 << 0.2, 0.9;
  mu << 0.5, -1.1;
  GaussianLaw law{mu, Eigen::MatrixXd::Zero(2, 2)};
  const auto tm = trig_moments(t1, t2, law);
  CHECK(tm.cos1 == doctest::Approx(std::cos(t1.dot(mu))).epsilon(1e-15));
  CHECK(tm.sin1 == doctest::Approx(std::sin(t1.dot(mu))).epsilon(1e-15));
  CHECK(tm.cos_cos ==
        doctest::Approx(std::cos(t1.dot(mu)) * std::cos(t2.dot(mu)))
            .epsilon(1e-14));
}

TEST_CASE("specified instance agrees with a 1e6-sample Monte Carlo") {
  Eigen::VectorXd t1(2), t2(2), mu(2);
  t1 << 1.0, 2.0;
  t2 << 0.5, -1.0;
  mu << 0.3, 0.7;
  Eigen::MatrixXd sigma(2, 2);
  sigma << 0.2, 0.05, 0.05, 0.1;
  GaussianLaw law{mu, sigma};
  const auto mc = oracle::mc_trig_moments(t1, t2, law, 1000000, 2024);
  const auto cf = trig_moments(t1, t2, law);
  const double closed[5] = {cf.cos_cos, cf.sin_sin, cf.sin_cos, cf.cos1,
                            cf.sin1};
  for (int i = 0; i < 5; ++i)
    CHECK(std::abs(mc[i].estimate - closed[i]) <= 4.0 * mc[i].std_error);
}

TEST_CASE("trigonometric moment identities hold exactly") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + trial % 4;
    GaussianLaw law = random_law(d, rng);
    Eigen::VectorXd t1(d), t2(d);
    for (int j = 0; j < d; ++j) {
      t1(j) = normal(rng);
      t2(j) = normal(rng);
    }
    const auto ab = trig_moments(t1, t2, law);
    const auto ba = trig_moments(t2, t1, law);

    // |E cos| <= exp(-t'St/2) <= 1
    const double bound = std::exp(-0.5 * t1.dot(law.sigma * t1));
    CHECK(std::abs(ab.cos1) <= bound + 1e-15);
    CHECK(bound <= 1.0 + 1e-15);

    // cos-product plus sin-product collapses to one damped cosine
    const Eigen::VectorXd tm = t1 - t2;
    const double expect =
        std::exp(-0.5 * tm.dot(law.sigma * tm)) * std::cos(tm.dot(law.mu));
    CHECK(ab.cos_cos + ab.sin_sin == doctest::Approx(expect).epsilon(1e-13));

    // swap symmetry and the sin-product fold
    CHECK(ab.cos_cos == doctest::Approx(ba.cos_cos).epsilon(1e-14));
    CHECK(ab.sin_sin == doctest::Approx(ba.sin_sin).epsilon(1e-14));
    const Eigen::VectorXd tp = t1 + t2;
    const double fold =
        std::exp(-0.5 * tp.dot(law.sigma * tp)) * std::sin(tp.dot(law.mu));
    CHECK(ab.sin_cos + ba.sin_cos == doctest::Approx(fold).epsilon(1e-13));
  }
}

TEST_CASE("design row at the origin") {
  std::mt19937_64 rng(3);
  SpectralBasis basis = random_basis(4, 3, rng);
  GaussianLaw law = random_law(3, rng);
  const Eigen::MatrixXd ez =
      expected_design(Eigen::MatrixXd::Zero(1, 3), basis, law);
  for (int r = 0; r < 4; ++r) {
    CHECK(ez(0, r) == 1.0);
    CHECK(ez(0, 4 + r) == 0.0);
  }
}

TEST_CASE("design under a point mass is plain trigonometry") {
  std::mt19937_64 rng(4);
  SpectralBasis basis = random_basis(3, 2, rng);
  Eigen::MatrixXd x = random_inputs(5, 2, rng);
  Eigen::VectorXd mu(2);
  mu << 0.8, -0.3;
  GaussianLaw law{mu, Eigen::MatrixXd::Zero(2, 2)};
  const Eigen::MatrixXd ez = expected_design(x, basis, law);
  for (int i = 0; i < 5; ++i)
    for (int r = 0; r < 3; ++r) {
      const double arg = (basis.frequencies.row(r).transpose().array() *
                          x.row(i).transpose().array() * mu.array())
                             .sum();
      CHECK(ez(i, r) == doctest::Approx(std::cos(arg)).epsilon(1e-14));
      CHECK(ez(i, 3 + r) == doctest::Approx(std::sin(arg)).epsilon(1e-14));
    }
}

TEST_CASE("design and gram match Monte Carlo on a random instance") {
  std::mt19937_64 rng(11);
  SpectralBasis basis = random_basis(3, 2, rng);
  Eigen::MatrixXd x = random_inputs(5, 2, rng);
  GaussianLaw law = random_law(2, rng);

  const auto mc = mc_design(x, basis, law, 1000000, 555);
  const auto dm = design_moments(BasisProjection(x, basis), law);
  for (int i = 0; i < x.rows(); ++i)
    for (int c = 0; c < 6; ++c)
      CHECK(std::abs(dm.ez(i, c) - mc.ez(i, c)) <=
            4.0 * std::max(mc.se_ez(i, c), 1e-12));
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b)
      CHECK(std::abs(dm.ezz(a, b) - mc.ezz(a, b)) <=
            4.0 * std::max(mc.se_ezz(a, b), 1e-12));
}

TEST_CASE("gram at the origin and the diagonal pairing") {
  std::mt19937_64 rng(12);
  SpectralBasis basis = random_basis(4, 2, rng);
  GaussianLaw law = random_law(2, rng);
  const Eigen::MatrixXd g0 =
      expected_gram(Eigen::MatrixXd::Zero(1, 2), basis, law);
  CHECK((g0.topLeftCorner(4, 4).array() - 1.0).abs().maxCoeff() < 1e-15);
  CHECK(g0.bottomRightCorner(4, 4).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(g0.topRightCorner(4, 4).cwiseAbs().maxCoeff() < 1e-15);

  const int n = 7;
  const Eigen::MatrixXd x = random_inputs(n, 2, rng);
  const Eigen::MatrixXd g = expected_gram(x, basis, law);
  for (int r = 0; r < 4; ++r)
    CHECK(std::abs(g(r, r) + g(4 + r, 4 + r) - n) <= 1e-12 * n);
}

TEST_CASE("gram is symmetric and positive semidefinite") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    SpectralBasis basis = random_basis(3 + trial % 3, 2, rng);
    GaussianLaw law = random_law(2, rng);
    const Eigen::MatrixXd x = random_inputs(6, 2, rng);
    const Eigen::MatrixXd g = expected_gram(x, basis, law);
    CHECK((g - g.transpose()).cwiseAbs().maxCoeff() < 1e-13);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10 * g.trace());

    // E(Z'Z) - E(Z)'E(Z) is a sum of covariance matrices
    const Eigen::MatrixXd ez = expected_design(x, basis, law);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(
        g - ez.transpose() * ez);
    CHECK(es2.eigenvalues().minCoeff() >= -1e-10 * g.trace());
  }
}

TEST_CASE("point moments") {
  std::mt19937_64 rng(14);
  SpectralBasis basis = random_basis(4, 3, rng);
  GaussianLaw law = random_law(3, rng);

  const auto [ez0, ezz0] =
      expected_point_moments(Eigen::VectorXd::Zero(3), basis, law);
  for (int r = 0; r < 4; ++r) {
    CHECK(ez0(r) == 1.0);
    CHECK(ez0(4 + r) == 0.0);
    CHECK(ezz0(r, r) == 1.0);
    CHECK(ezz0(4 + r, 4 + r) == 0.0);
  }

  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::VectorXd xs(3);
  xs << unif(rng), unif(rng), unif(rng);
  const auto [ez, ezz] = expected_point_moments(xs, basis, law);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ezz -
                                                    ez * ez.transpose());
  CHECK(es.eigenvalues().minCoeff() >= -1e-12 * ezz.trace());

  // consistency with the n = 1 design path
  const auto dm =
      design_moments(BasisProjection(xs.transpose(), basis), law);
  CHECK((dm.ez.row(0).transpose() - ez).cwiseAbs().maxCoeff() == 0.0);
  CHECK((dm.ezz - ezz).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("monte carlo sweep across random instances") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + trial % 3;
    GaussianLaw law = random_law(d, rng);
    Eigen::VectorXd t1(d), t2(d);
    for (int j = 0; j < d; ++j) {
      t1(j) = normal(rng);
      t2(j) = normal(rng);
    }
    const auto mc = oracle::mc_trig_moments(t1, t2, law, 100000, 300 + trial);
    const auto cf = trig_moments(t1, t2, law);
    const double closed[5] = {cf.cos_cos, cf.sin_sin, cf.sin_cos, cf.cos1,
                              cf.sin1};
    for (int i = 0; i < 5; ++i)
      CHECK(std::abs(mc[i].estimate - closed[i]) <=
            4.0 * std::max(mc[i].std_error, 1e-12));
  }
}

TEST_CASE("dimension mismatches are rejected") {
  GaussianLaw law{Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)};
  CHECK_THROWS_AS(
      trig_moments(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2), law),
      std::invalid_argument);
  SpectralBasis basis;
  basis.frequencies = Eigen::MatrixXd::Zero(2, 3);
  CHECK_THROWS_AS(expected_design(Eigen::MatrixXd::Zero(4, 2), basis, law),
                  std::invalid_argument);
}
