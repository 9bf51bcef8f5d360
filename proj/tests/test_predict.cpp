#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "ssgp/adaptive.hpp"
#include "ssgp/errors.hpp"
#include "ssgp/oracle.hpp"
#include "ssgp/predict.hpp"
#include "ssgp/quadrature.hpp"
#include "ssgp/synthetic.hpp"

using namespace ssgp;

namespace {

struct Fitted {
  GeneratedData gen;
  SpectralBasis basis;
  Priors priors;
  FitResult fit;
};

Fitted fitted_model(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n = 100;
  spec.d = 2;
  spec.m_true = 8;
  spec.seed = seed;
  Fitted out;
  out.gen = generate(spec);
  std::mt19937_64 rng(seed * 7 + 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  out.basis.frequencies.resize(8, 2);
  for (int r = 0; r < 8; ++r)
    for (int j = 0; j < 2; ++j) out.basis.frequencies(r, j) = normal(rng);
  out.priors = isotropic_priors(2, 0.0, 10.0);
  FitConfig cfg;
  out.fit = fit_adaptive(out.gen.dataset, out.basis, out.priors, cfg);
  return out;
}

double noise_floor(const VariationalState& st, int n, double a_gamma) {
  return std::exp(log_h(n - 4, st.c_gamma, a_gamma * a_gamma) -
                  log_h(n - 2, st.c_gamma, a_gamma * a_gamma));
}

}  // namespace

TEST_CASE("zero coefficient mean gives the training mean and the floor") {
  Fitted f = fitted_model(1);
  VariationalState st = f.fit.state;
  st.mu_alpha.setZero();
  Eigen::VectorXd x(2);
  x << 0.23, -0.51;
  const Prediction p = predictive(st, f.basis, f.gen.dataset, f.priors, x);
  CHECK(p.mean == doctest::Approx(f.gen.dataset.y_mean).epsilon(1e-15));

  const auto [ez, ezz] = expected_point_moments(
      rescale_point(f.gen.dataset, x), f.basis,
      {st.mu_lambda, st.sigma_lambda});
  const double expect =
      noise_floor(st, f.gen.dataset.n(), f.priors.a_gamma) +
      st.sigma_alpha.cwiseProduct(ezz).sum();
  CHECK(p.variance == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("variance never drops below the noise term") {
  Fitted f = fitted_model(2);
  const double floor =
      noise_floor(f.fit.state, f.gen.dataset.n(), f.priors.a_gamma);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unif(-1.5, 1.5);
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::VectorXd x(2);
    x << unif(rng), unif(rng);
    const Prediction p =
        predictive(f.fit.state, f.basis, f.gen.dataset, f.priors, x);
    CHECK(p.variance >= floor - 1e-12 * std::max(1.0, floor));
  }
}

TEST_CASE("predictive summary matches a Monte Carlo push-through") {
  Fitted f = fitted_model(3);
  const VariationalState& st = f.fit.state;
  const int n = f.gen.dataset.n();
  const int m = f.basis.pairs();

  std::mt19937_64 rng(31);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Eigen::LLT<Eigen::MatrixXd> llt_a(st.sigma_alpha);
  const Eigen::LLT<Eigen::MatrixXd> llt_l(st.sigma_lambda);
  const Eigen::MatrixXd la = llt_a.matrixL();
  const Eigen::MatrixXd ll = llt_l.matrixL();
  const oracle::ScaleSampler gamma_sampler(n - 2, st.c_gamma,
                                           f.priors.a_gamma);

  Eigen::VectorXd x_raw(2);
  x_raw << 0.4, 0.1;
  const Prediction p =
      predictive(st, f.basis, f.gen.dataset, f.priors, x_raw);
  const Eigen::VectorXd x = rescale_point(f.gen.dataset, x_raw);

  const long n_samples = 100000;
  double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
  Eigen::VectorXd za(2 * m), zl(2);
  for (long s = 0; s < n_samples; ++s) {
    for (int i = 0; i < 2 * m; ++i) za(i) = normal(rng);
    zl << normal(rng), normal(rng);
    const Eigen::VectorXd alpha = st.mu_alpha + la * za;
    const Eigen::VectorXd lambda = st.mu_lambda + ll * zl;
    double fx = 0.0;
    for (int r = 0; r < m; ++r) {
      const double arg = (f.basis.frequencies.row(r).transpose().array() *
                          x.array() * lambda.array())
                             .sum();
      fx += alpha(r) * std::cos(arg) + alpha(m + r) * std::sin(arg);
    }
    const double y = fx + gamma_sampler.sample(unif(rng)) * normal(rng) +
                     f.gen.dataset.y_mean;
    sum += y;
    sum2 += y * y;
    const double c = y - p.mean;
    sum4 += c * c * c * c;
  }
  const double mc_mean = sum / n_samples;
  const double mc_var = sum2 / n_samples - mc_mean * mc_mean;
  const double se_mean = std::sqrt(mc_var / n_samples);
  CHECK(std::abs(mc_mean - p.mean) < 4.0 * se_mean);
  // standard error of the variance from the fourth moment
  const double mu4 = sum4 / n_samples;
  const double se_var =
      std::sqrt(std::max(0.0, mu4 - mc_var * mc_var) / n_samples);
  CHECK(std::abs(mc_var - p.variance) < 4.0 * se_var);
}

TEST_CASE("predictive mean is linear in the coefficient mean") {
  Fitted f = fitted_model(4);
  Eigen::VectorXd x(2);
  x << -0.2, 0.7;
  const Prediction p1 =
      predictive(f.fit.state, f.basis, f.gen.dataset, f.priors, x);
  VariationalState doubled = f.fit.state;
  doubled.mu_alpha *= 2.0;
  const Prediction p2 =
      predictive(doubled, f.basis, f.gen.dataset, f.priors, x);
  CHECK(p2.mean - f.gen.dataset.y_mean ==
        doctest::Approx(2.0 * (p1.mean - f.gen.dataset.y_mean))
            .epsilon(1e-12));
}

TEST_CASE("too little data for the variance formula") {
  Fitted f = fitted_model(5);
  Dataset tiny = f.gen.dataset;
  tiny.X = tiny.X.topRows(4).eval();
  tiny.y = tiny.y.head(4).eval();
  Eigen::VectorXd x(2);
  x << 0.0, 0.0;
  CHECK_THROWS_AS(predictive(f.fit.state, f.basis, tiny, f.priors, x),
                  std::invalid_argument);
}

TEST_CASE("normalized mean square error") {
  SUBCASE("perfect predictions score zero") {
    std::vector<Prediction> preds{{1.0, 1.0}, {2.0, 1.0}};
    Eigen::VectorXd y(2);
    y << 1.0, 2.0;
    CHECK(nmse(preds, y, 0.5) == 0.0);
  }
  SUBCASE("predicting the training mean scores one") {
    std::vector<Prediction> preds{{2.0, 1.0}, {2.0, 1.0}, {2.0, 1.0}};
    Eigen::VectorXd y(3);
    y << 1.0, 2.0, 4.0;
    CHECK(nmse(preds, y, 2.0) == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("hand-computed three-point value") {
    std::vector<Prediction> preds{{1.0, 1.0}, {2.0, 1.0}, {4.0, 1.0}};
    Eigen::VectorXd y(3);
    y << 1.0, 2.0, 3.0;
    CHECK(nmse(preds, y, 2.0) == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("shift invariance") {
    std::vector<Prediction> preds{{1.1, 1.0}, {2.4, 1.0}, {3.9, 1.0}};
    Eigen::VectorXd y(3);
    y << 1.0, 2.0, 3.0;
    const double base = nmse(preds, y, 1.7);
    std::vector<Prediction> shifted = preds;
    for (auto& p : shifted) p.mean += 10.0;
    CHECK(nmse(shifted, Eigen::VectorXd(y.array() + 10.0), 11.7) ==
          doctest::Approx(base).epsilon(1e-12));
  }
  SUBCASE("degenerate denominator raises") {
    std::vector<Prediction> preds{{2.0, 1.0}};
    Eigen::VectorXd y(1);
    y << 3.0;
    CHECK_THROWS_AS(nmse(preds, y, 3.0), DataError);
  }
}

TEST_CASE("mean negative log probability") {
  SUBCASE("an exact unit-variance prediction") {
    std::vector<Prediction> preds{{1.0, 1.0}};
    Eigen::VectorXd y(1);
    y << 1.0;
    CHECK(mnlp(preds, y) ==
          doctest::Approx(0.5 * std::log(2.0 * M_PI)).epsilon(1e-15));
  }
  SUBCASE("unit residual at unit variance") {
    std::vector<Prediction> preds{{0.0, 1.0}};
    Eigen::VectorXd y(1);
    y << 1.0;
    CHECK(mnlp(preds, y) ==
          doctest::Approx(0.5 * (1.0 + std::log(2.0 * M_PI))).epsilon(1e-15));
  }
  SUBCASE("variance scaling identity") {
    std::vector<Prediction> preds{{0.3, 0.8}, {1.2, 2.0}, {-0.5, 1.3}};
    Eigen::VectorXd y(3);
    y << 0.0, 1.0, -1.0;
    const double c = 2.5;
    std::vector<Prediction> scaled = preds;
    for (auto& p : scaled) p.variance *= c;
    double mean_resid = 0.0;
    for (int j = 0; j < 3; ++j) {
      const double e = y(j) - preds[j].mean;
      mean_resid += e * e / preds[j].variance;
    }
    mean_resid /= 3.0;
    const double expect = mnlp(preds, y) + 0.5 * std::log(c) -
                          0.5 * (1.0 - 1.0 / c) * mean_resid;
    CHECK(mnlp(scaled, y) == doctest::Approx(expect).epsilon(1e-14));
  }
  SUBCASE("nonpositive variance raises") {
    std::vector<Prediction> preds{{0.0, 0.0}};
    Eigen::VectorXd y(1);
    y << 1.0;
    CHECK_THROWS_AS(mnlp(preds, y), std::invalid_argument);
  }
}
