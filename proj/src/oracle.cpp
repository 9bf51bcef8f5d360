#include "ssgp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "ssgp/errors.hpp"

namespace ssgp::oracle {

namespace {

// Matrix square root through the eigendecomposition; accepts PSD inputs
// (tiny negative eigenvalues are clamped).
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success)
    throw NumericalError("psd_sqrt: eigendecomposition failed");
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

OracleReport report_from_sums(double sum, double sumsq, long n,
                              std::uint64_t seed) {
  OracleReport r;
  r.n_samples = n;
  r.seed = seed;
  r.estimate = sum / n;
  const double var = std::max(0.0, sumsq / n - r.estimate * r.estimate);
  r.std_error = std::sqrt(var / n);
  return r;
}

}  // namespace

std::array<OracleReport, 5> mc_trig_moments(const Eigen::VectorXd& t1,
                                            const Eigen::VectorXd& t2,
                                            const GaussianLaw& law,
                                            long n_samples,
                                            std::uint64_t seed) {
  if (n_samples < 1000)
    throw std::invalid_argument("mc_trig_moments: need at least 1e3 samples");
  const auto d = law.mu.size();
  const Eigen::MatrixXd root = psd_sqrt(law.sigma);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  double sum[5] = {0, 0, 0, 0, 0};
  double sumsq[5] = {0, 0, 0, 0, 0};
  Eigen::VectorXd z(d), lambda(d);
  for (long s = 0; s < n_samples; ++s) {
    for (Eigen::Index j = 0; j < d; ++j) z(j) = normal(rng);
    lambda = law.mu + root * z;
    const double a1 = t1.dot(lambda);
    const double a2 = t2.dot(lambda);
    const double vals[5] = {std::cos(a1) * std::cos(a2),
                            std::sin(a1) * std::sin(a2),
                            std::sin(a1) * std::cos(a2), std::cos(a1),
                            std::sin(a1)};
    for (int k = 0; k < 5; ++k) {
      sum[k] += vals[k];
      sumsq[k] += vals[k] * vals[k];
    }
  }
  std::array<OracleReport, 5> out;
  for (int k = 0; k < 5; ++k)
    out[k] = report_from_sums(sum[k], sumsq[k], n_samples, seed);
  return out;
}

Eigen::VectorXd fd_gradient(
    const std::function<double(const Eigen::VectorXd&)>& functional,
    const Eigen::VectorXd& point, double step) {
  if (!(step >= 1e-7 && step <= 1e-3))
    throw std::invalid_argument("fd_gradient: step must be in [1e-7, 1e-3]");
  Eigen::VectorXd grad(point.size());
  Eigen::VectorXd x = point;
  for (Eigen::Index j = 0; j < point.size(); ++j) {
    x(j) = point(j) + step;
    const double up = functional(x);
    x(j) = point(j) - step;
    const double dn = functional(x);
    x(j) = point(j);
    grad(j) = (up - dn) / (2.0 * step);
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Adaptive Gauss-Kronrod in long double for log H.

namespace {

struct LogIntegrandL {
  long double pp2, rho;
  long double operator()(long double u) const {
    return pp2 * std::log(u) - u * u - std::log1p(rho * u * u);
  }
};

// 15-point Kronrod nodes and weights with the embedded 7-point Gauss rule.
const long double kXgk[8] = {
    0.991455371120812639206854697526329L, 0.949107912342758524526189684047851L,
    0.864864423359769072789712788640926L, 0.741531185599394439863864773280788L,
    0.586087235467691130294144838258730L, 0.405845151377397166906606412076961L,
    0.207784955007898467600689403773245L, 0.0L};
const long double kWgk[8] = {
    0.022935322010529224963732008058970L, 0.063092092629978553290700663189204L,
    0.104790010322250183839876322541518L, 0.140653259715525918745189590510238L,
    0.169004726639267902826583426598550L, 0.190350578064785409913256402421014L,
    0.204432940075298892414161999234649L, 0.209482141084727828012999174891714L};
const long double kWg[4] = {
    0.129484966168869693270611432679082L, 0.279705391489276667901467771423780L,
    0.381830050505118944950369775488975L, 0.417959183673469387755102040816327L};

struct Panel {
  long double a, b, integral, error;
};

template <typename F>
Panel gk15(const F& f, long double a, long double b) {
  const long double c = 0.5L * (a + b);
  const long double h = 0.5L * (b - a);
  const long double fc = f(c);
  long double resk = kWgk[7] * fc;
  long double resg = kWg[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const long double dx = h * kXgk[j];
    const long double pair = f(c - dx) + f(c + dx);
    resk += kWgk[j] * pair;
    if (j % 2 == 1) resg += kWg[(j - 1) / 2] * pair;
  }
  return {a, b, resk * h, std::abs((resk - resg) * h)};
}

template <typename F>
long double adaptive_gk(const F& f, long double a, long double b,
                        long double tol) {
  std::vector<Panel> panels{gk15(f, a, b)};
  for (int round = 0; round < 4000; ++round) {
    long double total = 0.0L, err = 0.0L;
    size_t worst = 0;
    for (size_t i = 0; i < panels.size(); ++i) {
      total += panels[i].integral;
      err += panels[i].error;
      if (panels[i].error > panels[worst].error) worst = i;
    }
    if (err <= tol * std::abs(total)) return total;
    const Panel split = panels[worst];
    const long double mid = 0.5L * (split.a + split.b);
    panels[worst] = gk15(f, split.a, mid);
    panels.push_back(gk15(f, mid, split.b));
  }
  throw NumericalError("gk_log_h: adaptive refinement did not converge");
}

}  // namespace

long double gk_log_h(int p, double q, double r, long double tol) {
  if (p < -1 || !(q > 0.0) || !(r > 0.0))
    throw std::invalid_argument("gk_log_h: invalid arguments");
  const LogIntegrandL f{static_cast<long double>(p) + 2.0L,
                        static_cast<long double>(r) / q};

  // Locate the peak by brute-force log-grid scan plus golden-section
  // refinement; no reliance on the production evaluator's analytics.
  const int grid_n = 8000;
  const long double lo = 1e-12L, hi = 2000.0L;
  const long double ratio = std::exp(std::log(hi / lo) / (grid_n - 1));
  long double best_u = lo, best_val = f(lo), u = lo;
  int best_idx = 0;
  std::vector<long double> us(grid_n);
  for (int i = 0; i < grid_n; ++i) {
    us[i] = u;
    const long double val = f(u);
    if (val > best_val) {
      best_val = val;
      best_u = u;
      best_idx = i;
    }
    u *= ratio;
  }
  {
    long double a = us[std::max(0, best_idx - 1)];
    long double b = us[std::min(grid_n - 1, best_idx + 1)];
    const long double gr = 0.5L * (std::sqrt(5.0L) - 1.0L);
    long double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    long double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 200; ++it) {
      if (f1 < f2) {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + gr * (b - a);
        f2 = f(x2);
      } else {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - gr * (b - a);
        f1 = f(x1);
      }
    }
    best_u = 0.5L * (a + b);
    best_val = f(best_u);
  }

  // Integration range: where the log integrand has fallen 80 below peak.
  const long double floor_val = best_val - 80.0L;
  int ia = best_idx, ib = best_idx;
  while (ia > 0 && f(us[ia]) > floor_val) --ia;
  while (ib < grid_n - 1 && f(us[ib]) > floor_val) ++ib;

  const long double peak = best_val;
  const auto g = [&f, peak](long double x) { return std::exp(f(x) - peak); };
  const long double integral = adaptive_gk(g, us[ia], us[ib], tol);
  return -0.5L * (static_cast<long double>(p) + 3.0L) *
             std::log(static_cast<long double>(q)) +
         peak + std::log(integral);
}

// ---------------------------------------------------------------------------
// Inverse-CDF sampling of the half-Cauchy variational factors.

ScaleSampler::ScaleSampler(int p, double c, double a) : p_(p), c_(c), a_(a) {
  if (!(c > 0.0) || !(a > 0.0))
    throw std::invalid_argument("ScaleSampler: c and a must be positive");
  const int grid_n = 4096;
  const double center = std::sqrt(c / std::max(p, 1));
  const double lo = 1e-6 * center, hi = 1e6 * center;
  const double ratio = std::exp(std::log(hi / lo) / (grid_n - 1));

  grid_.resize(grid_n);
  std::vector<double> logd(grid_n);
  double s = lo;
  double peak = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid_n; ++i) {
    grid_[i] = s;
    logd[i] = log_density_unnormalized(s);
    peak = std::max(peak, logd[i]);
    s *= ratio;
  }
  if (!std::isfinite(peak))
    throw NumericalError("ScaleSampler: density grid construction failed");

  cdf_.assign(grid_n, 0.0);
  for (int i = 1; i < grid_n; ++i) {
    const double seg = 0.5 *
                       (std::exp(logd[i] - peak) + std::exp(logd[i - 1] - peak)) *
                       (grid_[i] - grid_[i - 1]);
    cdf_[i] = cdf_[i - 1] + seg;
  }
  const double total = cdf_.back();
  if (!(total > 0.0))
    throw NumericalError("ScaleSampler: zero total mass on the grid");
  for (double& v : cdf_) v /= total;
}

double ScaleSampler::log_density_unnormalized(double s) const {
  return -c_ / (s * s) - (p_ + 2.0) * std::log(s) -
         std::log(a_ * a_ + s * s);
}

double ScaleSampler::sample(double u01) const {
  const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u01);
  if (it == cdf_.begin()) return grid_.front();
  if (it == cdf_.end()) return grid_.back();
  const auto i = static_cast<size_t>(it - cdf_.begin());
  const double c0 = cdf_[i - 1], c1 = cdf_[i];
  const double t = (c1 > c0) ? (u01 - c0) / (c1 - c0) : 0.5;
  return grid_[i - 1] + t * (grid_[i] - grid_[i - 1]);
}

// ---------------------------------------------------------------------------

OracleReport mc_elbo(const VariationalState& state, const Dataset& data,
                     const SpectralBasis& basis, const Priors& priors,
                     long n_samples, std::uint64_t seed) {
  const int n = data.n();
  const int d = data.dim();
  const int m = basis.pairs();
  if (n > 50 || m > 5)
    throw std::invalid_argument("mc_elbo: desk-scale limit is n<=50, m<=5");

  const Eigen::MatrixXd root_alpha = psd_sqrt(state.sigma_alpha);
  const Eigen::MatrixXd root_lambda = psd_sqrt(state.sigma_lambda);
  const Eigen::LLT<Eigen::MatrixXd> llt_a(state.sigma_alpha);
  const Eigen::LLT<Eigen::MatrixXd> llt_l(state.sigma_lambda);
  const Eigen::LLT<Eigen::MatrixXd> llt_0(priors.sigma_lambda0);
  if (llt_a.info() != Eigen::Success || llt_l.info() != Eigen::Success ||
      llt_0.info() != Eigen::Success)
    throw NumericalError("mc_elbo: covariance factorization failed");

  const auto spd_logdet = [](const Eigen::LLT<Eigen::MatrixXd>& llt) {
    return 2.0 *
           Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  };
  const double logdet_a = spd_logdet(llt_a);
  const double logdet_l = spd_logdet(llt_l);
  const double logdet_0 = spd_logdet(llt_0);

  const double a_s = priors.a_sigma, a_g = priors.a_gamma;
  const double log_h_sigma =
      static_cast<double>(gk_log_h(2 * m - 2, state.c_sigma, a_s * a_s));
  const double log_h_gamma =
      static_cast<double>(gk_log_h(n - 2, state.c_gamma, a_g * a_g));

  const ScaleSampler sigma_sampler(2 * m - 2, state.c_sigma, a_s);
  const ScaleSampler gamma_sampler(n - 2, state.c_gamma, a_g);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double log2pi = std::log(2.0 * M_PI);

  double sum = 0.0, sumsq = 0.0;
  Eigen::VectorXd z_alpha(2 * m), z_lambda(d), alpha(2 * m), lambda(d);
  Eigen::VectorXd zrow(2 * m);
  for (long s = 0; s < n_samples; ++s) {
    for (int j = 0; j < 2 * m; ++j) z_alpha(j) = normal(rng);
    for (int j = 0; j < d; ++j) z_lambda(j) = normal(rng);
    alpha = state.mu_alpha + root_alpha * z_alpha;
    lambda = state.mu_lambda + root_lambda * z_lambda;
    const double sig = sigma_sampler.sample(uniform(rng));
    const double gam = gamma_sampler.sample(uniform(rng));

    // log p(y | alpha, lambda, gamma), Z by direct trigonometry
    double sse = 0.0;
    for (int i = 0; i < n; ++i) {
      double fi = 0.0;
      for (int r = 0; r < m; ++r) {
        const double arg = (basis.frequencies.row(r).transpose().array() *
                            data.X.row(i).transpose().array() *
                            lambda.array())
                               .sum();
        fi += alpha(r) * std::cos(arg) + alpha(m + r) * std::sin(arg);
      }
      const double e = data.y(i) - fi;
      sse += e * e;
    }
    double logp = -0.5 * n * (log2pi + std::log(gam * gam)) -
                  0.5 * sse / (gam * gam);
    // log p(alpha | sigma)
    logp += -m * std::log(2.0 * M_PI * sig * sig / m) -
            0.5 * m * alpha.squaredNorm() / (sig * sig);
    // log p(lambda)
    {
      const Eigen::VectorXd dl = lambda - priors.mu_lambda0;
      logp += -0.5 * d * log2pi - 0.5 * logdet_0 -
              0.5 * dl.dot(llt_0.solve(dl));
    }
    // log p(sigma), log p(gamma)
    logp += std::log(2.0 * a_s / M_PI) - std::log(a_s * a_s + sig * sig);
    logp += std::log(2.0 * a_g / M_PI) - std::log(a_g * a_g + gam * gam);

    // log q(theta)
    double logq = 0.0;
    {
      const Eigen::VectorXd da = alpha - state.mu_alpha;
      logq += -m * log2pi - 0.5 * logdet_a - 0.5 * da.dot(llt_a.solve(da));
      const Eigen::VectorXd dl = lambda - state.mu_lambda;
      logq += -0.5 * d * log2pi - 0.5 * logdet_l -
              0.5 * dl.dot(llt_l.solve(dl));
    }
    logq += -state.c_sigma / (sig * sig) - 2.0 * m * std::log(sig) -
            std::log(a_s * a_s + sig * sig) - log_h_sigma;
    logq += -state.c_gamma / (gam * gam) - n * std::log(gam) -
            std::log(a_g * a_g + gam * gam) - log_h_gamma;

    const double v = logp - logq;
    sum += v;
    sumsq += v * v;
  }
  return report_from_sums(sum, sumsq, n_samples, seed);
}

}  // namespace ssgp::oracle
