#include "ssgp/synthetic.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace ssgp {

GeneratedData generate(const SyntheticSpec& spec) {
  if (spec.n < 1 || spec.d < 1 || spec.m_true < 1)
    throw std::invalid_argument("generate: n, d, m_true must be positive");
  if (!(spec.sigma_true > 0.0) || !(spec.gamma_true >= 0.0))
    throw std::invalid_argument("generate: scales must be positive");

  Eigen::VectorXd lambda = spec.lambda_true.size() == 0
                               ? Eigen::VectorXd::Ones(spec.d)
                               : spec.lambda_true;
  if (lambda.size() != spec.d)
    throw std::invalid_argument("generate: lambda_true has wrong length");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> sym_unit(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  GeneratedData out;
  out.basis_true.frequencies.resize(spec.m_true, spec.d);
  for (int r = 0; r < spec.m_true; ++r)
    for (int j = 0; j < spec.d; ++j)
      out.basis_true.frequencies(r, j) = normal(rng);

  const double amp_sd = spec.sigma_true / std::sqrt(double(spec.m_true));
  out.alpha_true.resize(2 * spec.m_true);
  for (int r = 0; r < 2 * spec.m_true; ++r)
    out.alpha_true(r) = amp_sd * normal(rng);

  Eigen::MatrixXd x_model(spec.n, spec.d);
  for (int i = 0; i < spec.n; ++i)
    for (int j = 0; j < spec.d; ++j) x_model(i, j) = sym_unit(rng);

  out.f.resize(spec.n);
  for (int i = 0; i < spec.n; ++i) {
    double fi = 0.0;
    for (int r = 0; r < spec.m_true; ++r) {
      const double arg =
          (out.basis_true.frequencies.row(r).transpose().array() *
           x_model.row(i).transpose().array() * lambda.array())
              .sum();
      fi += out.alpha_true(r) * std::cos(arg) +
            out.alpha_true(spec.m_true + r) * std::sin(arg);
    }
    out.f(i) = fi;
  }

  out.noise.resize(spec.n);
  for (int i = 0; i < spec.n; ++i) out.noise(i) = normal(rng);

  out.y_raw.resize(spec.n);
  switch (spec.mode) {
    case Nonstationarity::none:
      out.y_raw = out.f + spec.gamma_true * out.noise;
      out.x_raw = x_model;
      break;
    case Nonstationarity::piecewise: {
      // Two regions split at x1 = 0: amplitude and noise each differ 10x.
      for (int i = 0; i < spec.n; ++i) {
        const bool high = x_model(i, 0) > 0.0;
        const double amp = high ? 10.0 : 1.0;
        const double noise_fac = high ? 10.0 : 1.0;
        out.y_raw(i) =
            amp * out.f(i) + spec.gamma_true * noise_fac * out.noise(i);
      }
      out.x_raw = x_model;
      break;
    }
    case Nonstationarity::irrelevant_dims: {
      out.y_raw = out.f + spec.gamma_true * out.noise;
      out.x_raw.resize(spec.n, spec.d + spec.irrelevant_count);
      out.x_raw.leftCols(spec.d) = x_model;
      for (int j = 0; j < spec.irrelevant_count; ++j)
        for (int i = 0; i < spec.n; ++i)
          out.x_raw(i, spec.d + j) = unit(rng);
      break;
    }
  }
  out.dataset = make_dataset(out.x_raw, out.y_raw);
  return out;
}

}  // namespace ssgp
