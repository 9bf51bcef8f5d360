#include "ssgp/neighborhood.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "ssgp/adaptive.hpp"
#include "ssgp/basis_select.hpp"
#include "ssgp/errors.hpp"

namespace ssgp {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<int> knn(const Eigen::MatrixXd& X, const Eigen::VectorXd& x_star,
                     const NeighborhoodSpec& spec) {
  const int n = static_cast<int>(X.rows());
  if (spec.k < 1 || spec.k > n)
    throw std::invalid_argument("knn: k must be in [1, n]");
  if (x_star.size() != X.cols() || spec.weights.size() != X.cols())
    throw std::invalid_argument("knn: dimension mismatch");
  if (!spec.weights.allFinite() || (spec.weights.array() < 0.0).any())
    throw std::invalid_argument("knn: weights must be finite and nonnegative");

  Eigen::VectorXd dist2(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd diff = x_star - X.row(i).transpose();
    dist2(i) = diff.array().square().matrix().dot(spec.weights);
  }
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  const auto closer = [&dist2](int a, int b) {
    return dist2(a) < dist2(b) || (dist2(a) == dist2(b) && a < b);
  };
  std::partial_sort(idx.begin(), idx.begin() + spec.k, idx.end(), closer);
  idx.resize(spec.k);
  return idx;
}

namespace {

struct StageFit {
  SpectralBasis basis;
  FitResult fit;
};

StageFit fit_stage(const Dataset& subset, const Priors& priors,
                   const FitConfig& config, int pairs, int restarts,
                   std::uint64_t seed) {
  StageFit out;
  SelectedBasis sel =
      select_basis(subset, priors, config, pairs, seed, restarts);
  out.basis = std::move(sel.basis);
  out.fit = fit_adaptive(subset, out.basis, priors, config, sel.warm_state);
  return out;
}

}  // namespace

LocalResult local_predict(const Dataset& train,
                          const Eigen::VectorXd& x_star_raw,
                          const LocalOptions& options, const Priors& priors,
                          const FitConfig& config, std::uint64_t seed_override) {
  if (options.k > train.n())
    throw std::invalid_argument("local_predict: k exceeds training size");
  if (options.k < 5)
    throw std::invalid_argument("local_predict: k must be >= 5");
  if (!x_star_raw.allFinite())
    throw std::invalid_argument("local_predict: query point is not finite");

  const Eigen::VectorXd x = rescale_point(train, x_star_raw);
  LocalResult out;

  // Stage 1: Euclidean neighbourhood.
  NeighborhoodSpec euclid{options.k, Eigen::VectorXd::Ones(train.dim())};
  out.neighbors1 = knn(train.X, x, euclid);
  const Dataset sub1 = subset_dataset(train, out.neighbors1);
  StageFit m1 = fit_stage(sub1, priors, config, options.m, options.restarts,
                          mix_seed(seed_override, 1));
  out.basis1 = std::move(m1.basis);
  out.stage1 = std::move(m1.fit);
  out.stage1_prediction =
      predictive(out.stage1.state, out.basis1, sub1, priors, x_star_raw);

  // Stage 2: neighbourhood under the squared fitted lengthscales.
  Eigen::VectorXd weights =
      out.stage1.state.mu_lambda.array().square().matrix();
  if (out.stage1.state.mu_lambda.cwiseAbs().maxCoeff() < 1e-8) {
    out.euclidean_fallback = true;
    weights = Eigen::VectorXd::Ones(train.dim());
  }
  out.neighbors2 = knn(train.X, x, {options.k, weights});
  const Dataset sub2 = subset_dataset(train, out.neighbors2);

  if (options.reuse_stage1_basis) {
    out.basis2 = out.basis1;
    out.stage2 = fit_adaptive(sub2, out.basis2, priors, config);
  } else {
    StageFit m2 = fit_stage(sub2, priors, config, options.m, options.restarts,
                            mix_seed(seed_override, 2));
    out.basis2 = std::move(m2.basis);
    out.stage2 = std::move(m2.fit);
  }
  out.prediction =
      predictive(out.stage2.state, out.basis2, sub2, priors, x_star_raw);
  return out;
}

LocalResult local_predict(const Dataset& train,
                          const Eigen::VectorXd& x_star_raw,
                          const LocalOptions& options, const Priors& priors,
                          const FitConfig& config) {
  return local_predict(train, x_star_raw, options, priors, config,
                       config.seed);
}

BatchLocalResult batch_local_predict(const Dataset& train,
                                     const Eigen::MatrixXd& X_star_raw,
                                     const LocalOptions& options,
                                     const Priors& priors,
                                     const FitConfig& config, int threads) {
  const int nq = static_cast<int>(X_star_raw.rows());
  BatchLocalResult out;
  out.queries.resize(nq);

  auto run_one = [&](int qi) {
    BatchQueryRecord rec;
    try {
      const LocalResult r =
          local_predict(train, X_star_raw.row(qi).transpose(), options,
                        priors, config, mix_seed(config.seed, qi));
      rec.ok = true;
      rec.prediction = r.prediction;
      rec.stage1_prediction = r.stage1_prediction;
      rec.euclidean_fallback = r.euclidean_fallback;
      rec.iterations1 = r.stage1.iterations;
      rec.iterations2 = r.stage2.iterations;
      rec.lb1 = r.stage1.final_lower_bound;
      rec.lb2 = r.stage2.final_lower_bound;
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
    out.queries[qi] = std::move(rec);
  };

  if (threads <= 1 || nq <= 1) {
    for (int qi = 0; qi < nq; ++qi) run_one(qi);
  } else {
    std::atomic<int> next{0};
    auto worker = [&] {
      for (int qi = next.fetch_add(1); qi < nq; qi = next.fetch_add(1))
        run_one(qi);
    };
    std::vector<std::thread> pool;
    const int nt = std::min(threads, nq);
    pool.reserve(nt);
    for (int i = 0; i < nt; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& q : out.queries)
    if (!q.ok) ++out.failures;
  return out;
}

}  // namespace ssgp
