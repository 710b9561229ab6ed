#pragma once

#include <cstdint>
#include <vector>

#include "plremix/matrix.hpp"

namespace plremix {

/// Per-sample classification / prototype-agreement loss pair.
struct LossPair {
  double l_cls = 0.0;
  double l_proto = 0.0;
};

/// l_cls = -log t_i[y_i], l_proto = -log s_i[y_i], probabilities clamped at
/// 1e-12 before the log.
std::vector<LossPair> loss_pairs(const Mat& t, const Mat& s, const std::vector<int>& y);

/// Min-max normalization per coordinate over the population; a coordinate
/// with zero range maps to all zeros.
std::vector<LossPair> normalize_losses(const std::vector<LossPair>& pairs);

struct GaussComp2d {
  double mean[2] = {0.0, 0.0};
  double cov[2][2] = {{1.0, 0.0}, {0.0, 1.0}};
  double weight = 0.5;
};

struct Gmm2d {
  GaussComp2d comp[2];
  std::vector<double> loglik_history;  // log-likelihood before each M-step
  int iters = 0;

  double final_loglik() const { return loglik_history.empty() ? 0.0 : loglik_history.back(); }
};

/// Two-component EM with a deterministic separation-seeking start (component
/// means at the coordinate-wise 10th and 90th percentile points). Every
/// M-step clamps the covariance eigenvalues at a floor, which keeps the
/// log-likelihood ascent exact while preventing spike collapse. The seed
/// argument is kept for interface stability; the fit itself is deterministic.
Gmm2d fit_gmm2d(const std::vector<LossPair>& points, int max_iters = 100, double tol = 1e-6,
                uint64_t seed = 0);

/// Posterior of the component with the smaller mean norm (ties toward the
/// first component).
Vec clean_posterior(const Gmm2d& gmm, const std::vector<LossPair>& points);

struct Partition {
  Vec w;                       // clean posteriors
  std::vector<int> clean_set;  // indices with w > threshold
  std::vector<int> noisy_set;  // the rest
  double threshold = 0.5;
};

Partition partition(const Vec& w, double threshold = 0.5);

struct Gmm1d {
  double mean[2] = {0.0, 0.0};
  double var[2] = {1.0, 1.0};
  double weight[2] = {0.5, 0.5};
  std::vector<double> loglik_history;
  int iters = 0;
};

/// One-dimensional specialization used by the ablation baseline; applied to
/// the classification losses only. Clean component = smaller mean.
Gmm1d fit_gmm1d(const Vec& values, int max_iters = 100, double tol = 1e-6);

Vec clean_posterior_1d(const Gmm1d& gmm, const Vec& values);

}  // namespace plremix
