#include "plremix/sst.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "plremix/rng.hpp"

namespace plremix {

namespace {
constexpr double kProbClamp = 1e-12;
}

Vec sharpen(const Vec& p, double temperature) {
  if (temperature <= 0.0) throw std::invalid_argument("sharpen: temperature must be positive");
  const int c = static_cast<int>(p.size());
  if (c == 0) throw std::invalid_argument("sharpen: empty vector");
  // computed as a tempered softmax of log p for stability at small T
  Vec a(c);
  double m = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < c; ++k) {
    a[k] = std::log(std::max(p[k], 1e-300)) / temperature;
    m = std::max(m, a[k]);
  }
  double z = 0.0;
  Vec out(c);
  for (int k = 0; k < c; ++k) {
    out[k] = std::exp(a[k] - m);
    z += out[k];
  }
  for (int k = 0; k < c; ++k) out[k] /= z;
  return out;
}

Vec refine_labeled(int y, int classes, double w, const Mat& t_weak, double temperature) {
  if (y < 0 || y >= classes) throw std::invalid_argument("refine_labeled: label out of range");
  if (w < 0.0 || w > 1.0) throw std::invalid_argument("refine_labeled: w must be in [0, 1]");
  if (t_weak.rows < 1 || t_weak.cols != classes)
    throw std::invalid_argument("refine_labeled: bad prediction block");
  Vec mix(classes, 0.0);
  for (int v = 0; v < t_weak.rows; ++v)
    for (int k = 0; k < classes; ++k) mix[k] += t_weak(v, k);
  for (int k = 0; k < classes; ++k) mix[k] *= (1.0 - w) / t_weak.rows;
  mix[y] += w;
  return sharpen(mix, temperature);
}

Vec guess_unlabeled(const Mat& t_all, double temperature) {
  if (t_all.rows < 1) throw std::invalid_argument("guess_unlabeled: no predictions");
  Vec mean(t_all.cols, 0.0);
  for (int v = 0; v < t_all.rows; ++v)
    for (int k = 0; k < t_all.cols; ++k) mean[k] += t_all(v, k);
  for (double& m : mean) m /= t_all.rows;
  return sharpen(mean, temperature);
}

MixResult mixup(const Mat& x, const Mat& targets, double beta, uint64_t seed, bool max_lambda) {
  if (beta <= 0.0) throw std::invalid_argument("mixup: beta must be positive");
  if (x.rows != targets.rows) throw std::invalid_argument("mixup: row count mismatch");
  const int n = x.rows;
  Rng rng(seed);
  MixResult out;
  out.lambda.resize(n);
  for (int i = 0; i < n; ++i) {
    double lam = rng.beta(beta, beta);
    if (max_lambda) lam = std::max(lam, 1.0 - lam);
    out.lambda[i] = lam;
  }
  out.partner = rng.permutation(n);
  out.x = Mat(n, x.cols);
  out.y = Mat(n, targets.cols);
  for (int i = 0; i < n; ++i) {
    const int r = out.partner[i];
    const double lam = out.lambda[i];
    for (int j = 0; j < x.cols; ++j) out.x(i, j) = lam * x(i, j) + (1.0 - lam) * x(r, j);
    for (int j = 0; j < targets.cols; ++j)
      out.y(i, j) = lam * targets(i, j) + (1.0 - lam) * targets(r, j);
  }
  return out;
}

TermOut cross_entropy_loss(const Mat& t, const Mat& targets) {
  check_same_shape(t, targets, "cross_entropy_loss");
  TermOut out;
  out.grad = Mat(t.rows, t.cols);
  if (t.rows == 0) return out;
  const double inv_n = 1.0 / t.rows;
  for (int i = 0; i < t.rows; ++i)
    for (int c = 0; c < t.cols; ++c) {
      const double p = std::max(t(i, c), kProbClamp);
      out.value -= targets(i, c) * std::log(p) * inv_n;
      out.grad(i, c) = -targets(i, c) / p * inv_n;
    }
  return out;
}

TermOut mse_loss(const Mat& t, const Mat& targets) {
  check_same_shape(t, targets, "mse_loss");
  TermOut out;
  out.grad = Mat(t.rows, t.cols);
  if (t.rows == 0) return out;
  const double inv_n = 1.0 / t.rows;
  for (int i = 0; i < t.rows; ++i)
    for (int c = 0; c < t.cols; ++c) {
      const double d = targets(i, c) - t(i, c);
      out.value += d * d * inv_n;
      out.grad(i, c) = 2.0 * (t(i, c) - targets(i, c)) * inv_n;
    }
  return out;
}

TermOut uniform_prior_reg(const Mat& t) {
  if (t.rows == 0) throw std::invalid_argument("uniform_prior_reg: empty batch");
  const int c = t.cols;
  const double pi = 1.0 / c;
  Vec mean(c, 0.0);
  for (int i = 0; i < t.rows; ++i)
    for (int k = 0; k < c; ++k) mean[k] += t(i, k);
  for (double& m : mean) m /= t.rows;

  TermOut out;
  out.grad = Mat(t.rows, c);
  for (int k = 0; k < c; ++k) {
    const double mk = std::max(mean[k], kProbClamp);
    out.value += pi * std::log(pi / mk);
    const double g = -pi / mk / t.rows;
    for (int i = 0; i < t.rows; ++i) out.grad(i, k) = g;
  }
  return out;
}

SstOut sst_loss(const Mat& t_labeled, const Mat& y_labeled, const Mat& t_unlabeled,
                const Mat& y_unlabeled, double lambda_u) {
  const int nl = t_labeled.rows;
  const int nu = t_unlabeled.rows;
  if (nl == 0 && nu == 0) throw std::invalid_argument("sst_loss: both sets empty");
  const int c = nl > 0 ? t_labeled.cols : t_unlabeled.cols;
  if ((nl > 0 && nu > 0) && t_labeled.cols != t_unlabeled.cols)
    throw std::invalid_argument("sst_loss: class count mismatch");

  SstOut out;
  out.g_labeled = Mat(nl, c);
  out.g_unlabeled = Mat(nu, c);

  if (nl > 0) {
    const TermOut ce = cross_entropy_loss(t_labeled, y_labeled);
    out.ce_term = ce.value;
    out.g_labeled = ce.grad;
  }
  if (nu > 0) {
    const TermOut mse = mse_loss(t_unlabeled, y_unlabeled);
    out.mse_term = mse.value;
    out.g_unlabeled = mse.grad;
    for (double& g : out.g_unlabeled.data) g *= lambda_u;
  }

  // regularizer runs over the combined mixed batch
  Mat combined(nl + nu, c);
  for (int i = 0; i < nl; ++i)
    std::copy(t_labeled.row(i), t_labeled.row(i) + c, combined.row(i));
  for (int i = 0; i < nu; ++i)
    std::copy(t_unlabeled.row(i), t_unlabeled.row(i) + c, combined.row(nl + i));
  const TermOut reg = uniform_prior_reg(combined);
  out.reg_term = reg.value;
  for (int i = 0; i < nl; ++i)
    for (int k = 0; k < c; ++k) out.g_labeled(i, k) += reg.grad(i, k);
  for (int i = 0; i < nu; ++i)
    for (int k = 0; k < c; ++k) out.g_unlabeled(i, k) += reg.grad(nl + i, k);

  out.loss = out.ce_term + lambda_u * out.mse_term + out.reg_term;
  return out;
}

}  // namespace plremix
