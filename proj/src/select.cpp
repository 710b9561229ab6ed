#include "plremix/select.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace plremix {

namespace {

constexpr double kProbClamp = 1e-12;
// Keeps EM from collapsing the clean component into a spike when one loss
// coordinate concentrates near zero; sized for min-max normalized losses.
constexpr double kCovFloor = 5e-4;
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double percentile(Vec sorted_values, double p) {
  const size_t n = sorted_values.size();
  const size_t idx = static_cast<size_t>(std::lround(p * static_cast<double>(n - 1)));
  return sorted_values[idx];
}

// Constrained M-step covariance: clamps the eigenvalues of the ML estimate
// at the floor. This is the exact maximizer of the EM Q-function subject to
// Sigma >= floor * I, so the log-likelihood ascent property survives the
// regularization (a floor added to the diagonal does not guarantee that).
void clamp_cov2(double& a, double& b, double& c) {
  const double mean = 0.5 * (a + c);
  const double radius = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  const double lo = mean - radius;
  if (lo >= kCovFloor) return;
  const double hi = std::max(mean + radius, kCovFloor);
  // eigenvector for the larger eigenvalue
  double vx, vy;
  if (std::abs(b) > 1e-300) {
    vx = b;
    vy = hi - a;
  } else if (a >= c) {
    vx = 1.0;
    vy = 0.0;
  } else {
    vx = 0.0;
    vy = 1.0;
  }
  const double n = std::sqrt(vx * vx + vy * vy);
  vx /= n;
  vy /= n;
  a = hi * vx * vx + kCovFloor * vy * vy;
  b = (hi - kCovFloor) * vx * vy;
  c = hi * vy * vy + kCovFloor * vx * vx;
}

double logpdf2(const GaussComp2d& g, double x0, double x1) {
  const double a = g.cov[0][0], b = g.cov[0][1], c = g.cov[1][1];
  const double det = a * c - b * b;
  const double d0 = x0 - g.mean[0];
  const double d1 = x1 - g.mean[1];
  const double quad = (c * d0 * d0 - 2.0 * b * d0 * d1 + a * d1 * d1) / det;
  return -kLog2Pi - 0.5 * std::log(det) - 0.5 * quad;
}

double logpdf1(double mean, double var, double x) {
  const double d = x - mean;
  return -0.5 * kLog2Pi - 0.5 * std::log(var) - 0.5 * d * d / var;
}

}  // namespace

std::vector<LossPair> loss_pairs(const Mat& t, const Mat& s, const std::vector<int>& y) {
  check_same_shape(t, s, "loss_pairs");
  if (static_cast<int>(y.size()) != t.rows)
    throw std::invalid_argument("loss_pairs: label count mismatch");
  std::vector<LossPair> out(t.rows);
  for (int i = 0; i < t.rows; ++i) {
    const int label = y[i];
    if (label < 0 || label >= t.cols) throw std::invalid_argument("loss_pairs: label out of range");
    out[i].l_cls = -std::log(std::max(t(i, label), kProbClamp));
    out[i].l_proto = -std::log(std::max(s(i, label), kProbClamp));
  }
  return out;
}

std::vector<LossPair> normalize_losses(const std::vector<LossPair>& pairs) {
  if (pairs.size() < 2) throw std::invalid_argument("normalize_losses: need at least two points");
  double min_c = pairs[0].l_cls, max_c = pairs[0].l_cls;
  double min_p = pairs[0].l_proto, max_p = pairs[0].l_proto;
  for (const auto& lp : pairs) {
    min_c = std::min(min_c, lp.l_cls);
    max_c = std::max(max_c, lp.l_cls);
    min_p = std::min(min_p, lp.l_proto);
    max_p = std::max(max_p, lp.l_proto);
  }
  const double range_c = max_c - min_c;
  const double range_p = max_p - min_p;
  std::vector<LossPair> out(pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) {
    out[i].l_cls = range_c > 0.0 ? (pairs[i].l_cls - min_c) / range_c : 0.0;
    out[i].l_proto = range_p > 0.0 ? (pairs[i].l_proto - min_p) / range_p : 0.0;
  }
  return out;
}

Gmm2d fit_gmm2d(const std::vector<LossPair>& points, int max_iters, double tol, uint64_t seed) {
  (void)seed;
  const int n = static_cast<int>(points.size());
  if (n < 4) throw std::invalid_argument("fit_gmm2d: need at least 4 points");
  for (const auto& p : points)
    if (!std::isfinite(p.l_cls) || !std::isfinite(p.l_proto))
      throw std::invalid_argument("fit_gmm2d: non-finite point");

  Vec xs(n), ys(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = points[i].l_cls;
    ys[i] = points[i].l_proto;
  }
  Vec sx = xs, sy = ys;
  std::sort(sx.begin(), sx.end());
  std::sort(sy.begin(), sy.end());
  if (sx.front() == sx.back() && sy.front() == sy.back())
    throw std::invalid_argument("fit_gmm2d: all points identical");

  // isotropic shared start: the average coordinate variance; an anisotropic
  // cloud covariance can start EM in a razor-thin basin on near-collinear data
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double var = 0.0;
  for (int i = 0; i < n; ++i)
    var += (xs[i] - mx) * (xs[i] - mx) + (ys[i] - my) * (ys[i] - my);
  var = std::max(var / (2.0 * n), kCovFloor);

  Gmm2d gmm;
  gmm.comp[0].mean[0] = percentile(sx, 0.1);
  gmm.comp[0].mean[1] = percentile(sy, 0.1);
  gmm.comp[1].mean[0] = percentile(sx, 0.9);
  gmm.comp[1].mean[1] = percentile(sy, 0.9);
  for (int j = 0; j < 2; ++j) {
    gmm.comp[j].cov[0][0] = var;
    gmm.comp[j].cov[0][1] = gmm.comp[j].cov[1][0] = 0.0;
    gmm.comp[j].cov[1][1] = var;
    gmm.comp[j].weight = 0.5;
  }

  Mat resp(n, 2);
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iters; ++iter) {
    // E-step (also evaluates the log-likelihood at the current parameters)
    Vec pt_ll(n);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      double lw[2];
      for (int j = 0; j < 2; ++j)
        lw[j] = std::log(gmm.comp[j].weight) + logpdf2(gmm.comp[j], xs[i], ys[i]);
      const double m = std::max(lw[0], lw[1]);
      const double z = std::exp(lw[0] - m) + std::exp(lw[1] - m);
      resp(i, 0) = std::exp(lw[0] - m) / z;
      resp(i, 1) = std::exp(lw[1] - m) / z;
      pt_ll[i] = m + std::log(z);
    }
    double ll = 0.0;
    for (int i = 0; i < n; ++i) ll += pt_ll[i];
    gmm.loglik_history.push_back(ll);
    gmm.iters = iter + 1;
    if (iter > 0 && ll - prev_ll < tol) break;
    prev_ll = ll;

    // M-step
    for (int j = 0; j < 2; ++j) {
      double nj = 0.0, sx0 = 0.0, sx1 = 0.0;
      for (int i = 0; i < n; ++i) {
        nj += resp(i, j);
        sx0 += resp(i, j) * xs[i];
        sx1 += resp(i, j) * ys[i];
      }
      if (nj < 1e-10) {
        gmm.comp[j].weight = nj / n;  // component died; keep its shape
        continue;
      }
      gmm.comp[j].weight = nj / n;
      gmm.comp[j].mean[0] = sx0 / nj;
      gmm.comp[j].mean[1] = sx1 / nj;
      double v00 = 0.0, v01 = 0.0, v11 = 0.0;
      for (int i = 0; i < n; ++i) {
        const double d0 = xs[i] - gmm.comp[j].mean[0];
        const double d1 = ys[i] - gmm.comp[j].mean[1];
        v00 += resp(i, j) * d0 * d0;
        v01 += resp(i, j) * d0 * d1;
        v11 += resp(i, j) * d1 * d1;
      }
      v00 /= nj;
      v01 /= nj;
      v11 /= nj;
      clamp_cov2(v00, v01, v11);
      gmm.comp[j].cov[0][0] = v00;
      gmm.comp[j].cov[0][1] = gmm.comp[j].cov[1][0] = v01;
      gmm.comp[j].cov[1][1] = v11;
    }
  }
  return gmm;
}

Vec clean_posterior(const Gmm2d& gmm, const std::vector<LossPair>& points) {
  const double n0 = std::hypot(gmm.comp[0].mean[0], gmm.comp[0].mean[1]);
  const double n1 = std::hypot(gmm.comp[1].mean[0], gmm.comp[1].mean[1]);
  if (n0 == n1) std::fprintf(stderr, "clean_posterior: mean-norm tie, using first component\n");
  const int clean = n0 <= n1 ? 0 : 1;
  const int n = static_cast<int>(points.size());
  Vec w(n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    double lw[2];
    for (int j = 0; j < 2; ++j)
      lw[j] = std::log(gmm.comp[j].weight) +
              logpdf2(gmm.comp[j], points[i].l_cls, points[i].l_proto);
    const double m = std::max(lw[0], lw[1]);
    const double z = std::exp(lw[0] - m) + std::exp(lw[1] - m);
    w[i] = std::exp(lw[clean] - m) / z;
  }
  return w;
}

Partition partition(const Vec& w, double threshold) {
  Partition part;
  part.w = w;
  part.threshold = threshold;
  for (size_t i = 0; i < w.size(); ++i) {
    if (w[i] < 0.0 || w[i] > 1.0) throw std::invalid_argument("partition: posterior out of [0,1]");
    (w[i] > threshold ? part.clean_set : part.noisy_set).push_back(static_cast<int>(i));
  }
  return part;
}

Gmm1d fit_gmm1d(const Vec& values, int max_iters, double tol) {
  const int n = static_cast<int>(values.size());
  if (n < 4) throw std::invalid_argument("fit_gmm1d: need at least 4 points");
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("fit_gmm1d: non-finite value");
  Vec sorted = values;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back())
    throw std::invalid_argument("fit_gmm1d: all points identical");

  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var = std::max(var / n, kCovFloor);

  Gmm1d gmm;
  gmm.mean[0] = percentile(sorted, 0.1);
  gmm.mean[1] = percentile(sorted, 0.9);
  gmm.var[0] = gmm.var[1] = var;
  gmm.weight[0] = gmm.weight[1] = 0.5;

  Mat resp(n, 2);
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iters; ++iter) {
    double ll = 0.0;
    for (int i = 0; i < n; ++i) {
      double lw[2];
      for (int j = 0; j < 2; ++j)
        lw[j] = std::log(gmm.weight[j]) + logpdf1(gmm.mean[j], gmm.var[j], values[i]);
      const double m = std::max(lw[0], lw[1]);
      const double z = std::exp(lw[0] - m) + std::exp(lw[1] - m);
      resp(i, 0) = std::exp(lw[0] - m) / z;
      resp(i, 1) = std::exp(lw[1] - m) / z;
      ll += m + std::log(z);
    }
    gmm.loglik_history.push_back(ll);
    gmm.iters = iter + 1;
    if (iter > 0 && ll - prev_ll < tol) break;
    prev_ll = ll;

    for (int j = 0; j < 2; ++j) {
      double nj = 0.0, sx = 0.0;
      for (int i = 0; i < n; ++i) {
        nj += resp(i, j);
        sx += resp(i, j) * values[i];
      }
      if (nj < 1e-10) {
        gmm.weight[j] = nj / n;
        continue;
      }
      gmm.weight[j] = nj / n;
      gmm.mean[j] = sx / nj;
      double v = 0.0;
      for (int i = 0; i < n; ++i)
        v += resp(i, j) * (values[i] - gmm.mean[j]) * (values[i] - gmm.mean[j]);
      gmm.var[j] = std::max(v / nj, kCovFloor);
    }
  }
  return gmm;
}

Vec clean_posterior_1d(const Gmm1d& gmm, const Vec& values) {
  const int clean = gmm.mean[0] <= gmm.mean[1] ? 0 : 1;
  Vec w(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    double lw[2];
    for (int j = 0; j < 2; ++j)
      lw[j] = std::log(gmm.weight[j]) + logpdf1(gmm.mean[j], gmm.var[j], values[i]);
    const double m = std::max(lw[0], lw[1]);
    const double z = std::exp(lw[0] - m) + std::exp(lw[1] - m);
    w[i] = std::exp(lw[clean] - m) / z;
  }
  return w;
}

}  // namespace plremix
