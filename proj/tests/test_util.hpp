#pragma once

// Shared helpers for the unit and acceptance suites: finite-difference
// gradient checking against the analytic backward pass, plus small random
// fixtures. The reference computations here stay independent of the library
// internals they check.

#include <cmath>
#include <functional>

#include "plremix/matrix.hpp"
#include "plremix/net.hpp"
#include "plremix/plr.hpp"
#include "plremix/rng.hpp"

namespace plremix::testing {

struct FdReport {
  double max_rel_err = 0.0;
  int worst_index = -1;
};

/// Central finite differences of loss(net) over every parameter, compared to
/// the analytic flat gradient. Relative error uses the larger magnitude as
/// denominator; values below 1e-8 on both sides count as exact.
inline FdReport finite_diff_check(NetState net, const std::function<double(const NetState&)>& loss,
                                  const Vec& analytic, double h = 1e-5) {
  Vec params = net.flatten();
  FdReport rep;
  for (size_t k = 0; k < params.size(); ++k) {
    const double orig = params[k];
    const double step = h * std::max(1.0, std::abs(orig));
    params[k] = orig + step;
    net.unflatten(params);
    const double up = loss(net);
    params[k] = orig - step;
    net.unflatten(params);
    const double down = loss(net);
    params[k] = orig;
    const double fd = (up - down) / (2.0 * step);
    const double an = analytic[k];
    const double denom = std::max(std::abs(fd), std::abs(an));
    const double rel = denom < 1e-8 ? 0.0 : std::abs(fd - an) / denom;
    if (rel > rep.max_rel_err) {
      rep.max_rel_err = rel;
      rep.worst_index = static_cast<int>(k);
    }
  }
  net.unflatten(params);
  return rep;
}

/// Same as above but differentiating w.r.t. the entries of a matrix input.
/// The step balances truncation against roundoff for the 1e-6 tolerance the
/// embedding-level checks use.
inline FdReport finite_diff_check_mat(Mat m, const std::function<double(const Mat&)>& loss,
                                      const Mat& analytic, double h = 5e-5) {
  FdReport rep;
  for (size_t k = 0; k < m.data.size(); ++k) {
    const double orig = m.data[k];
    m.data[k] = orig + h;
    const double up = loss(m);
    m.data[k] = orig - h;
    const double down = loss(m);
    m.data[k] = orig;
    const double fd = (up - down) / (2.0 * h);
    const double an = analytic.data[k];
    const double denom = std::max(std::abs(fd), std::abs(an));
    const double rel = denom < 1e-8 ? 0.0 : std::abs(fd - an) / denom;
    if (rel > rep.max_rel_err) {
      rep.max_rel_err = rel;
      rep.worst_index = static_cast<int>(k);
    }
  }
  return rep;
}

inline Mat random_mat(int r, int c, Rng& rng, double scale = 1.0) {
  Mat m(r, c);
  for (double& v : m.data) v = scale * rng.normal();
  return m;
}

inline Mat random_unit_rows(int r, int c, Rng& rng) {
  Mat m = random_mat(r, c, rng);
  for (int i = 0; i < r; ++i) {
    const double n = l2_norm(m.row(i), c);
    for (int j = 0; j < c; ++j) m(i, j) /= n;
  }
  return m;
}

inline Mat random_prob_rows(int r, int c, Rng& rng) {
  Mat m(r, c);
  for (int i = 0; i < r; ++i) {
    double sum = 0.0;
    for (int j = 0; j < c; ++j) {
      m(i, j) = -std::log(1.0 - rng.uniform());
      sum += m(i, j);
    }
    for (int j = 0; j < c; ++j) m(i, j) /= sum;
  }
  return m;
}

/// Reference value of the flat-formulation objective: the mean over anchors
/// of logsumexp_j((<q1_i, q2_j> - <q1_i, q2_i>) / tau). Empty sets add zero.
inline double flat_objective(const Mat& q1, const Mat& q2, const NegativeSets& ns, double tau) {
  double total = 0.0;
  for (int i = 0; i < q1.rows; ++i) {
    const auto& neg = ns.neighbors[i];
    if (neg.empty()) continue;
    double m = -1e300;
    for (int j : neg)
      m = std::max(m, (dot(q1.row(i), q2.row(j), q1.cols) - dot(q1.row(i), q2.row(i), q1.cols)) /
                          tau);
    double z = 0.0;
    for (int j : neg)
      z += std::exp((dot(q1.row(i), q2.row(j), q1.cols) - dot(q1.row(i), q2.row(i), q1.cols)) /
                        tau -
                    m);
    total += m + std::log(z);
  }
  return q1.rows > 0 ? total / q1.rows : 0.0;
}

/// Brute-force reliable negative sets: full sort top-k per row, then a
/// quadratic pairwise disjointness scan.
inline std::vector<std::vector<int>> brute_force_negatives(const Mat& t,
                                                           const std::vector<int>& labels,
                                                           int kappa, bool use_labels) {
  const int b = t.rows;
  const int classes = t.cols;
  std::vector<std::vector<int>> sets(b);
  for (int i = 0; i < b; ++i) {
    std::vector<std::pair<double, int>> scored;
    for (int c = 0; c < classes; ++c) scored.push_back({t(i, c), c});
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      return a.first > b.first;  // stable keeps lower index first on ties
    });
    for (int k = 0; k < kappa; ++k) sets[i].push_back(scored[k].second);
    if (use_labels) sets[i].push_back(labels[i]);
  }
  std::vector<std::vector<int>> out(b);
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < b; ++j) {
      if (i == j) continue;
      bool overlap = false;
      for (int a : sets[i])
        for (int c : sets[j])
          if (a == c) overlap = true;
      if (!overlap) out[i].push_back(j);
    }
  return out;
}

}  // namespace plremix::testing
