#include "plremix/plr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "plremix/kernels.hpp"

namespace plremix {

namespace {

using Mask = std::vector<uint64_t>;

Mask make_mask(int classes) { return Mask((classes + 63) / 64, 0); }

void set_bit(Mask& m, int bit) { m[bit >> 6] |= uint64_t(1) << (bit & 63); }

bool disjoint(const Mask& a, const Mask& b) {
  for (size_t w = 0; w < a.size(); ++w)
    if (a[w] & b[w]) return false;
  return true;
}

void check_batch(const ContrastiveBatch& cb) {
  if (cb.tau <= 0.0) throw std::invalid_argument("contrastive loss: tau must be positive");
  if (cb.q1.rows != cb.q2.rows || cb.q1.cols != cb.q2.cols)
    throw std::invalid_argument("contrastive loss: view shape mismatch");
}

/// Shared InfoNCE core over explicit negative lists.
ContrastiveOut infonce_core(const Mat& q1, const Mat& q2, double tau,
                            const std::vector<std::vector<int>>& neighbors) {
  const int b = q1.rows;
  const int d = q1.cols;
  Mat sims;
  kernels::pairwise_dots(q1, q2, sims);

  ContrastiveOut out;
  out.g1 = Mat(b, d);
  out.g2 = Mat(b, d);
  double total = 0.0;
  const double inv_b = b > 0 ? 1.0 / b : 0.0;

  for (int i = 0; i < b; ++i) {
    const auto& neg = neighbors[i];
    if (neg.empty()) continue;
    const double a_pos = sims(i, i) / tau;
    double m = a_pos;
    for (int j : neg) m = std::max(m, sims(i, j) / tau);
    double z = std::exp(a_pos - m);
    for (int j : neg) z += std::exp(sims(i, j) / tau - m);
    total += -(a_pos - m - std::log(z));

    const double w_pos = std::exp(a_pos - m) / z;
    double* g1r = out.g1.row(i);
    const double coef_pos = (w_pos - 1.0) / tau * inv_b;
    for (int k = 0; k < d; ++k) {
      g1r[k] += coef_pos * q2(i, k);
      out.g2(i, k) += coef_pos * q1(i, k);
    }
    for (int j : neg) {
      const double w_j = std::exp(sims(i, j) / tau - m) / z;
      const double coef = w_j / tau * inv_b;
      for (int k = 0; k < d; ++k) {
        g1r[k] += coef * q2(j, k);
        out.g2(j, k) += coef * q1(i, k);
      }
    }
  }
  out.loss = total * inv_b;
  return out;
}

}  // namespace

std::vector<int> topk_indices(const double* t_row, int classes, int kappa) {
  if (kappa < 1 || kappa > classes) throw std::invalid_argument("topk_indices: kappa out of range");
  std::vector<int> order(classes);
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + kappa, order.end(), [&](int a, int b) {
    if (t_row[a] != t_row[b]) return t_row[a] > t_row[b];
    return a < b;
  });
  order.resize(kappa);
  std::sort(order.begin(), order.end());
  return order;
}

NegativeSets reliable_negative_set(const Mat& t, const std::vector<int>& labels, int kappa,
                                   bool use_labels) {
  const int b = t.rows;
  const int classes = t.cols;
  if (static_cast<int>(labels.size()) != b)
    throw std::invalid_argument("reliable_negative_set: label count mismatch");

  std::vector<Mask> masks(b, make_mask(classes));
  for (int i = 0; i < b; ++i) {
    for (int c : topk_indices(t.row(i), classes, kappa)) set_bit(masks[i], c);
    if (use_labels) {
      if (labels[i] < 0 || labels[i] >= classes)
        throw std::invalid_argument("reliable_negative_set: label out of range");
      set_bit(masks[i], labels[i]);
    }
  }

  NegativeSets ns;
  ns.kappa = kappa;
  ns.used_labels = use_labels;
  ns.neighbors.assign(b, {});
#pragma omp parallel for schedule(static)
  for (int i = 0; i < b; ++i) {
    for (int j = 0; j < b; ++j) {
      if (j == i) continue;
      if (disjoint(masks[i], masks[j])) ns.neighbors[i].push_back(j);
    }
  }
  return ns;
}

ContrastiveOut plr_infonce(const ContrastiveBatch& cb, const NegativeSets& ns) {
  check_batch(cb);
  if (ns.size() != cb.q1.rows)
    throw std::invalid_argument("plr_infonce: negative sets not from this batch");
  return infonce_core(cb.q1, cb.q2, cb.tau, ns.neighbors);
}

ContrastiveOut plr_flatnce(const ContrastiveBatch& cb, const NegativeSets& ns) {
  check_batch(cb);
  if (ns.size() != cb.q1.rows)
    throw std::invalid_argument("plr_flatnce: negative sets not from this batch");
  const int b = cb.q1.rows;
  const int d = cb.q1.cols;
  Mat sims;
  kernels::pairwise_dots(cb.q1, cb.q2, sims);

  ContrastiveOut out;
  out.g1 = Mat(b, d);
  out.g2 = Mat(b, d);
  int active = 0;
  const double inv_b = b > 0 ? 1.0 / b : 0.0;

  for (int i = 0; i < b; ++i) {
    const auto& neg = ns.neighbors[i];
    if (neg.empty()) continue;
    ++active;
    // relative logits d_j = (s_ij - s_ii) / tau
    double m = -std::numeric_limits<double>::infinity();
    for (int j : neg) m = std::max(m, (sims(i, j) - sims(i, i)) / cb.tau);
    double z = 0.0;
    for (int j : neg) z += std::exp((sims(i, j) - sims(i, i)) / cb.tau - m);

    double* g1r = out.g1.row(i);
    for (int j : neg) {
      const double v_j = std::exp((sims(i, j) - sims(i, i)) / cb.tau - m) / z;
      const double coef = v_j / cb.tau * inv_b;
      for (int k = 0; k < d; ++k) {
        g1r[k] += coef * (cb.q2(j, k) - cb.q2(i, k));
        out.g2(j, k) += coef * cb.q1(i, k);
      }
    }
    // the v_j sum to one, so the positive view collects -q1_i / tau
    for (int k = 0; k < d; ++k) out.g2(i, k) -= cb.q1(i, k) / cb.tau * inv_b;
  }
  out.loss = static_cast<double>(active) * inv_b;
  return out;
}

ContrastiveOut vanilla_infonce(const ContrastiveBatch& cb) {
  check_batch(cb);
  const int b = cb.q1.rows;
  std::vector<std::vector<int>> all(b);
  for (int i = 0; i < b; ++i) {
    all[i].reserve(b - 1);
    for (int j = 0; j < b; ++j)
      if (j != i) all[i].push_back(j);
  }
  return infonce_core(cb.q1, cb.q2, cb.tau, all);
}

ContrastiveOut scl_loss(const ContrastiveBatch& cb, const std::vector<int>& pseudo_labels) {
  check_batch(cb);
  const int b = cb.q1.rows;
  const int d = cb.q1.cols;
  if (static_cast<int>(pseudo_labels.size()) != b)
    throw std::invalid_argument("scl_loss: label count mismatch");
  Mat sims;
  kernels::pairwise_dots(cb.q1, cb.q2, sims);

  ContrastiveOut out;
  out.g1 = Mat(b, d);
  out.g2 = Mat(b, d);
  double total = 0.0;
  const double inv_b = b > 0 ? 1.0 / b : 0.0;

  for (int i = 0; i < b; ++i) {
    std::vector<int> pos, neg;
    for (int j = 0; j < b; ++j) {
      if (j == i) continue;
      (pseudo_labels[j] == pseudo_labels[i] ? pos : neg).push_back(j);
    }
    if (pos.empty() || neg.empty()) continue;

    double m_neg = -std::numeric_limits<double>::infinity();
    for (int n : neg) m_neg = std::max(m_neg, sims(i, n) / cb.tau);

    const double inv_pos = 1.0 / static_cast<double>(pos.size());
    double* g1r = out.g1.row(i);
    for (int p : pos) {
      const double a_p = sims(i, p) / cb.tau;
      const double m = std::max(a_p, m_neg);
      double z = std::exp(a_p - m);
      for (int n : neg) z += std::exp(sims(i, n) / cb.tau - m);
      total += -(a_p - m - std::log(z)) * inv_pos;

      const double w_p = std::exp(a_p - m) / z;
      const double coef_p = (w_p - 1.0) / cb.tau * inv_pos * inv_b;
      for (int k = 0; k < d; ++k) {
        g1r[k] += coef_p * cb.q2(p, k);
        out.g2(p, k) += coef_p * cb.q1(i, k);
      }
      for (int n : neg) {
        const double w_n = std::exp(sims(i, n) / cb.tau - m) / z;
        const double coef_n = w_n / cb.tau * inv_pos * inv_b;
        for (int k = 0; k < d; ++k) {
          g1r[k] += coef_n * cb.q2(n, k);
          out.g2(n, k) += coef_n * cb.q1(i, k);
        }
      }
    }
  }
  out.loss = total * inv_b;
  return out;
}

}  // namespace plremix
