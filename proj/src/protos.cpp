#include "plremix/protos.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "plremix/csv.hpp"
#include "plremix/kernels.hpp"

namespace plremix {

namespace {
constexpr double kZeroNorm = 1e-12;
}

Vec ProtoState::class_thresholds() const {
  const double mx = *std::max_element(tau_c_tilde.begin(), tau_c_tilde.end());
  Vec out(tau_c_tilde.size());
  for (size_t k = 0; k < tau_c_tilde.size(); ++k)
    out[k] = mx > 0.0 ? tau_c_tilde[k] / mx * tau_g : 0.0;
  return out;
}

ProtoState init_prototypes(const Mat& q_all, const std::vector<int>& noisy_labels,
                           int num_classes, double eta, double tau_s, double alpha) {
  if (num_classes < 1) throw std::invalid_argument("init_prototypes: no classes");
  if (static_cast<int>(noisy_labels.size()) != q_all.rows)
    throw std::invalid_argument("init_prototypes: label count mismatch");
  ProtoState ps;
  ps.eta = eta;
  ps.tau_s = tau_s;
  ps.alpha = alpha;
  ps.prototypes = Mat(num_classes, q_all.cols);
  std::vector<int> counts(num_classes, 0);
  for (int i = 0; i < q_all.rows; ++i) {
    const int k = noisy_labels[i];
    if (k < 0 || k >= num_classes) throw std::invalid_argument("init_prototypes: label out of range");
    ++counts[k];
    for (int j = 0; j < q_all.cols; ++j) ps.prototypes(k, j) += q_all(i, j);
  }
  for (int k = 0; k < num_classes; ++k) {
    if (counts[k] == 0)
      throw std::invalid_argument("init_prototypes: class " + std::to_string(k) + " is empty");
    double* row = ps.prototypes.row(k);
    for (int j = 0; j < q_all.cols; ++j) row[j] /= counts[k];
    const double n = l2_norm(row, q_all.cols);
    if (n < kZeroNorm)
      throw std::invalid_argument("init_prototypes: degenerate zero-norm mean for class " +
                                  std::to_string(k));
    for (int j = 0; j < q_all.cols; ++j) row[j] /= n;
  }
  ps.tau_g = 1.0 / num_classes;
  ps.tau_c_tilde.assign(num_classes, 1.0 / num_classes);
  return ps;
}

Mat similarity(const Mat& q, const ProtoState& ps) {
  if (q.cols != ps.prototypes.cols) throw std::invalid_argument("similarity: width mismatch");
  Mat dots;
  kernels::pairwise_dots(q, ps.prototypes, dots);
  for (double& v : dots.data) v /= ps.tau_s;
  Mat s;
  kernels::softmax_rows(dots, s);
  return s;
}

Mat pseudo_soft_label(const Mat& t, const Mat& s, double alpha) {
  check_same_shape(t, s, "pseudo_soft_label");
  if (alpha < 0.0 || alpha > 1.0)
    throw std::invalid_argument("pseudo_soft_label: alpha must be in [0, 1]");
  Mat y(t.rows, t.cols);
  for (size_t k = 0; k < t.data.size(); ++k)
    y.data[k] = alpha * t.data[k] + (1.0 - alpha) * s.data[k];
  return y;
}

void update_thresholds(ProtoState& ps, const Mat& y_hat) {
  const int c = ps.num_classes();
  if (y_hat.cols != c) throw std::invalid_argument("update_thresholds: class count mismatch");
  if (y_hat.rows == 0) throw std::invalid_argument("update_thresholds: empty batch");
  double mean_max = 0.0;
  Vec mean_class(c, 0.0);
  for (int i = 0; i < y_hat.rows; ++i) {
    const double* r = y_hat.row(i);
    double mx = r[0];
    for (int k = 1; k < c; ++k) mx = std::max(mx, r[k]);
    mean_max += mx;
    for (int k = 0; k < c; ++k) mean_class[k] += r[k];
  }
  mean_max /= y_hat.rows;
  ps.tau_g = ps.eta * ps.tau_g + (1.0 - ps.eta) * mean_max;
  for (int k = 0; k < c; ++k)
    ps.tau_c_tilde[k] = ps.eta * ps.tau_c_tilde[k] + (1.0 - ps.eta) * mean_class[k] / y_hat.rows;
}

std::vector<ConfidentItem> confident_set(const Mat& y_hat, const ProtoState& ps) {
  const int c = ps.num_classes();
  if (y_hat.cols != c) throw std::invalid_argument("confident_set: class count mismatch");
  const Vec tau_c = ps.class_thresholds();
  std::vector<ConfidentItem> items;
  for (int i = 0; i < y_hat.rows; ++i) {
    const double* r = y_hat.row(i);
    int arg = 0;
    for (int k = 1; k < c; ++k)
      if (r[k] > r[arg]) arg = k;
    if (r[arg] > tau_c[arg]) items.push_back({i, arg});
  }
  return items;
}

std::string prototypes_to_csv(const ProtoState& ps) {
  std::string out = "class";
  for (int j = 0; j < ps.prototypes.cols; ++j) out += ",p" + std::to_string(j);
  out += '\n';
  for (int k = 0; k < ps.num_classes(); ++k) {
    out += std::to_string(k);
    for (int j = 0; j < ps.prototypes.cols; ++j)
      out += ',' + fmt_double(ps.prototypes(k, j));
    out += '\n';
  }
  return out;
}

void update_prototypes(ProtoState& ps, const Mat& q, const std::vector<ConfidentItem>& items) {
  if (q.rows != static_cast<int>(items.size()))
    throw std::invalid_argument("update_prototypes: row count mismatch");
  if (!items.empty() && q.cols != ps.prototypes.cols)
    throw std::invalid_argument("update_prototypes: width mismatch");
  const int d = ps.prototypes.cols;
  Vec qn(d);
  for (size_t k = 0; k < items.size(); ++k) {
    const int label = items[k].label;
    if (label < 0 || label >= ps.num_classes())
      throw std::invalid_argument("update_prototypes: label out of range");
    const double* qr = q.row(static_cast<int>(k));
    const double n = l2_norm(qr, d);
    if (n < kZeroNorm) continue;  // a zero embedding carries no direction
    for (int j = 0; j < d; ++j) qn[j] = qr[j] / n;
    double* p = ps.prototypes.row(label);
    for (int j = 0; j < d; ++j) p[j] = ps.eta * p[j] + (1.0 - ps.eta) * qn[j];
    const double pn = l2_norm(p, d);
    if (pn < kZeroNorm) throw std::runtime_error("update_prototypes: prototype collapsed to zero");
    for (int j = 0; j < d; ++j) p[j] /= pn;
  }
}

}  // namespace plremix
