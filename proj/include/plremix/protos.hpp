#pragma once

#include <vector>

#include "plremix/matrix.hpp"

namespace plremix {

/// Momentum class prototypes with self-adaptive confidence thresholds.
struct ProtoState {
  Mat prototypes;      // classes x proj_dim, unit-norm rows
  double tau_g = 0.0;  // global confidence threshold
  Vec tau_c_tilde;     // raw per-class thresholds before normalization
  double eta = 0.99;   // EMA momentum
  double tau_s = 0.1;  // similarity temperature
  double alpha = 0.5;  // pseudo-soft-label mixing weight

  int num_classes() const { return prototypes.rows; }

  /// tau_c^k = (tau_c_tilde^k / max_k' tau_c_tilde^k') * tau_g.
  Vec class_thresholds() const;
};

/// Prototypes start as normalized per-class means of the embeddings grouped
/// by noisy label; thresholds start at 1/C. Throws if a class is empty or a
/// class mean has (numerically) zero norm.
ProtoState init_prototypes(const Mat& q_all, const std::vector<int>& noisy_labels,
                           int num_classes, double eta, double tau_s, double alpha);

/// s_i = softmax_k(<q_i, p_k> / tau_s).
Mat similarity(const Mat& q, const ProtoState& ps);

/// y_hat = alpha * t + (1 - alpha) * s, rowwise.
Mat pseudo_soft_label(const Mat& t, const Mat& s, double alpha);

/// EMA update of the global and raw class thresholds from a full epoch of
/// pseudo soft labels.
void update_thresholds(ProtoState& ps, const Mat& y_hat);

struct ConfidentItem {
  int index;
  int label;  // argmax of the pseudo soft label
};

/// Samples whose max pseudo soft label exceeds their class threshold.
std::vector<ConfidentItem> confident_set(const Mat& y_hat, const ProtoState& ps);

/// p <- Normalize(eta * p + (1 - eta) * Normalize(q_i)), applied sequentially
/// in the order given. Row k of q corresponds to items[k].
void update_prototypes(ProtoState& ps, const Mat& q, const std::vector<ConfidentItem>& items);

/// CSV export for diagnostics: header class,p0,...,p{d-1}, one row per class.
std::string prototypes_to_csv(const ProtoState& ps);

}  // namespace plremix
