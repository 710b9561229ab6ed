#pragma once

#include <cstdint>
#include <vector>

#include "plremix/matrix.hpp"

namespace plremix {

/// p_c^{1/T} / sum_c p_c^{1/T}. T = 1 is the identity; T -> 0 approaches the
/// one-hot argmax.
Vec sharpen(const Vec& p, double temperature);

/// Labeled-branch pseudo target: Sharpen(w * OneHot(y) + (1-w) * mean of the
/// weak-view predictions; T). t_weak holds one prediction row per view.
Vec refine_labeled(int y, int classes, double w, const Mat& t_weak, double temperature);

/// Unlabeled-branch pseudo target: Sharpen(mean over all rows; T). t_all
/// stacks the weak-view predictions of both networks.
Vec guess_unlabeled(const Mat& t_all, double temperature);

struct MixResult {
  Mat x;                     // mixed features
  Mat y;                     // mixed targets
  Vec lambda;                // mixing coefficient per row
  std::vector<int> partner;  // permutation used
};

/// lambda_i ~ Beta(beta, beta) per row, partner drawn as one random
/// permutation; outputs are lambda * row + (1 - lambda) * partner row.
/// With max_lambda the coefficient is replaced by max(lambda, 1 - lambda).
MixResult mixup(const Mat& x, const Mat& targets, double beta, uint64_t seed,
                bool max_lambda = false);

/// Individual loss terms. Gradients are w.r.t. the probability rows; chain
/// through softmax_vjp to reach logits.
struct TermOut {
  double value = 0.0;
  Mat grad;
};

/// -(1/n) sum_i sum_c y_ic log t_ic (log clamped at 1e-12).
TermOut cross_entropy_loss(const Mat& t, const Mat& targets);

/// (1/n) sum_i ||y_i - t_i||^2.
TermOut mse_loss(const Mat& t, const Mat& targets);

/// KL(uniform || mean prediction); zero iff the mean prediction is uniform.
TermOut uniform_prior_reg(const Mat& t);

struct SstOut {
  double loss = 0.0;
  double ce_term = 0.0;
  double mse_term = 0.0;
  double reg_term = 0.0;
  Mat g_labeled;    // d loss / d t over labeled rows
  Mat g_unlabeled;  // d loss / d t over unlabeled rows
};

/// CE on the labeled rows + lambda_u * MSE on the unlabeled rows + the
/// uniform-prior regularizer over the combined rows. Either set may be empty
/// (its term drops); both empty is an error.
SstOut sst_loss(const Mat& t_labeled, const Mat& y_labeled, const Mat& t_unlabeled,
                const Mat& y_unlabeled, double lambda_u);

}  // namespace plremix
