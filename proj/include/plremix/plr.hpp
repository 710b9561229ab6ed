#pragma once

#include <vector>

#include "plremix/matrix.hpp"

namespace plremix {

/// Per-anchor reliable negative indices within a batch. Built from disjoint
/// top-kappa prediction index sets; symmetric and self-free by construction.
struct NegativeSets {
  std::vector<std::vector<int>> neighbors;
  int kappa = 0;
  bool used_labels = false;

  int size() const { return static_cast<int>(neighbors.size()); }
};

/// Indices of the kappa largest entries of a probability row, ties broken by
/// lower index. Returned sorted ascending.
std::vector<int> topk_indices(const double* t_row, int classes, int kappa);

/// Without labels the candidate sets are the top-kappa index sets; with
/// labels each set is unioned with the sample's given label before the
/// disjointness test. neighbors[i] holds every j != i whose set does not
/// intersect anchor i's.
NegativeSets reliable_negative_set(const Mat& t, const std::vector<int>& labels, int kappa,
                                   bool use_labels);

/// Two strong-augmentation views of one batch. Anchors are view-1 rows;
/// positives and negatives are drawn from view 2.
struct ContrastiveBatch {
  Mat q1;                  // b x proj_dim, unit-norm rows
  Mat q2;                  // b x proj_dim, unit-norm rows
  Mat t;                   // b x classes prediction probabilities
  std::vector<int> labels; // given (noisy) labels
  double tau = 0.25;
};

struct ContrastiveOut {
  double loss = 0.0;
  Mat g1;  // gradient w.r.t. q1
  Mat g2;  // gradient w.r.t. q2
};

/// Per-anchor InfoNCE restricted to the reliable negative set; anchors with
/// an empty set contribute zero. Returns the mean over all anchors.
ContrastiveOut plr_infonce(const ContrastiveBatch& cb, const NegativeSets& ns);

/// Flat formulation: per anchor the forward value is exactly 1 (0 for empty
/// sets) while the gradient equals that of
///   l_i = logsumexp_j ((<q1_i, q2_j> - <q1_i, q2_i>) / tau)
/// averaged over anchors.
ContrastiveOut plr_flatnce(const ContrastiveBatch& cb, const NegativeSets& ns);

/// Standard InfoNCE: negatives are all other anchors' view-2 embeddings.
ContrastiveOut vanilla_infonce(const ContrastiveBatch& cb);

/// Supervised-contrastive ablation: positives are other samples with the
/// same pseudo label, negatives the rest; anchors with an empty positive or
/// negative set contribute zero.
ContrastiveOut scl_loss(const ContrastiveBatch& cb, const std::vector<int>& pseudo_labels);

}  // namespace plremix
