#pragma once

#include <optional>
#include <vector>

#include "plremix/matrix.hpp"
#include "plremix/plr.hpp"

namespace plremix {

/// E = (g1 . g2) / ||g2||^2: how strongly g1 projects onto g2.
double entanglement(const Vec& g1, const Vec& g2);

/// R = ||g1|| / ||g2||.
double magnitude_ratio(const Vec& g1, const Vec& g2);

struct NegPairStats {
  double select_ratio = 0.0;                 // selected / all ordered non-self pairs
  std::optional<double> correct_ratio;       // fraction of selected pairs whose true labels
                                             // differ; empty when nothing was selected
  long long selected_pairs = 0;
  long long correct_pairs = 0;
  long long total_pairs = 0;
};

/// Diagnostics only: reads true labels.
NegPairStats neg_pair_stats(const NegativeSets& ns, const std::vector<int>& true_labels);

/// Rank-based AUC of w as a score for the clean class, ties averaged.
/// Throws when either class is absent.
double separation_auc(const Vec& w, const std::vector<bool>& is_clean);

}  // namespace plremix
