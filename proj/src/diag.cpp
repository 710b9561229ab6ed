#include "plremix/diag.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace plremix {

double entanglement(const Vec& g1, const Vec& g2) {
  if (g1.size() != g2.size()) throw std::invalid_argument("entanglement: length mismatch");
  const double n2 = dot(g2.data(), g2.data(), static_cast<int>(g2.size()));
  if (n2 <= 0.0) throw std::invalid_argument("entanglement: zero reference gradient");
  return dot(g1.data(), g2.data(), static_cast<int>(g1.size())) / n2;
}

double magnitude_ratio(const Vec& g1, const Vec& g2) {
  if (g1.size() != g2.size()) throw std::invalid_argument("magnitude_ratio: length mismatch");
  const double n2 = l2_norm(g2.data(), static_cast<int>(g2.size()));
  if (n2 <= 0.0) throw std::invalid_argument("magnitude_ratio: zero reference gradient");
  return l2_norm(g1.data(), static_cast<int>(g1.size())) / n2;
}

NegPairStats neg_pair_stats(const NegativeSets& ns, const std::vector<int>& true_labels) {
  const int b = ns.size();
  if (static_cast<int>(true_labels.size()) != b)
    throw std::invalid_argument("neg_pair_stats: label count mismatch");
  NegPairStats st;
  st.total_pairs = static_cast<long long>(b) * (b - 1);
  for (int i = 0; i < b; ++i)
    for (int j : ns.neighbors[i]) {
      ++st.selected_pairs;
      if (true_labels[i] != true_labels[j]) ++st.correct_pairs;
    }
  st.select_ratio =
      st.total_pairs > 0 ? static_cast<double>(st.selected_pairs) / st.total_pairs : 0.0;
  if (st.selected_pairs > 0)
    st.correct_ratio = static_cast<double>(st.correct_pairs) / st.selected_pairs;
  return st;
}

double separation_auc(const Vec& w, const std::vector<bool>& is_clean) {
  const size_t n = w.size();
  if (is_clean.size() != n) throw std::invalid_argument("separation_auc: length mismatch");
  size_t n_clean = 0;
  for (bool c : is_clean) n_clean += c ? 1 : 0;
  const size_t n_noisy = n - n_clean;
  if (n_clean == 0 || n_noisy == 0)
    throw std::invalid_argument("separation_auc: both classes must be present");

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return w[a] < w[b]; });

  // midranks for ties
  Vec rank(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && w[order[j + 1]] == w[order[i]]) ++j;
    const double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }

  double rank_sum = 0.0;
  for (size_t k = 0; k < n; ++k)
    if (is_clean[k]) rank_sum += rank[k];
  const double nc = static_cast<double>(n_clean);
  return (rank_sum - nc * (nc + 1.0) / 2.0) / (nc * static_cast<double>(n_noisy));
}

}  // namespace plremix
