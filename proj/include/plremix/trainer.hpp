#pragma once

#include <array>
#include <string>
#include <vector>

#include "plremix/config.hpp"
#include "plremix/datagen.hpp"
#include "plremix/net.hpp"
#include "plremix/protos.hpp"

namespace plremix {

/// Piecewise-constant kappa lookup over post-warmup epochs. The label-union
/// form of the negative sets is active while kappa >= 2 (the early stage).
std::pair<int, bool> kappa_at(int epoch, const std::vector<std::pair<int, int>>& schedule);

struct RunState {
  std::array<NetState, 2> nets;
  std::array<SgdState, 2> opt;
  std::array<ProtoState, 2> protos;
  bool protos_ready = false;
  int epoch = 0;  // global epoch counter; warmup epochs come first
};

struct EpochMetrics {
  int epoch = 0;
  int net = 0;  // the network trained in this row
  double test_acc = 0.0;
  double sel_auc_2d = 0.0;
  double sel_auc_1d = 0.0;
  double neg_select_ratio = 0.0;
  double neg_correct_ratio = 0.0;
  double ent_median = 0.0;
  double mag_ratio_median = 0.0;
  double loss_total = 0.0;
  double loss_sst = 0.0;
  double loss_plr = 0.0;
};

struct Fig4Row {
  int epoch = 0, net = 0, batch = 0;
  double ent_plr = 0.0, ratio_plr = 0.0;
  double ent_vanilla = 0.0, ratio_vanilla = 0.0;
};

struct Fig5Row {
  int epoch = 0, net = 0;
  double select_ratio = 0.0;
  double correct_ratio = 0.0;  // nan when no pairs were selected
};

struct Fig6Row {
  int index = 0;
  double l_cls = 0.0, l_proto = 0.0, w = 0.0;
  bool is_true_clean = false;
};

/// Co-divide instrumentation: which network's losses produced the partition
/// used to train which network.
struct SelectionEvent {
  int epoch = 0;
  int selector = 0;
  int trainee = 0;
};

struct RunResult {
  std::vector<EpochMetrics> history;
  std::vector<Fig4Row> fig4;
  std::vector<Fig5Row> fig5;
  std::vector<Fig6Row> fig6;
  int fig6_epoch = -1;  // global epoch the fig6 snapshot was taken at
  std::vector<SelectionEvent> selection_events;
  std::array<std::string, 2> prototypes_csv;  // final prototype matrices
  std::vector<double> ensemble_acc;  // per epoch, averaged softmax of both nets

  std::string metrics_csv() const;
  std::string fig4_csv() const;
  std::string fig5_csv() const;
  std::string fig6_csv() const;

  /// Per-epoch test accuracy averaged over the two networks' rows.
  std::vector<double> epoch_mean_acc() const;

  /// Best/Last reporting uses the two-network ensemble (averaged softmax),
  /// the usual co-training inference; falls back to per-net means when no
  /// ensemble accuracies were recorded.
  double best_acc() const;
  /// Mean of the final 10 epochs (or all of them when fewer).
  double last_acc() const;
};

/// Owns one training run. cfg must have been passed through
/// resolve_defaults(); test may be null (accuracy then falls back to the
/// training features scored against the held-aside true labels).
class Trainer {
 public:
  Trainer(const Config& cfg, const Dataset& train, const Dataset* test);

  /// CE + standard contrastive training of both networks for the configured
  /// number of warmup epochs, then prototype initialization.
  void warmup();

  /// One full co-divide epoch (both directions). post_epoch indexes from the
  /// end of warmup.
  void train_epoch(int post_epoch);

  /// Plain cross-entropy epoch for one network; the ce_baseline arm.
  void ce_epoch(int net_id);

  /// Snapshots the current prototype matrices into the result.
  void export_prototypes();

  /// Appends the two-network ensemble accuracy for the current epoch.
  void record_ensemble_accuracy();

  const RunState& state() const { return state_; }
  RunState& mutable_state() { return state_; }
  const RunResult& result() const { return result_; }
  RunResult take_result() { return std::move(result_); }

 private:
  void warmup_epoch(int net_id);
  double current_lr(int post_epoch) const;
  double evaluate_accuracy(int net_id) const;
  void append_row(int net_id, double sel_auc2, double sel_auc1, double sel_ratio,
                  double corr_ratio, const std::vector<double>& ents,
                  const std::vector<double>& ratios, double sum_sst, double sum_crl,
                  int batches);

  const Config cfg_;
  const Dataset& train_;
  const Dataset* test_;
  RunState state_;
  RunResult result_;
};

/// Warmup plus the full epoch loop; the one-call entry point used by the CLI.
/// Throws std::runtime_error on a non-finite loss (the NaN abort path).
RunResult run(const Config& cfg, const Dataset& train, const Dataset* test = nullptr);

}  // namespace plremix
