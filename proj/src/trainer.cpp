#include "plremix/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "plremix/csv.hpp"
#include "plremix/diag.hpp"
#include "plremix/plr.hpp"
#include "plremix/rng.hpp"
#include "plremix/select.hpp"
#include "plremix/sst.hpp"

namespace plremix {

namespace {

enum StreamTag : uint64_t {
  kNetInit = 1,
  kShuffle = 2,
  kWeakView = 3,
  kStrongView = 4,
  kMixup = 5,
  kSelectView = 6,
  kConfView = 7,
  kWarmupWeak = 8,
  kWarmupStrong = 9,
};

double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

double median(std::vector<double> v) {
  if (v.empty()) return nan_value();
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<int> all_indices(int n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

void add_scaled(Vec& acc, const Vec& g, double s) {
  for (size_t k = 0; k < acc.size(); ++k) acc[k] += s * g[k];
}

Mat gather_rows(const Mat& src, std::span<const int> rows) {
  Mat out(static_cast<int>(rows.size()), src.cols);
  for (size_t i = 0; i < rows.size(); ++i)
    std::copy(src.row(rows[i]), src.row(rows[i]) + src.cols, out.row(static_cast<int>(i)));
  return out;
}

int argmax_row(const double* r, int n) {
  int arg = 0;
  for (int k = 1; k < n; ++k)
    if (r[k] > r[arg]) arg = k;
  return arg;
}

double safe_ent(const Vec& g1, const Vec& g2) {
  const double n2 = dot(g2.data(), g2.data(), static_cast<int>(g2.size()));
  if (n2 <= 0.0) return nan_value();
  return dot(g1.data(), g2.data(), static_cast<int>(g1.size())) / n2;
}

double safe_ratio(const Vec& g1, const Vec& g2) {
  const double n2 = l2_norm(g2.data(), static_cast<int>(g2.size()));
  if (n2 <= 0.0) return nan_value();
  return l2_norm(g1.data(), static_cast<int>(g1.size())) / n2;
}

}  // namespace

std::pair<int, bool> kappa_at(int epoch, const std::vector<std::pair<int, int>>& schedule) {
  if (schedule.empty()) throw std::invalid_argument("kappa_at: empty schedule");
  if (epoch < 0) throw std::invalid_argument("kappa_at: negative epoch");
  int kappa = schedule.front().second;
  for (const auto& [start, k] : schedule)
    if (epoch >= start) kappa = k;
  return {kappa, kappa >= 2};
}

std::string RunResult::metrics_csv() const {
  std::ostringstream out;
  out << "epoch,net,test_acc,sel_auc_2d,sel_auc_1d,neg_select_ratio,neg_correct_ratio,"
         "ent_median,mag_ratio_median,loss_total,loss_sst,loss_plr\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << r.net << ',' << fmt_double(r.test_acc) << ','
        << fmt_double(r.sel_auc_2d) << ',' << fmt_double(r.sel_auc_1d) << ','
        << fmt_double(r.neg_select_ratio) << ',' << fmt_double(r.neg_correct_ratio) << ','
        << fmt_double(r.ent_median) << ',' << fmt_double(r.mag_ratio_median) << ','
        << fmt_double(r.loss_total) << ',' << fmt_double(r.loss_sst) << ','
        << fmt_double(r.loss_plr) << '\n';
  }
  return out.str();
}

std::string RunResult::fig4_csv() const {
  std::ostringstream out;
  out << "epoch,net,batch,ent_plr,ratio_plr,ent_vanilla,ratio_vanilla\n";
  for (const auto& r : fig4)
    out << r.epoch << ',' << r.net << ',' << r.batch << ',' << fmt_double(r.ent_plr) << ','
        << fmt_double(r.ratio_plr) << ',' << fmt_double(r.ent_vanilla) << ','
        << fmt_double(r.ratio_vanilla) << '\n';
  return out.str();
}

std::string RunResult::fig5_csv() const {
  std::ostringstream out;
  out << "epoch,net,select_ratio,correct_ratio\n";
  for (const auto& r : fig5)
    out << r.epoch << ',' << r.net << ',' << fmt_double(r.select_ratio) << ','
        << fmt_double(r.correct_ratio) << '\n';
  return out.str();
}

std::string RunResult::fig6_csv() const {
  std::ostringstream out;
  out << "index,l_cls,l_proto,w,is_true_clean\n";
  for (const auto& r : fig6)
    out << r.index << ',' << fmt_double(r.l_cls) << ',' << fmt_double(r.l_proto) << ','
        << fmt_double(r.w) << ',' << (r.is_true_clean ? 1 : 0) << '\n';
  return out.str();
}

std::vector<double> RunResult::epoch_mean_acc() const {
  int max_epoch = -1;
  for (const auto& r : history) max_epoch = std::max(max_epoch, r.epoch);
  std::vector<double> sums(max_epoch + 1, 0.0);
  std::vector<int> counts(max_epoch + 1, 0);
  for (const auto& r : history) {
    sums[r.epoch] += r.test_acc;
    ++counts[r.epoch];
  }
  std::vector<double> out;
  for (int e = 0; e <= max_epoch; ++e)
    if (counts[e] > 0) out.push_back(sums[e] / counts[e]);
  return out;
}

double RunResult::best_acc() const {
  const auto acc = ensemble_acc.empty() ? epoch_mean_acc() : ensemble_acc;
  return acc.empty() ? nan_value() : *std::max_element(acc.begin(), acc.end());
}

double RunResult::last_acc() const {
  const auto acc = ensemble_acc.empty() ? epoch_mean_acc() : ensemble_acc;
  if (acc.empty()) return nan_value();
  const size_t take = std::min<size_t>(10, acc.size());
  double sum = 0.0;
  for (size_t i = acc.size() - take; i < acc.size(); ++i) sum += acc[i];
  return sum / take;
}

Trainer::Trainer(const Config& cfg, const Dataset& train, const Dataset* test)
    : cfg_(cfg), train_(train), test_(test) {
  if (cfg_.train.kappa_schedule.empty())
    throw std::invalid_argument("Trainer: config not resolved (empty kappa schedule)");
  if (train_.size() == 0) throw std::invalid_argument("Trainer: empty dataset");
  if (test_ && test_->size() > 0 && test_->dim() != train_.dim())
    throw std::invalid_argument("Trainer: test feature width mismatch");
  NetDims dims;
  dims.input = train_.dim();
  dims.hidden1 = cfg_.hidden1;
  dims.hidden2 = cfg_.hidden2;
  dims.classes = train_.num_classes;
  dims.proj_hidden = cfg_.proj_hidden;
  dims.proj_dim = cfg_.proj_dim;
  for (int m = 0; m < 2; ++m)
    state_.nets[m] = NetState::init(dims, derive_seed(cfg_.train.seed, {kNetInit, uint64_t(m)}));
}

double Trainer::evaluate_accuracy(int net_id) const {
  const Dataset& eval = (test_ && test_->size() > 0) ? *test_ : train_;
  const ForwardCache c = forward(state_.nets[net_id], eval.features);
  int hits = 0;
  for (int i = 0; i < eval.size(); ++i)
    if (argmax_row(c.t.row(i), c.t.cols) == eval.true_labels[i]) ++hits;
  return static_cast<double>(hits) / eval.size();
}

void Trainer::record_ensemble_accuracy() {
  const Dataset& eval = (test_ && test_->size() > 0) ? *test_ : train_;
  const ForwardCache c0 = forward(state_.nets[0], eval.features);
  const ForwardCache c1 = forward(state_.nets[1], eval.features);
  int hits = 0;
  Vec avg(eval.num_classes);
  for (int i = 0; i < eval.size(); ++i) {
    for (int k = 0; k < eval.num_classes; ++k) avg[k] = 0.5 * (c0.t(i, k) + c1.t(i, k));
    if (argmax_row(avg.data(), eval.num_classes) == eval.true_labels[i]) ++hits;
  }
  result_.ensemble_acc.push_back(static_cast<double>(hits) / eval.size());
}

void Trainer::append_row(int net_id, double sel_auc2, double sel_auc1, double sel_ratio,
                         double corr_ratio, const std::vector<double>& ents,
                         const std::vector<double>& ratios, double sum_sst, double sum_crl,
                         int batches) {
  EpochMetrics row;
  row.epoch = state_.epoch;
  row.net = net_id;
  row.test_acc = evaluate_accuracy(net_id);
  row.sel_auc_2d = sel_auc2;
  row.sel_auc_1d = sel_auc1;
  row.neg_select_ratio = sel_ratio;
  row.neg_correct_ratio = corr_ratio;
  row.ent_median = median(ents);
  row.mag_ratio_median = median(ratios);
  if (batches > 0) {
    row.loss_sst = sum_sst / batches;
    row.loss_plr = sum_crl / batches;
    row.loss_total = (sum_sst + cfg_.train.lambda_i * sum_crl) / batches;
  } else {
    row.loss_sst = row.loss_plr = row.loss_total = nan_value();
  }
  result_.history.push_back(row);
  if (!std::isnan(sel_ratio))
    result_.fig5.push_back({state_.epoch, net_id, sel_ratio, corr_ratio});
}

double Trainer::current_lr(int post_epoch) const {
  double lr = cfg_.train.lr;
  if (cfg_.train.lr_decay_epoch >= 0 && post_epoch >= cfg_.train.lr_decay_epoch)
    lr *= cfg_.train.lr_decay_factor;
  return lr;
}

void Trainer::warmup_epoch(int net_id) {
  const uint64_t seed = cfg_.train.seed;
  const int ge = state_.epoch;
  NetState& net = state_.nets[net_id];
  Rng shuffle_rng(derive_seed(seed, {kShuffle, uint64_t(ge), uint64_t(net_id)}));
  const std::vector<int> order = shuffle_rng.permutation(train_.size());
  const int b = cfg_.train.batch_size;
  const int classes = train_.num_classes;

  double sum_ce = 0.0, sum_crl = 0.0;
  int batches = 0;
  for (int start = 0; start < train_.size(); start += b) {
    const int nb = std::min(b, train_.size() - start);
    const std::span<const int> idx(order.data() + start, static_cast<size_t>(nb));

    const Mat xw = augment_rows(train_.features, idx, cfg_.aug, AugStrength::weak,
                                derive_seed(seed, {kWarmupWeak, uint64_t(ge), uint64_t(net_id)}));
    const ForwardCache cw = forward(net, xw);
    Mat targets(nb, classes);
    for (int i = 0; i < nb; ++i) targets(i, train_.noisy_labels[idx[i]]) = 1.0;
    const TermOut ce = cross_entropy_loss(cw.t, targets);
    Mat gz(nb, classes);
    for (int i = 0; i < nb; ++i) softmax_vjp(cw.t.row(i), ce.grad.row(i), classes, gz.row(i));
    Vec grad = backward(net, cw, gz, Mat());

    const Mat xs1 =
        augment_rows(train_.features, idx, cfg_.aug, AugStrength::strong,
                     derive_seed(seed, {kWarmupStrong, uint64_t(ge), uint64_t(net_id), 0}));
    const Mat xs2 =
        augment_rows(train_.features, idx, cfg_.aug, AugStrength::strong,
                     derive_seed(seed, {kWarmupStrong, uint64_t(ge), uint64_t(net_id), 1}));
    const ForwardCache c1 = forward(net, xs1);
    const ForwardCache c2 = forward(net, xs2);
    ContrastiveBatch cb;
    cb.q1 = c1.q;
    cb.q2 = c2.q;
    cb.tau = cfg_.train.tau;
    const ContrastiveOut nce = vanilla_infonce(cb);
    add_scaled(grad, backward(net, c1, Mat(), nce.g1), cfg_.train.lambda_i);
    add_scaled(grad, backward(net, c2, Mat(), nce.g2), cfg_.train.lambda_i);

    if (!std::isfinite(ce.value) || !std::isfinite(nce.loss))
      throw std::runtime_error("training aborted: non-finite warmup loss at epoch " +
                               std::to_string(ge) + " net " + std::to_string(net_id));
    sgd_step(net, grad, cfg_.train.lr, cfg_.train.momentum, cfg_.train.weight_decay,
             state_.opt[net_id]);
    sum_ce += ce.value;
    sum_crl += nce.loss;
    ++batches;
  }
  append_row(net_id, nan_value(), nan_value(), nan_value(), nan_value(), {}, {}, sum_ce, sum_crl,
             batches);
}

void Trainer::ce_epoch(int net_id) {
  const uint64_t seed = cfg_.train.seed;
  const int ge = state_.epoch;
  NetState& net = state_.nets[net_id];
  Rng shuffle_rng(derive_seed(seed, {kShuffle, uint64_t(ge), uint64_t(net_id)}));
  const std::vector<int> order = shuffle_rng.permutation(train_.size());
  const int b = cfg_.train.batch_size;
  const int classes = train_.num_classes;

  double sum_ce = 0.0;
  int batches = 0;
  for (int start = 0; start < train_.size(); start += b) {
    const int nb = std::min(b, train_.size() - start);
    const std::span<const int> idx(order.data() + start, static_cast<size_t>(nb));
    // plain supervised baseline: raw features, noisy labels, nothing else
    const Mat xw = gather_rows(train_.features, idx);
    const ForwardCache cw = forward(net, xw);
    Mat targets(nb, classes);
    for (int i = 0; i < nb; ++i) targets(i, train_.noisy_labels[idx[i]]) = 1.0;
    const TermOut ce = cross_entropy_loss(cw.t, targets);
    Mat gz(nb, classes);
    for (int i = 0; i < nb; ++i) softmax_vjp(cw.t.row(i), ce.grad.row(i), classes, gz.row(i));
    const Vec grad = backward(net, cw, gz, Mat());
    if (!std::isfinite(ce.value))
      throw std::runtime_error("training aborted: non-finite loss at epoch " +
                               std::to_string(ge) + " net " + std::to_string(net_id));
    sgd_step(net, grad, cfg_.train.lr, cfg_.train.momentum, cfg_.train.weight_decay,
             state_.opt[net_id]);
    sum_ce += ce.value;
    ++batches;
  }
  append_row(net_id, nan_value(), nan_value(), nan_value(), nan_value(), {}, {}, sum_ce, 0.0,
             batches);
}

void Trainer::export_prototypes() {
  if (!state_.protos_ready) return;
  for (int m = 0; m < 2; ++m)
    result_.prototypes_csv[m] = prototypes_to_csv(state_.protos[m]);
}

void Trainer::warmup() {
  for (int e = 0; e < cfg_.train.warmup_epochs; ++e) {
    for (int m = 0; m < 2; ++m) warmup_epoch(m);
    record_ensemble_accuracy();
    ++state_.epoch;
  }
  for (int m = 0; m < 2; ++m) {
    const ForwardCache c = forward(state_.nets[m], train_.features);
    state_.protos[m] = init_prototypes(c.q, train_.noisy_labels, train_.num_classes,
                                       cfg_.train.eta, cfg_.train.tau_s, cfg_.train.alpha);
  }
  state_.protos_ready = true;
}

void Trainer::train_epoch(int post_epoch) {
  if (!state_.protos_ready) throw std::logic_error("train_epoch: warmup has not run");
  const uint64_t seed = cfg_.train.seed;
  const int ge = state_.epoch;
  const int n = train_.size();
  const int classes = train_.num_classes;
  const int b = cfg_.train.batch_size;
  const double lr = current_lr(post_epoch);
  const auto [kappa_raw, use_labels] = kappa_at(post_epoch, cfg_.train.kappa_schedule);
  const int kappa = std::min(kappa_raw, classes);
  const bool collect_fig4 =
      post_epoch >= cfg_.train.fig4_start && post_epoch <= cfg_.train.fig4_end;
  const int fig6_post =
      cfg_.train.fig6_epoch >= 0 ? cfg_.train.fig6_epoch : cfg_.train.epochs - 1;

  std::vector<bool> is_clean_true(n);
  for (int i = 0; i < n; ++i) is_clean_true[i] = train_.noisy_labels[i] == train_.true_labels[i];

  for (int m = 0; m < 2; ++m) {
    const int trainee = 1 - m;
    result_.selection_events.push_back({ge, m, trainee});

    // (a) joint sample selection with network m's losses
    const std::vector<int> all_idx = all_indices(n);
    const Mat x_sel =
        augment_rows(train_.features, all_idx, cfg_.aug, AugStrength::weak,
                     derive_seed(seed, {kSelectView, uint64_t(ge), uint64_t(m)}));
    const ForwardCache c_sel = forward(state_.nets[m], x_sel);
    const Mat s_sel = similarity(c_sel.q, state_.protos[m]);
    const std::vector<LossPair> pairs = loss_pairs(c_sel.t, s_sel, train_.noisy_labels);
    const std::vector<LossPair> pts = cfg_.train.gmm_normalize ? normalize_losses(pairs) : pairs;

    const Gmm2d gmm2 = fit_gmm2d(pts);
    const Vec w2 = clean_posterior(gmm2, pts);
    Vec lcls(n);
    for (int i = 0; i < n; ++i) lcls[i] = pts[i].l_cls;
    const Gmm1d gmm1 = fit_gmm1d(lcls);
    const Vec w1 = clean_posterior_1d(gmm1, lcls);

    const Vec& w = cfg_.train.gmm_variant == GmmVariant::two_d ? w2 : w1;
    const Partition part = partition(w, cfg_.train.partition_threshold);
    const double auc2 = separation_auc(w2, is_clean_true);
    const double auc1 = separation_auc(w1, is_clean_true);

    if (m == 0 && post_epoch == fig6_post) {
      result_.fig6.clear();
      result_.fig6_epoch = ge;
      for (int i = 0; i < n; ++i)
        result_.fig6.push_back({i, pts[i].l_cls, pts[i].l_proto, w[i], bool(is_clean_true[i])});
    }

    std::vector<char> in_clean(n, 0);
    for (int i : part.clean_set) in_clean[i] = 1;

    // (b) train the other network
    NetState& net = state_.nets[trainee];
    Rng shuffle_rng(derive_seed(seed, {kShuffle, uint64_t(ge), uint64_t(trainee)}));
    const std::vector<int> order = shuffle_rng.permutation(n);

    long long sel_pairs = 0, sel_correct = 0, sel_total = 0;
    std::vector<double> ents, ratios;
    double sum_sst = 0.0, sum_crl = 0.0;
    int batches = 0;

    for (int start = 0; start < n; start += b) {
      const int nb = std::min(b, n - start);
      const std::span<const int> idx(order.data() + start, static_cast<size_t>(nb));
      const int batch_id = start / b;

      // weak views of the network being trained
      std::vector<ForwardCache> cw(cfg_.aug.num_weak);
      for (int v = 0; v < cfg_.aug.num_weak; ++v) {
        const Mat xw = augment_rows(
            train_.features, idx, cfg_.aug, AugStrength::weak,
            derive_seed(seed, {kWeakView, uint64_t(ge), uint64_t(m), uint64_t(trainee),
                               uint64_t(v)}));
        cw[v] = forward(net, xw);
      }
      Mat t_mean(nb, classes);
      for (int i = 0; i < nb; ++i)
        for (int c = 0; c < classes; ++c) {
          double acc = 0.0;
          for (int v = 0; v < cfg_.aug.num_weak; ++v) acc += cw[v].t(i, c);
          t_mean(i, c) = acc / cfg_.aug.num_weak;
        }

      std::vector<int> lab_pos, unl_pos, unl_global;
      for (int i = 0; i < nb; ++i)
        (in_clean[idx[i]] ? lab_pos : unl_pos).push_back(i);
      for (int p : unl_pos) unl_global.push_back(idx[p]);

      // co-guessing needs the other network's weak predictions on the
      // unlabeled part
      std::vector<Mat> t_other(cfg_.aug.num_weak);
      if (!unl_global.empty()) {
        for (int v = 0; v < cfg_.aug.num_weak; ++v) {
          const Mat xo = augment_rows(
              train_.features, unl_global, cfg_.aug, AugStrength::weak,
              derive_seed(seed, {kWeakView, uint64_t(ge), uint64_t(m), uint64_t(m), uint64_t(v)}));
          t_other[v] = forward(state_.nets[m], xo).t;
        }
      }

      // pseudo targets
      Mat ybar(nb, classes);
      for (size_t li = 0; li < lab_pos.size(); ++li) {
        const int p = lab_pos[li];
        const int g = idx[p];
        Mat tw(cfg_.aug.num_weak, classes);
        for (int v = 0; v < cfg_.aug.num_weak; ++v)
          std::copy(cw[v].t.row(p), cw[v].t.row(p) + classes, tw.row(v));
        const Vec target = refine_labeled(train_.noisy_labels[g], classes, part.w[g], tw,
                                          cfg_.train.sharpen_t);
        std::copy(target.begin(), target.end(), ybar.row(p));
      }
      for (size_t ui = 0; ui < unl_pos.size(); ++ui) {
        const int p = unl_pos[ui];
        Mat tall(2 * cfg_.aug.num_weak, classes);
        for (int v = 0; v < cfg_.aug.num_weak; ++v) {
          std::copy(cw[v].t.row(p), cw[v].t.row(p) + classes, tall.row(v));
          std::copy(t_other[v].row(static_cast<int>(ui)),
                    t_other[v].row(static_cast<int>(ui)) + classes,
                    tall.row(cfg_.aug.num_weak + v));
        }
        const Vec target = guess_unlabeled(tall, cfg_.train.sharpen_t);
        std::copy(target.begin(), target.end(), ybar.row(p));
      }

      // reliable negative sets from the trained net's mean weak predictions
      std::vector<int> batch_noisy(nb), batch_true(nb);
      for (int i = 0; i < nb; ++i) {
        batch_noisy[i] = train_.noisy_labels[idx[i]];
        batch_true[i] = train_.true_labels[idx[i]];
      }
      const NegativeSets ns = reliable_negative_set(t_mean, batch_noisy, kappa, use_labels);
      const NegPairStats nstats = neg_pair_stats(ns, batch_true);
      sel_pairs += nstats.selected_pairs;
      sel_correct += nstats.correct_pairs;
      sel_total += nstats.total_pairs;

      // strong views for the contrastive term
      const Mat xs1 = augment_rows(
          train_.features, idx, cfg_.aug, AugStrength::strong,
          derive_seed(seed, {kStrongView, uint64_t(ge), uint64_t(m), 0}));
      const Mat xs2 = augment_rows(
          train_.features, idx, cfg_.aug, AugStrength::strong,
          derive_seed(seed, {kStrongView, uint64_t(ge), uint64_t(m), 1}));
      const ForwardCache c1 = forward(net, xs1);
      const ForwardCache c2 = forward(net, xs2);

      ContrastiveBatch cb;
      cb.q1 = c1.q;
      cb.q2 = c2.q;
      cb.t = t_mean;
      cb.labels = batch_noisy;
      cb.tau = cfg_.train.tau;

      ContrastiveOut crl;
      bool has_crl = true;
      switch (cfg_.train.crl_variant) {
        case CrlVariant::plr:
          crl = cfg_.train.use_flat ? plr_flatnce(cb, ns) : plr_infonce(cb, ns);
          break;
        case CrlVariant::vanilla:
          crl = vanilla_infonce(cb);
          break;
        case CrlVariant::scl: {
          std::vector<int> pseudo(nb);
          for (int i = 0; i < nb; ++i) pseudo[i] = argmax_row(t_mean.row(i), classes);
          crl = scl_loss(cb, pseudo);
          break;
        }
        case CrlVariant::none:
          has_crl = false;
          break;
      }

      // MixUp within each pool on the first strong view, then one forward
      const Mat x_lab = gather_rows(xs1, lab_pos);
      const Mat y_lab = gather_rows(ybar, lab_pos);
      const Mat x_unl = gather_rows(xs1, unl_pos);
      const Mat y_unl = gather_rows(ybar, unl_pos);
      const MixResult mix_lab =
          x_lab.rows > 0
              ? mixup(x_lab, y_lab, cfg_.train.beta,
                      derive_seed(seed, {kMixup, uint64_t(ge), uint64_t(m), uint64_t(batch_id), 0}),
                      cfg_.train.mixup_max_lambda)
              : MixResult{};
      const MixResult mix_unl =
          x_unl.rows > 0
              ? mixup(x_unl, y_unl, cfg_.train.beta,
                      derive_seed(seed, {kMixup, uint64_t(ge), uint64_t(m), uint64_t(batch_id), 1}),
                      cfg_.train.mixup_max_lambda)
              : MixResult{};

      const int nl = mix_lab.x.rows;
      const int nu = mix_unl.x.rows;
      Mat x_mixed(nl + nu, train_.dim());
      for (int i = 0; i < nl; ++i)
        std::copy(mix_lab.x.row(i), mix_lab.x.row(i) + train_.dim(), x_mixed.row(i));
      for (int i = 0; i < nu; ++i)
        std::copy(mix_unl.x.row(i), mix_unl.x.row(i) + train_.dim(), x_mixed.row(nl + i));
      const ForwardCache cm = forward(net, x_mixed);

      Mat t_lab(nl, classes), t_unl(nu, classes);
      for (int i = 0; i < nl; ++i) std::copy(cm.t.row(i), cm.t.row(i) + classes, t_lab.row(i));
      for (int i = 0; i < nu; ++i)
        std::copy(cm.t.row(nl + i), cm.t.row(nl + i) + classes, t_unl.row(i));
      const SstOut sst = sst_loss(t_lab, mix_lab.y, t_unl, mix_unl.y, cfg_.train.lambda_u);

      Mat gz(nl + nu, classes);
      for (int i = 0; i < nl; ++i)
        softmax_vjp(cm.t.row(i), sst.g_labeled.row(i), classes, gz.row(i));
      for (int i = 0; i < nu; ++i)
        softmax_vjp(cm.t.row(nl + i), sst.g_unlabeled.row(i), classes, gz.row(nl + i));
      const Vec g_sst = backward(net, cm, gz, Mat());

      Vec g_crl(g_sst.size(), 0.0);
      if (has_crl) {
        g_crl = backward(net, c1, Mat(), crl.g1);
        add_scaled(g_crl, backward(net, c2, Mat(), crl.g2), 1.0);
        ents.push_back(safe_ent(g_crl, g_sst));
        ratios.push_back(safe_ratio(g_crl, g_sst));
      }

      if (collect_fig4) {
        // Both diagnostic gradients use the InfoNCE functional form so the
        // comparison isolates the reliable-negative-set effect rather than
        // the flat reformulation's gradient scale. The statistics are taken
        // over the shared encoder blocks; the classifier and projector heads
        // receive gradients from only one of the two losses each, so their
        // blocks cannot conflict and only dilute the signal.
        const size_t enc = net.w1.size() + net.b1.size() + net.w2.size() + net.b2.size();
        const ContrastiveOut d_plr = plr_infonce(cb, ns);
        Vec g_plr_diag = backward(net, c1, Mat(), d_plr.g1);
        add_scaled(g_plr_diag, backward(net, c2, Mat(), d_plr.g2), 1.0);
        const ContrastiveOut d_van = vanilla_infonce(cb);
        Vec g_van_diag = backward(net, c1, Mat(), d_van.g1);
        add_scaled(g_van_diag, backward(net, c2, Mat(), d_van.g2), 1.0);
        g_plr_diag.resize(enc);
        g_van_diag.resize(enc);
        Vec g_sst_enc = g_sst;
        g_sst_enc.resize(enc);
        result_.fig4.push_back({ge, trainee, batch_id, safe_ent(g_plr_diag, g_sst_enc),
                                safe_ratio(g_plr_diag, g_sst_enc), safe_ent(g_van_diag, g_sst_enc),
                                safe_ratio(g_van_diag, g_sst_enc)});
      }

      const double crl_loss = has_crl ? crl.loss : 0.0;
      if (!std::isfinite(sst.loss) || !std::isfinite(crl_loss))
        throw std::runtime_error("training aborted: non-finite loss at epoch " +
                                 std::to_string(ge) + " net " + std::to_string(trainee) +
                                 " batch " + std::to_string(batch_id));

      Vec grad = g_sst;
      if (has_crl) add_scaled(grad, g_crl, cfg_.train.lambda_i);
      sgd_step(net, grad, lr, cfg_.train.momentum, cfg_.train.weight_decay, state_.opt[trainee]);

      sum_sst += sst.loss;
      sum_crl += crl_loss;
      ++batches;
    }

    // (c) threshold and prototype updates from the trainee's confident set
    const Mat x_conf =
        augment_rows(train_.features, all_idx, cfg_.aug, AugStrength::weak,
                     derive_seed(seed, {kConfView, uint64_t(ge), uint64_t(trainee)}));
    const ForwardCache c_conf = forward(state_.nets[trainee], x_conf);
    const Mat s_conf = similarity(c_conf.q, state_.protos[trainee]);
    const Mat y_hat = pseudo_soft_label(c_conf.t, s_conf, cfg_.train.alpha);
    update_thresholds(state_.protos[trainee], y_hat);
    const std::vector<ConfidentItem> items = confident_set(y_hat, state_.protos[trainee]);
    std::vector<int> conf_rows;
    conf_rows.reserve(items.size());
    for (const auto& it : items) conf_rows.push_back(it.index);
    const Mat q_conf = gather_rows(c_conf.q, conf_rows);
    update_prototypes(state_.protos[trainee], q_conf, items);

    const double sel_ratio =
        sel_total > 0 ? static_cast<double>(sel_pairs) / sel_total : nan_value();
    const double corr_ratio =
        sel_pairs > 0 ? static_cast<double>(sel_correct) / sel_pairs : nan_value();
    append_row(trainee, auc2, auc1, sel_ratio, corr_ratio, ents, ratios, sum_sst, sum_crl,
               batches);
  }
  record_ensemble_accuracy();
  ++state_.epoch;
}

RunResult run(const Config& cfg, const Dataset& train, const Dataset* test) {
  Trainer trainer(cfg, train, test);
  if (cfg.train.mode == TrainMode::ce_baseline) {
    // plain supervised baseline: a single network, no co-training ensemble
    const int total = cfg.train.warmup_epochs + cfg.train.epochs;
    for (int e = 0; e < total; ++e) {
      trainer.ce_epoch(0);
      trainer.mutable_state().epoch++;
    }
    return trainer.take_result();
  }
  trainer.warmup();
  for (int e = 0; e < cfg.train.epochs; ++e) trainer.train_epoch(e);
  trainer.export_prototypes();
  return trainer.take_result();
}

}  // namespace plremix
