#include "plremix/config.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "plremix/csv.hpp"

namespace plremix {

namespace {

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("bad boolean value '" + v + "'");
}

NoiseKind parse_noise_kind(const std::string& v) {
  if (v == "symmetric") return NoiseKind::symmetric;
  if (v == "asymmetric") return NoiseKind::asymmetric;
  throw std::invalid_argument("bad noise_kind '" + v + "'");
}

CrlVariant parse_crl_variant(const std::string& v) {
  if (v == "plr") return CrlVariant::plr;
  if (v == "vanilla") return CrlVariant::vanilla;
  if (v == "scl") return CrlVariant::scl;
  if (v == "none") return CrlVariant::none;
  throw std::invalid_argument("bad crl_variant '" + v + "'");
}

GmmVariant parse_gmm_variant(const std::string& v) {
  if (v == "2d") return GmmVariant::two_d;
  if (v == "1d") return GmmVariant::one_d;
  throw std::invalid_argument("bad gmm_variant '" + v + "'");
}

TrainMode parse_train_mode(const std::string& v) {
  if (v == "plremix") return TrainMode::plremix;
  if (v == "ce_baseline") return TrainMode::ce_baseline;
  throw std::invalid_argument("bad train_mode '" + v + "'");
}

void validate_schedule(const std::vector<std::pair<int, int>>& schedule) {
  if (schedule.empty()) throw std::invalid_argument("kappa_schedule: empty schedule");
  if (schedule.front().first != 0)
    throw std::invalid_argument("kappa_schedule: must start at epoch 0");
  for (size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i].second < 1) throw std::invalid_argument("kappa_schedule: kappa must be >= 1");
    if (i > 0) {
      if (schedule[i].first <= schedule[i - 1].first)
        throw std::invalid_argument("kappa_schedule: start epochs must increase");
      if (schedule[i].second > schedule[i - 1].second)
        throw std::invalid_argument("kappa_schedule: kappa must be non-increasing");
    }
  }
}

}  // namespace

std::string to_string(CrlVariant v) {
  switch (v) {
    case CrlVariant::plr: return "plr";
    case CrlVariant::vanilla: return "vanilla";
    case CrlVariant::scl: return "scl";
    case CrlVariant::none: return "none";
  }
  return "?";
}

std::string to_string(GmmVariant v) { return v == GmmVariant::two_d ? "2d" : "1d"; }

std::string to_string(TrainMode v) { return v == TrainMode::plremix ? "plremix" : "ce_baseline"; }

std::string to_string(NoiseKind v) {
  return v == NoiseKind::symmetric ? "symmetric" : "asymmetric";
}

std::string kappa_schedule_to_string(const std::vector<std::pair<int, int>>& schedule) {
  std::ostringstream out;
  for (size_t i = 0; i < schedule.size(); ++i) {
    if (i) out << ',';
    out << schedule[i].first << ':' << schedule[i].second;
  }
  return out.str();
}

std::vector<std::pair<int, int>> parse_kappa_schedule(const std::string& text) {
  std::vector<std::pair<int, int>> schedule;
  for (const auto& entry : split(text, ',')) {
    const auto kv = split(trim(entry), ':');
    if (kv.size() != 2) throw std::invalid_argument("kappa_schedule: bad entry '" + entry + "'");
    schedule.emplace_back(static_cast<int>(parse_int(trim(kv[0]))),
                          static_cast<int>(parse_int(trim(kv[1]))));
  }
  validate_schedule(schedule);
  return schedule;
}

namespace {

void apply_key(Config& c, const std::string& key, const std::string& v) {
  // data generation
  if (key == "classes") c.gen.classes = static_cast<int>(parse_int(v));
  else if (key == "per_class") c.gen.per_class = static_cast<int>(parse_int(v));
  else if (key == "test_per_class") c.gen.test_per_class = static_cast<int>(parse_int(v));
  else if (key == "dim") c.gen.dim = static_cast<int>(parse_int(v));
  else if (key == "separation") c.gen.separation = parse_double(v);
  else if (key == "spread") c.gen.spread = parse_double(v);
  else if (key == "noise_kind") c.gen.noise_kind = parse_noise_kind(v);
  else if (key == "noise_ratio") c.gen.noise_ratio = parse_double(v);
  else if (key == "data_seed") c.gen.data_seed = parse_uint64(v);
  // augmentation
  else if (key == "weak_sigma") c.aug.weak_sigma = parse_double(v);
  else if (key == "strong_sigma") c.aug.strong_sigma = parse_double(v);
  else if (key == "strong_dropout_p") c.aug.strong_dropout_p = parse_double(v);
  else if (key == "num_weak") c.aug.num_weak = static_cast<int>(parse_int(v));
  else if (key == "num_strong") c.aug.num_strong = static_cast<int>(parse_int(v));
  // network
  else if (key == "hidden1") c.hidden1 = static_cast<int>(parse_int(v));
  else if (key == "hidden2") c.hidden2 = static_cast<int>(parse_int(v));
  else if (key == "proj_hidden") c.proj_hidden = static_cast<int>(parse_int(v));
  else if (key == "proj_dim") c.proj_dim = static_cast<int>(parse_int(v));
  // training
  else if (key == "epochs") c.train.epochs = static_cast<int>(parse_int(v));
  else if (key == "warmup_epochs") c.train.warmup_epochs = static_cast<int>(parse_int(v));
  else if (key == "batch_size") c.train.batch_size = static_cast<int>(parse_int(v));
  else if (key == "lr") c.train.lr = parse_double(v);
  else if (key == "momentum") c.train.momentum = parse_double(v);
  else if (key == "weight_decay") c.train.weight_decay = parse_double(v);
  else if (key == "lr_decay_epoch") c.train.lr_decay_epoch = static_cast<int>(parse_int(v));
  else if (key == "lr_decay_factor") c.train.lr_decay_factor = parse_double(v);
  else if (key == "tau") c.train.tau = parse_double(v);
  else if (key == "tau_s") c.train.tau_s = parse_double(v);
  else if (key == "sharpen_t") c.train.sharpen_t = parse_double(v);
  else if (key == "alpha") c.train.alpha = parse_double(v);
  else if (key == "beta") c.train.beta = parse_double(v);
  else if (key == "eta") c.train.eta = parse_double(v);
  else if (key == "lambda_u") c.train.lambda_u = parse_double(v);
  else if (key == "lambda_i") c.train.lambda_i = parse_double(v);
  else if (key == "kappa_schedule") c.train.kappa_schedule = parse_kappa_schedule(v);
  else if (key == "use_flat") c.train.use_flat = parse_bool(v);
  else if (key == "crl_variant") c.train.crl_variant = parse_crl_variant(v);
  else if (key == "gmm_variant") c.train.gmm_variant = parse_gmm_variant(v);
  else if (key == "gmm_normalize") c.train.gmm_normalize = parse_bool(v);
  else if (key == "partition_threshold") c.train.partition_threshold = parse_double(v);
  else if (key == "mixup_max_lambda") c.train.mixup_max_lambda = parse_bool(v);
  else if (key == "train_mode") c.train.mode = parse_train_mode(v);
  else if (key == "seed") c.train.seed = parse_uint64(v);
  // diagnostics
  else if (key == "fig4_start") c.train.fig4_start = static_cast<int>(parse_int(v));
  else if (key == "fig4_end") c.train.fig4_end = static_cast<int>(parse_int(v));
  else if (key == "fig6_epoch") c.train.fig6_epoch = static_cast<int>(parse_int(v));
  // paths / integrity
  else if (key == "dataset") c.dataset = v;
  else if (key == "test_dataset") c.test_dataset = v;
  else if (key == "dataset_hash") c.dataset_hash = v;
  else throw std::invalid_argument("unknown config key '" + key + "'");
}

}  // namespace

Config parse_config_text(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": missing '='");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    apply_key(cfg, key, value);
  }
  return cfg;
}

Config parse_config_file(const std::string& path) {
  return parse_config_text(read_text_file(path));
}

void apply_override(Config& cfg, const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("override must look like key=value: '" + assignment + "'");
  apply_key(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void resolve_defaults(Config& cfg) {
  if (cfg.gen.classes < 1 || cfg.gen.per_class < 1 || cfg.gen.dim < 2)
    throw std::invalid_argument("config: bad dataset shape");
  if (cfg.train.epochs < 0) throw std::invalid_argument("config: epochs must be >= 0");
  if (cfg.train.batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
  if (cfg.train.lr < 0.0) throw std::invalid_argument("config: lr must be >= 0");

  if (cfg.train.warmup_epochs < 0)
    cfg.train.warmup_epochs = static_cast<int>(std::lround(0.10 * cfg.train.epochs));

  if (cfg.train.kappa_schedule.empty()) {
    // the paper-style 3 -> 2 -> 1 breaks, scaled to the post-warmup length
    const int b1 = static_cast<int>(std::floor(0.4 * cfg.train.epochs));
    const int b2 = static_cast<int>(std::floor(0.7 * cfg.train.epochs));
    std::vector<std::pair<int, int>> schedule{{0, 3}};
    if (b1 > 0) schedule.emplace_back(b1, 2);
    if (b2 > schedule.back().first) schedule.emplace_back(b2, 1);
    cfg.train.kappa_schedule = schedule;
  }
  validate_schedule(cfg.train.kappa_schedule);
}

std::string serialize_config(const Config& c) {
  std::ostringstream out;
  out << "# data\n";
  out << "classes = " << c.gen.classes << '\n';
  out << "per_class = " << c.gen.per_class << '\n';
  out << "test_per_class = " << c.gen.test_per_class << '\n';
  out << "dim = " << c.gen.dim << '\n';
  out << "separation = " << fmt_double(c.gen.separation) << '\n';
  out << "spread = " << fmt_double(c.gen.spread) << '\n';
  out << "noise_kind = " << to_string(c.gen.noise_kind) << '\n';
  out << "noise_ratio = " << fmt_double(c.gen.noise_ratio) << '\n';
  out << "data_seed = " << c.gen.data_seed << '\n';
  out << "# augmentation\n";
  out << "weak_sigma = " << fmt_double(c.aug.weak_sigma) << '\n';
  out << "strong_sigma = " << fmt_double(c.aug.strong_sigma) << '\n';
  out << "strong_dropout_p = " << fmt_double(c.aug.strong_dropout_p) << '\n';
  out << "num_weak = " << c.aug.num_weak << '\n';
  out << "num_strong = " << c.aug.num_strong << '\n';
  out << "# network\n";
  out << "hidden1 = " << c.hidden1 << '\n';
  out << "hidden2 = " << c.hidden2 << '\n';
  out << "proj_hidden = " << c.proj_hidden << '\n';
  out << "proj_dim = " << c.proj_dim << '\n';
  out << "# training\n";
  out << "epochs = " << c.train.epochs << '\n';
  out << "warmup_epochs = " << c.train.warmup_epochs << '\n';
  out << "batch_size = " << c.train.batch_size << '\n';
  out << "lr = " << fmt_double(c.train.lr) << '\n';
  out << "momentum = " << fmt_double(c.train.momentum) << '\n';
  out << "weight_decay = " << fmt_double(c.train.weight_decay) << '\n';
  out << "lr_decay_epoch = " << c.train.lr_decay_epoch << '\n';
  out << "lr_decay_factor = " << fmt_double(c.train.lr_decay_factor) << '\n';
  out << "tau = " << fmt_double(c.train.tau) << '\n';
  out << "tau_s = " << fmt_double(c.train.tau_s) << '\n';
  out << "sharpen_t = " << fmt_double(c.train.sharpen_t) << '\n';
  out << "alpha = " << fmt_double(c.train.alpha) << '\n';
  out << "beta = " << fmt_double(c.train.beta) << '\n';
  out << "eta = " << fmt_double(c.train.eta) << '\n';
  out << "lambda_u = " << fmt_double(c.train.lambda_u) << '\n';
  out << "lambda_i = " << fmt_double(c.train.lambda_i) << '\n';
  if (!c.train.kappa_schedule.empty())
    out << "kappa_schedule = " << kappa_schedule_to_string(c.train.kappa_schedule) << '\n';
  out << "use_flat = " << (c.train.use_flat ? "true" : "false") << '\n';
  out << "crl_variant = " << to_string(c.train.crl_variant) << '\n';
  out << "gmm_variant = " << to_string(c.train.gmm_variant) << '\n';
  out << "gmm_normalize = " << (c.train.gmm_normalize ? "true" : "false") << '\n';
  out << "partition_threshold = " << fmt_double(c.train.partition_threshold) << '\n';
  out << "mixup_max_lambda = " << (c.train.mixup_max_lambda ? "true" : "false") << '\n';
  out << "train_mode = " << to_string(c.train.mode) << '\n';
  out << "seed = " << c.train.seed << '\n';
  out << "# diagnostics\n";
  out << "fig4_start = " << c.train.fig4_start << '\n';
  out << "fig4_end = " << c.train.fig4_end << '\n';
  out << "fig6_epoch = " << c.train.fig6_epoch << '\n';
  if (!c.dataset.empty()) out << "dataset = " << c.dataset << '\n';
  if (!c.test_dataset.empty()) out << "test_dataset = " << c.test_dataset << '\n';
  if (!c.dataset_hash.empty()) out << "dataset_hash = " << c.dataset_hash << '\n';
  return out.str();
}

}  // namespace plremix
