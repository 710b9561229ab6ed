#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "plremix/datagen.hpp"
#include "plremix/net.hpp"

namespace plremix {

enum class CrlVariant { plr, vanilla, scl, none };
enum class GmmVariant { two_d, one_d };
enum class TrainMode { plremix, ce_baseline };

std::string to_string(CrlVariant v);
std::string to_string(GmmVariant v);
std::string to_string(TrainMode v);
std::string to_string(NoiseKind v);

struct GenConfig {
  int classes = 8;
  int per_class = 500;
  int test_per_class = 100;
  int dim = 32;
  double separation = 6.0;
  double spread = 1.0;
  NoiseKind noise_kind = NoiseKind::symmetric;
  double noise_ratio = 0.5;
  uint64_t data_seed = 1;
};

struct TrainConfig {
  int epochs = 50;         // post-warmup epochs
  int warmup_epochs = -1;  // -1: proportional default (10 per 100 epochs)
  int batch_size = 64;
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int lr_decay_epoch = -1;  // post-warmup epoch of the single decay step; -1 disables
  double lr_decay_factor = 0.1;
  double tau = 0.25;        // contrastive temperature
  double tau_s = 0.1;       // prototype similarity temperature
  double sharpen_t = 0.5;
  double alpha = 0.5;       // pseudo-soft-label mixing weight
  double beta = 4.0;        // MixUp Beta(beta, beta)
  double eta = 0.99;        // prototype/threshold EMA momentum
  double lambda_u = 1.0;
  double lambda_i = 1.0;
  std::vector<std::pair<int, int>> kappa_schedule;  // (start_epoch, kappa); empty: default
  bool use_flat = true;
  CrlVariant crl_variant = CrlVariant::plr;
  GmmVariant gmm_variant = GmmVariant::two_d;
  bool gmm_normalize = true;
  double partition_threshold = 0.5;
  bool mixup_max_lambda = false;
  TrainMode mode = TrainMode::plremix;
  uint64_t seed = 1;
  int fig4_start = -1;  // inclusive post-warmup window for gradient-conflict rows
  int fig4_end = -1;
  int fig6_epoch = -1;  // -1: final post-warmup epoch
};

struct Config {
  GenConfig gen;
  AugmentSpec aug;
  int hidden1 = 64;
  int hidden2 = 64;
  int proj_hidden = 64;
  int proj_dim = 32;
  TrainConfig train;
  std::string dataset;       // train CSV path; empty means in-memory generation
  std::string test_dataset;  // optional held-out CSV path
  std::string dataset_hash;  // optional; verified against the loaded data when set
};

/// Flat `key = value` lines, `#` comments, unknown keys rejected by name.
Config parse_config_text(const std::string& text);
Config parse_config_file(const std::string& path);

/// Applies one `key=value` override on top of a parsed config.
void apply_override(Config& cfg, const std::string& assignment);

/// Fills the derived defaults (warmup epochs, kappa schedule) and validates.
void resolve_defaults(Config& cfg);

/// Canonical serialization with every key explicit; reusable as a config
/// file, which is how run manifests reproduce runs.
std::string serialize_config(const Config& cfg);

std::string kappa_schedule_to_string(const std::vector<std::pair<int, int>>& schedule);
std::vector<std::pair<int, int>> parse_kappa_schedule(const std::string& text);

}  // namespace plremix
