// Command-line driver: dataset generation, training runs, ablation sweeps,
// and diagnostic exports, all driven by flat key=value config files.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "plremix/config.hpp"
#include "plremix/csv.hpp"
#include "plremix/datagen.hpp"
#include "plremix/trainer.hpp"

namespace fs = std::filesystem;
using namespace plremix;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "config file path")->required();
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--set", args.overrides, "key=value override, repeatable");
}

Config load_config(const CommonArgs& args) {
  Config cfg = parse_config_file(args.config_path);
  for (const auto& ov : args.overrides) apply_override(cfg, ov);
  resolve_defaults(cfg);
  return cfg;
}

std::string dataset_hash_of(const Dataset& ds) { return hex64(fnv1a64(dataset_to_csv(ds))); }

Dataset load_train_dataset(const Config& cfg) {
  if (cfg.dataset.empty())
    throw std::runtime_error("config key 'dataset' is not set; generate a dataset first");
  Dataset ds = load_dataset_csv(cfg.dataset);
  if (!cfg.dataset_hash.empty()) {
    const std::string h = dataset_hash_of(ds);
    if (h != cfg.dataset_hash)
      throw std::runtime_error("dataset hash mismatch: manifest says " + cfg.dataset_hash +
                               ", file has " + h);
  }
  return ds;
}

void write_run_outputs(const fs::path& out, const Config& cfg, const std::string& hash,
                       const RunResult& res) {
  fs::create_directories(out);
  write_text_file((out / "metrics.csv").string(), res.metrics_csv());
  write_text_file((out / "fig5.csv").string(), res.fig5_csv());
  if (!res.fig6.empty())
    write_text_file((out / ("fig6_epoch" + std::to_string(res.fig6_epoch) + ".csv")).string(),
                    res.fig6_csv());
  if (!res.fig4.empty()) {
    // one file per epoch present in the window
    std::set<int> epochs;
    for (const auto& r : res.fig4) epochs.insert(r.epoch);
    for (int e : epochs) {
      std::string body = "epoch,net,batch,ent_plr,ratio_plr,ent_vanilla,ratio_vanilla\n";
      for (const auto& r : res.fig4)
        if (r.epoch == e)
          body += std::to_string(r.epoch) + ',' + std::to_string(r.net) + ',' +
                  std::to_string(r.batch) + ',' + fmt_double(r.ent_plr) + ',' +
                  fmt_double(r.ratio_plr) + ',' + fmt_double(r.ent_vanilla) + ',' +
                  fmt_double(r.ratio_vanilla) + '\n';
      write_text_file((out / ("fig4_epoch" + std::to_string(e) + ".csv")).string(), body);
    }
  }
  for (int m = 0; m < 2; ++m)
    if (!res.prototypes_csv[m].empty())
      write_text_file((out / ("prototypes_net" + std::to_string(m) + ".csv")).string(),
                      res.prototypes_csv[m]);
  Config manifest = cfg;
  manifest.dataset_hash = hash;
  write_text_file((out / "manifest.cfg").string(),
                  "# run manifest: rerun with `plremix train --config manifest.cfg`\n" +
                      serialize_config(manifest));
}

int cmd_gen(const CommonArgs& args) {
  Config cfg = load_config(args);
  auto [train_ds, test_ds] =
      make_blobs_split(cfg.gen.classes, cfg.gen.per_class, cfg.gen.test_per_class, cfg.gen.dim,
                       cfg.gen.separation, cfg.gen.spread, cfg.gen.data_seed);
  NoiseSpec spec;
  spec.kind = cfg.gen.noise_kind;
  spec.ratio = cfg.gen.noise_ratio;
  if (spec.kind == NoiseKind::asymmetric) spec.mapping = nearest_other_centroid_mapping(train_ds);
  train_ds = inject_noise(train_ds, spec, cfg.gen.data_seed);

  fs::create_directories(args.out_dir);
  const fs::path out(args.out_dir);
  save_dataset_csv(train_ds, (out / "dataset.csv").string());
  std::printf("wrote %s (%d samples, %d classes, dim %d)\n", (out / "dataset.csv").c_str(),
              train_ds.size(), train_ds.num_classes, train_ds.dim());
  if (test_ds.size() > 0) {
    save_dataset_csv(test_ds, (out / "dataset_test.csv").string());
    std::printf("wrote %s (%d samples)\n", (out / "dataset_test.csv").c_str(), test_ds.size());
  }
  std::printf("nominal_noise_ratio = %s\n", fmt_double(cfg.gen.noise_ratio).c_str());
  std::printf("realized_noise_fraction = %s\n",
              fmt_double(realized_noise_fraction(train_ds)).c_str());
  std::printf("dataset_hash = %s\n", dataset_hash_of(train_ds).c_str());
  return 0;
}

int run_one(const Config& cfg, const fs::path& out) {
  const Dataset train_ds = load_train_dataset(cfg);
  Dataset test_ds;
  if (!cfg.test_dataset.empty()) test_ds = load_dataset_csv(cfg.test_dataset);
  const std::string hash = dataset_hash_of(train_ds);
  try {
    const RunResult res = run(cfg, train_ds, test_ds.size() > 0 ? &test_ds : nullptr);
    write_run_outputs(out, cfg, hash, res);
    std::printf("best_acc = %s\n", fmt_double(res.best_acc()).c_str());
    std::printf("last_acc = %s\n", fmt_double(res.last_acc()).c_str());
    return 0;
  } catch (const std::runtime_error& e) {
    fs::create_directories(out);
    write_text_file((out / "abort_dump.txt").string(), std::string(e.what()) + "\n");
    std::fprintf(stderr, "run aborted: %s\n", e.what());
    return 2;
  }
}

int cmd_train(const CommonArgs& args) {
  const Config cfg = load_config(args);
  return run_one(cfg, fs::path(args.out_dir));
}

int cmd_ablate(const CommonArgs& args, const std::string& axis) {
  const Config base = load_config(args);
  std::vector<std::string> arms;
  if (axis == "crl_variant")
    arms = {"plr", "vanilla", "scl", "none"};
  else if (axis == "gmm_variant")
    arms = {"2d", "1d"};
  else if (axis == "kappa_fixed")
    arms = {"3", "2", "1", "schedule"};
  else
    throw std::runtime_error("unknown ablation axis '" + axis + "'");

  const Dataset train_ds = load_train_dataset(base);
  Dataset test_ds;
  if (!base.test_dataset.empty()) test_ds = load_dataset_csv(base.test_dataset);
  const std::string hash = dataset_hash_of(train_ds);

  std::string summary = "arm,best_acc,last_acc,dataset_hash\n";
  const fs::path out(args.out_dir);
  for (const std::string& arm : arms) {
    Config cfg = base;
    if (axis == "crl_variant")
      apply_override(cfg, "crl_variant=" + arm);
    else if (axis == "gmm_variant")
      apply_override(cfg, "gmm_variant=" + arm);
    else if (axis == "kappa_fixed") {
      if (arm == "schedule") {
        cfg.train.kappa_schedule.clear();
      } else {
        apply_override(cfg, "kappa_schedule=0:" + arm);
      }
    }
    resolve_defaults(cfg);
    std::printf("[ablate] axis=%s arm=%s\n", axis.c_str(), arm.c_str());
    const RunResult res = run(cfg, train_ds, test_ds.size() > 0 ? &test_ds : nullptr);
    write_run_outputs(out / (axis + "_" + arm), cfg, hash, res);
    summary += arm + ',' + fmt_double(res.best_acc()) + ',' + fmt_double(res.last_acc()) + ',' +
               hash + '\n';
  }
  fs::create_directories(out);
  write_text_file((out / "summary.csv").string(), summary);
  std::printf("wrote %s\n", (out / "summary.csv").c_str());
  return 0;
}

int cmd_diag(const CommonArgs& args) {
  Config cfg = load_config(args);
  if (cfg.train.fig4_start < 0) {
    cfg.train.fig4_start = 0;
    cfg.train.fig4_end = cfg.train.epochs - 1;
  }
  const int rc = run_one(cfg, fs::path(args.out_dir));
  if (rc != 0) return rc;

  // conflict summary over the collected window
  const fs::path out(args.out_dir);
  int neg_plr = 0, neg_van = 0, total = 0;
  // re-read what train wrote to keep a single source of truth
  for (const auto& entry : fs::directory_iterator(out)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("fig4_epoch", 0) != 0) continue;
    const std::string body = read_text_file(entry.path().string());
    bool header = true;
    for (const auto& line : split(body, '\n')) {
      if (header) {
        header = false;
        continue;
      }
      if (trim(line).empty()) continue;
      const auto cells = split(line, ',');
      ++total;
      if (parse_double(cells[3]) < 0.0) ++neg_plr;
      if (parse_double(cells[5]) < 0.0) ++neg_van;
    }
  }
  if (total > 0) {
    std::printf("conflict batches: %d\n", total);
    std::printf("frac_negative_ent_plr = %s\n",
                fmt_double(static_cast<double>(neg_plr) / total).c_str());
    std::printf("frac_negative_ent_vanilla = %s\n",
                fmt_double(static_cast<double>(neg_van) / total).c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PLReMix desk-scale training harness"};
  app.require_subcommand(1);

  CommonArgs gen_args, train_args, ablate_args, diag_args;
  std::string axis;

  CLI::App* gen = app.add_subcommand("gen", "generate a noisy blob dataset");
  add_common(gen, gen_args);
  CLI::App* train = app.add_subcommand("train", "run training per config");
  add_common(train, train_args);
  CLI::App* ablate = app.add_subcommand("ablate", "run an ablation sweep");
  add_common(ablate, ablate_args);
  ablate->add_option("--axis", axis, "crl_variant | gmm_variant | kappa_fixed")->required();
  CLI::App* diag = app.add_subcommand("diag", "train with full diagnostic exports");
  add_common(diag, diag_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(gen_args);
    if (train->parsed()) return cmd_train(train_args);
    if (ablate->parsed()) return cmd_ablate(ablate_args, axis);
    if (diag->parsed()) return cmd_diag(diag_args);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
