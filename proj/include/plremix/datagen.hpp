#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "plremix/matrix.hpp"

namespace plremix {

/// Synthetic classification dataset. true_labels exist for evaluation and
/// diagnostics only; nothing on the training path may read them.
struct Dataset {
  Mat features;                  // N x dim
  std::vector<int> noisy_labels; // in [0, num_classes)
  std::vector<int> true_labels;  // evaluation only
  int num_classes = 0;
  uint64_t seed = 0;

  int size() const { return features.rows; }
  int dim() const { return features.cols; }
};

enum class NoiseKind { symmetric, asymmetric };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::symmetric;
  double ratio = 0.0;            // fraction of samples selected for relabeling
  std::vector<int> mapping;      // asymmetric only: class -> class, never identity
};

struct AugmentSpec {
  double weak_sigma = 0.15;
  double strong_sigma = 0.6;
  double strong_dropout_p = 0.15;  // per-coordinate zeroing probability
  int num_weak = 2;                // views per sample
  int num_strong = 2;
};

enum class AugStrength { weak, strong };

/// Isotropic Gaussian class blobs. Centroid directions are drawn at random
/// and rescaled so the closest centroid pair sits exactly `separation` apart.
/// noisy_labels start equal to true_labels.
Dataset make_blobs(int num_classes, int n_per_class, int dim, double separation, double spread,
                   uint64_t seed);

/// Same generator, split into a train part and a clean held-out part that
/// share the class centroids.
std::pair<Dataset, Dataset> make_blobs_split(int num_classes, int n_per_class, int test_per_class,
                                             int dim, double separation, double spread,
                                             uint64_t seed);

/// Asymmetric-noise default for blobs: maps each class to the class whose
/// mean (by true label) is nearest, ties broken by lower index.
std::vector<int> nearest_other_centroid_mapping(const Dataset& ds);

/// Symmetric: each sample is independently selected with probability ratio
/// and its label redrawn uniformly over all classes (its own included).
/// Asymmetric: selected samples get mapping(label). true_labels untouched.
Dataset inject_noise(const Dataset& ds, const NoiseSpec& spec, uint64_t seed);

double realized_noise_fraction(const Dataset& ds);

/// One augmented view of one sample; a pure function of (x, spec, seed).
Vec augment(std::span<const double> x, const AugmentSpec& spec, AugStrength strength,
            uint64_t seed);

/// Augments rows[i] of features with a stream keyed by the global row index.
Mat augment_rows(const Mat& features, std::span<const int> rows, const AugmentSpec& spec,
                 AugStrength strength, uint64_t base_seed);

/// CSV schema: header f0,...,f{d-1},y_noisy,y_true; one row per sample.
std::string dataset_to_csv(const Dataset& ds);
void save_dataset_csv(const Dataset& ds, const std::string& path);
Dataset dataset_from_csv(const std::string& content);
Dataset load_dataset_csv(const std::string& path);

}  // namespace plremix
