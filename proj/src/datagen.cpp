#include "plremix/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "plremix/csv.hpp"
#include "plremix/rng.hpp"

namespace plremix {

namespace {

constexpr uint64_t kTagCentroids = 0x63656e74;
constexpr uint64_t kTagSample = 0x73616d70;
constexpr uint64_t kTagNoise = 0x6e6f6973;

Mat draw_centroids(int num_classes, int dim, double separation, Rng& rng) {
  Mat centroids(num_classes, dim);
  for (;;) {
    for (int k = 0; k < num_classes; ++k)
      for (int j = 0; j < dim; ++j) centroids(k, j) = rng.normal();
    if (num_classes == 1) return centroids;
    double min_d = std::numeric_limits<double>::infinity();
    for (int a = 0; a < num_classes; ++a)
      for (int b = a + 1; b < num_classes; ++b) {
        double d2 = 0.0;
        for (int j = 0; j < dim; ++j) {
          const double diff = centroids(a, j) - centroids(b, j);
          d2 += diff * diff;
        }
        min_d = std::min(min_d, std::sqrt(d2));
      }
    if (min_d > 1e-9) {
      const double scale = separation / min_d;
      for (double& v : centroids.data) v *= scale;
      return centroids;
    }
    // coincident draw; retry with fresh values
  }
}

Dataset blobs_from_centroids(const Mat& centroids, int n_per_class, double spread,
                             uint64_t seed, uint64_t part_tag) {
  const int num_classes = centroids.rows;
  const int dim = centroids.cols;
  const int n = num_classes * n_per_class;
  Dataset ds;
  ds.num_classes = num_classes;
  ds.seed = seed;
  ds.features = Mat(n, dim);
  ds.true_labels.resize(n);
  ds.noisy_labels.resize(n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const int k = i / n_per_class;
    Rng r(derive_seed(seed, {kTagSample, part_tag, static_cast<uint64_t>(i)}));
    for (int j = 0; j < dim; ++j) ds.features(i, j) = centroids(k, j) + spread * r.normal();
    ds.true_labels[i] = k;
    ds.noisy_labels[i] = k;
  }
  return ds;
}

}  // namespace

Dataset make_blobs(int num_classes, int n_per_class, int dim, double separation, double spread,
                   uint64_t seed) {
  return make_blobs_split(num_classes, n_per_class, 0, dim, separation, spread, seed).first;
}

std::pair<Dataset, Dataset> make_blobs_split(int num_classes, int n_per_class, int test_per_class,
                                             int dim, double separation, double spread,
                                             uint64_t seed) {
  if (num_classes < 1 || n_per_class < 1 || test_per_class < 0)
    throw std::invalid_argument("make_blobs: non-positive sizes");
  if (dim < 2) throw std::invalid_argument("make_blobs: dim must be >= 2");
  if (separation <= 0.0 || spread <= 0.0)
    throw std::invalid_argument("make_blobs: separation and spread must be positive");

  Rng crng(derive_seed(seed, {kTagCentroids}));
  const Mat centroids = draw_centroids(num_classes, dim, separation, crng);
  Dataset train = blobs_from_centroids(centroids, n_per_class, spread, seed, 0);
  Dataset test;
  if (test_per_class > 0)
    test = blobs_from_centroids(centroids, test_per_class, spread, seed, 1);
  return {std::move(train), std::move(test)};
}

std::vector<int> nearest_other_centroid_mapping(const Dataset& ds) {
  const int c = ds.num_classes;
  if (c < 2) throw std::invalid_argument("nearest_other_centroid_mapping: needs >= 2 classes");
  Mat means(c, ds.dim());
  std::vector<int> counts(c, 0);
  for (int i = 0; i < ds.size(); ++i) {
    const int k = ds.true_labels[i];
    ++counts[k];
    for (int j = 0; j < ds.dim(); ++j) means(k, j) += ds.features(i, j);
  }
  for (int k = 0; k < c; ++k) {
    if (counts[k] == 0) throw std::invalid_argument("nearest_other_centroid_mapping: empty class");
    for (int j = 0; j < ds.dim(); ++j) means(k, j) /= counts[k];
  }
  std::vector<int> mapping(c);
  for (int k = 0; k < c; ++k) {
    double best = std::numeric_limits<double>::infinity();
    int arg = -1;
    for (int k2 = 0; k2 < c; ++k2) {
      if (k2 == k) continue;
      double d2 = 0.0;
      for (int j = 0; j < ds.dim(); ++j) {
        const double diff = means(k, j) - means(k2, j);
        d2 += diff * diff;
      }
      if (d2 < best) {
        best = d2;
        arg = k2;
      }
    }
    mapping[k] = arg;
  }
  return mapping;
}

Dataset inject_noise(const Dataset& ds, const NoiseSpec& spec, uint64_t seed) {
  if (spec.ratio < 0.0 || spec.ratio > 1.0)
    throw std::invalid_argument("inject_noise: ratio must be in [0, 1]");
  if (spec.kind == NoiseKind::asymmetric) {
    if (static_cast<int>(spec.mapping.size()) != ds.num_classes)
      throw std::invalid_argument("inject_noise: mapping size mismatch");
    for (int k = 0; k < ds.num_classes; ++k) {
      if (spec.mapping[k] < 0 || spec.mapping[k] >= ds.num_classes)
        throw std::invalid_argument("inject_noise: mapping target out of range");
      if (spec.mapping[k] == k)
        throw std::invalid_argument("inject_noise: mapping must not fix any class");
    }
  }
  Dataset out = ds;
  const int n = ds.size();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    Rng r(derive_seed(seed, {kTagNoise, static_cast<uint64_t>(i)}));
    if (r.uniform() < spec.ratio) {
      if (spec.kind == NoiseKind::symmetric)
        out.noisy_labels[i] = r.uniform_int(ds.num_classes);
      else
        out.noisy_labels[i] = spec.mapping[ds.noisy_labels[i]];
    }
  }
  return out;
}

double realized_noise_fraction(const Dataset& ds) {
  if (ds.size() == 0) return 0.0;
  int flips = 0;
  for (int i = 0; i < ds.size(); ++i)
    if (ds.noisy_labels[i] != ds.true_labels[i]) ++flips;
  return static_cast<double>(flips) / ds.size();
}

Vec augment(std::span<const double> x, const AugmentSpec& spec, AugStrength strength,
            uint64_t seed) {
  if (spec.weak_sigma < 0.0 || spec.weak_sigma > spec.strong_sigma)
    throw std::invalid_argument("augment: need 0 <= weak_sigma <= strong_sigma");
  if (spec.strong_dropout_p < 0.0 || spec.strong_dropout_p >= 1.0)
    throw std::invalid_argument("augment: strong_dropout_p must be in [0, 1)");
  Rng r(seed);
  Vec y(x.begin(), x.end());
  const double sigma = strength == AugStrength::weak ? spec.weak_sigma : spec.strong_sigma;
  for (double& v : y) v += sigma * r.normal();
  if (strength == AugStrength::strong && spec.strong_dropout_p > 0.0) {
    for (double& v : y)
      if (r.uniform() < spec.strong_dropout_p) v = 0.0;
  }
  return y;
}

Mat augment_rows(const Mat& features, std::span<const int> rows, const AugmentSpec& spec,
                 AugStrength strength, uint64_t base_seed) {
  Mat out(static_cast<int>(rows.size()), features.cols);
  const int n = static_cast<int>(rows.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const int src = rows[i];
    const Vec v = augment(std::span<const double>(features.row(src), features.cols), spec,
                          strength, derive_seed(base_seed, {static_cast<uint64_t>(src)}));
    std::copy(v.begin(), v.end(), out.row(i));
  }
  return out;
}

std::string dataset_to_csv(const Dataset& ds) {
  std::ostringstream out;
  for (int j = 0; j < ds.dim(); ++j) out << 'f' << j << ',';
  out << "y_noisy,y_true\n";
  for (int i = 0; i < ds.size(); ++i) {
    for (int j = 0; j < ds.dim(); ++j) out << fmt_double(ds.features(i, j)) << ',';
    out << ds.noisy_labels[i] << ',' << ds.true_labels[i] << '\n';
  }
  return out.str();
}

void save_dataset_csv(const Dataset& ds, const std::string& path) {
  write_text_file(path, dataset_to_csv(ds));
}

Dataset dataset_from_csv(const std::string& content) {
  std::istringstream in(content);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("dataset csv: empty");
  const auto header = split(trim(line), ',');
  if (header.size() < 3 || header[header.size() - 2] != "y_noisy" || header.back() != "y_true")
    throw std::runtime_error("dataset csv: bad header");
  const int dim = static_cast<int>(header.size()) - 2;

  std::vector<double> feats;
  std::vector<int> noisy, truth;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto cells = split(t, ',');
    if (static_cast<int>(cells.size()) != dim + 2)
      throw std::runtime_error("dataset csv: bad row width");
    for (int j = 0; j < dim; ++j) feats.push_back(parse_double(cells[j]));
    noisy.push_back(static_cast<int>(parse_int(cells[dim])));
    truth.push_back(static_cast<int>(parse_int(cells[dim + 1])));
  }
  Dataset ds;
  const int n = static_cast<int>(noisy.size());
  ds.features = Mat(n, dim);
  ds.features.data = std::move(feats);
  ds.noisy_labels = std::move(noisy);
  ds.true_labels = std::move(truth);
  int max_label = -1;
  for (int i = 0; i < n; ++i) {
    if (ds.noisy_labels[i] < 0 || ds.true_labels[i] < 0)
      throw std::runtime_error("dataset csv: negative label");
    max_label = std::max({max_label, ds.noisy_labels[i], ds.true_labels[i]});
  }
  ds.num_classes = max_label + 1;
  return ds;
}

Dataset load_dataset_csv(const std::string& path) {
  return dataset_from_csv(read_text_file(path));
}

}  // namespace plremix
