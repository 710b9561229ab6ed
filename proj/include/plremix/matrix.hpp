#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace plremix {

using Vec = std::vector<double>;

/// Dense row-major matrix of doubles. Rows are samples unless noted otherwise.
struct Mat {
  int rows = 0;
  int cols = 0;
  Vec data;

  Mat() = default;
  Mat(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<size_t>(r) * static_cast<size_t>(c), fill) {
    if (r < 0 || c < 0) throw std::invalid_argument("Mat: negative shape");
  }

  bool empty() const { return rows == 0 || cols == 0; }
  size_t size() const { return data.size(); }

  double& operator()(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }

  double* row(int i) { return data.data() + static_cast<size_t>(i) * cols; }
  const double* row(int i) const { return data.data() + static_cast<size_t>(i) * cols; }
};

inline double dot(const double* a, const double* b, int n) {
  double acc = 0.0;
  for (int k = 0; k < n; ++k) acc += a[k] * b[k];
  return acc;
}

inline double l2_norm(const double* a, int n) { return std::sqrt(dot(a, a, n)); }

inline bool all_finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline bool all_finite(const Mat& m) { return all_finite(m.data); }

/// y += a * x, elementwise.
inline void axpy(double a, const Vec& x, Vec& y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: length mismatch");
  for (size_t k = 0; k < x.size(); ++k) y[k] += a * x[k];
}

inline void check_same_shape(const Mat& a, const Mat& b, const char* where) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw std::invalid_argument(std::string(where) + ": shape mismatch");
}

}  // namespace plremix
