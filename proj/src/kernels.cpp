#include "plremix/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace plremix::kernels {

namespace {

void check_linear(const Mat& x, const Mat& w, const Vec& bias) {
  if (x.cols != w.cols) throw std::invalid_argument("linear_forward: input width mismatch");
  if (static_cast<int>(bias.size()) != w.rows)
    throw std::invalid_argument("linear_forward: bias length mismatch");
}

}  // namespace

namespace serial {

void linear_forward(const Mat& x, const Mat& w, const Vec& bias, Mat& y) {
  check_linear(x, w, bias);
  y = Mat(x.rows, w.rows);
  for (int i = 0; i < x.rows; ++i) {
    const double* xr = x.row(i);
    double* yr = y.row(i);
    for (int o = 0; o < w.rows; ++o) yr[o] = bias[o] + dot(xr, w.row(o), x.cols);
  }
}

void linear_backward_input(const Mat& gy, const Mat& w, Mat& gx) {
  if (gy.cols != w.rows) throw std::invalid_argument("linear_backward_input: shape mismatch");
  gx = Mat(gy.rows, w.cols);
  for (int i = 0; i < gy.rows; ++i) {
    const double* gr = gy.row(i);
    double* xr = gx.row(i);
    for (int k = 0; k < w.cols; ++k) {
      double acc = 0.0;
      for (int o = 0; o < w.rows; ++o) acc += gr[o] * w(o, k);
      xr[k] = acc;
    }
  }
}

void linear_backward_params(const Mat& gy, const Mat& x, Mat& gw, Vec& gb) {
  if (gy.rows != x.rows) throw std::invalid_argument("linear_backward_params: row mismatch");
  gw = Mat(gy.cols, x.cols);
  gb.assign(gy.cols, 0.0);
  for (int o = 0; o < gy.cols; ++o) {
    double* wr = gw.row(o);
    double acc_b = 0.0;
    for (int i = 0; i < gy.rows; ++i) {
      const double g = gy(i, o);
      acc_b += g;
      const double* xr = x.row(i);
      for (int k = 0; k < x.cols; ++k) wr[k] += g * xr[k];
    }
    gb[o] = acc_b;
  }
}

void pairwise_dots(const Mat& a, const Mat& b, Mat& s) {
  if (a.cols != b.cols) throw std::invalid_argument("pairwise_dots: width mismatch");
  s = Mat(a.rows, b.rows);
  for (int i = 0; i < a.rows; ++i) {
    const double* ar = a.row(i);
    double* sr = s.row(i);
    for (int j = 0; j < b.rows; ++j) sr[j] = dot(ar, b.row(j), a.cols);
  }
}

void relu_forward(const Mat& a, Mat& y) {
  y = Mat(a.rows, a.cols);
  for (size_t k = 0; k < a.data.size(); ++k) y.data[k] = a.data[k] > 0.0 ? a.data[k] : 0.0;
}

void relu_backward(const Mat& a, const Mat& gy, Mat& ga) {
  check_same_shape(a, gy, "relu_backward");
  ga = Mat(a.rows, a.cols);
  for (size_t k = 0; k < a.data.size(); ++k) ga.data[k] = a.data[k] > 0.0 ? gy.data[k] : 0.0;
}

void softmax_rows(const Mat& z, Mat& t) {
  t = Mat(z.rows, z.cols);
  for (int i = 0; i < z.rows; ++i) {
    const double* zr = z.row(i);
    double* tr = t.row(i);
    double m = zr[0];
    for (int c = 1; c < z.cols; ++c) m = std::max(m, zr[c]);
    double sum = 0.0;
    for (int c = 0; c < z.cols; ++c) {
      tr[c] = std::exp(zr[c] - m);
      sum += tr[c];
    }
    for (int c = 0; c < z.cols; ++c) tr[c] /= sum;
  }
}

}  // namespace serial

void linear_forward(const Mat& x, const Mat& w, const Vec& bias, Mat& y) {
  check_linear(x, w, bias);
  y = Mat(x.rows, w.rows);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < x.rows; ++i) {
    const double* xr = x.row(i);
    double* yr = y.row(i);
    for (int o = 0; o < w.rows; ++o) yr[o] = bias[o] + dot(xr, w.row(o), x.cols);
  }
}

void linear_backward_input(const Mat& gy, const Mat& w, Mat& gx) {
  if (gy.cols != w.rows) throw std::invalid_argument("linear_backward_input: shape mismatch");
  gx = Mat(gy.rows, w.cols);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < gy.rows; ++i) {
    const double* gr = gy.row(i);
    double* xr = gx.row(i);
    for (int k = 0; k < w.cols; ++k) {
      double acc = 0.0;
      for (int o = 0; o < w.rows; ++o) acc += gr[o] * w(o, k);
      xr[k] = acc;
    }
  }
}

void linear_backward_params(const Mat& gy, const Mat& x, Mat& gw, Vec& gb) {
  if (gy.rows != x.rows) throw std::invalid_argument("linear_backward_params: row mismatch");
  gw = Mat(gy.cols, x.cols);
  gb.assign(gy.cols, 0.0);
#pragma omp parallel for schedule(static)
  for (int o = 0; o < gy.cols; ++o) {
    double* wr = gw.row(o);
    double acc_b = 0.0;
    for (int i = 0; i < gy.rows; ++i) {
      const double g = gy(i, o);
      acc_b += g;
      const double* xr = x.row(i);
      for (int k = 0; k < x.cols; ++k) wr[k] += g * xr[k];
    }
    gb[o] = acc_b;
  }
}

void pairwise_dots(const Mat& a, const Mat& b, Mat& s) {
  if (a.cols != b.cols) throw std::invalid_argument("pairwise_dots: width mismatch");
  s = Mat(a.rows, b.rows);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < a.rows; ++i) {
    const double* ar = a.row(i);
    double* sr = s.row(i);
    for (int j = 0; j < b.rows; ++j) sr[j] = dot(ar, b.row(j), a.cols);
  }
}

void relu_forward(const Mat& a, Mat& y) {
  y = Mat(a.rows, a.cols);
  const size_t n = a.data.size();
#pragma omp parallel for schedule(static)
  for (long long k = 0; k < static_cast<long long>(n); ++k)
    y.data[k] = a.data[k] > 0.0 ? a.data[k] : 0.0;
}

void relu_backward(const Mat& a, const Mat& gy, Mat& ga) {
  check_same_shape(a, gy, "relu_backward");
  ga = Mat(a.rows, a.cols);
  const size_t n = a.data.size();
#pragma omp parallel for schedule(static)
  for (long long k = 0; k < static_cast<long long>(n); ++k)
    ga.data[k] = a.data[k] > 0.0 ? gy.data[k] : 0.0;
}

void softmax_rows(const Mat& z, Mat& t) {
  t = Mat(z.rows, z.cols);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < z.rows; ++i) {
    const double* zr = z.row(i);
    double* tr = t.row(i);
    double m = zr[0];
    for (int c = 1; c < z.cols; ++c) m = std::max(m, zr[c]);
    double sum = 0.0;
    for (int c = 0; c < z.cols; ++c) {
      tr[c] = std::exp(zr[c] - m);
      sum += tr[c];
    }
    for (int c = 0; c < z.cols; ++c) tr[c] /= sum;
  }
}

}  // namespace plremix::kernels
