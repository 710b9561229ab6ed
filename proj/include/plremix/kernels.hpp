#pragma once

#include "plremix/matrix.hpp"

namespace plremix::kernels {

// Serial reference implementations. Kept for testing and benchmarking: the
// parallel kernels below must reproduce these bit for bit.
namespace serial {

void linear_forward(const Mat& x, const Mat& w, const Vec& bias, Mat& y);
void linear_backward_input(const Mat& gy, const Mat& w, Mat& gx);
void linear_backward_params(const Mat& gy, const Mat& x, Mat& gw, Vec& gb);
void pairwise_dots(const Mat& a, const Mat& b, Mat& s);
void relu_forward(const Mat& a, Mat& y);
void relu_backward(const Mat& a, const Mat& gy, Mat& ga);
void softmax_rows(const Mat& z, Mat& t);

}  // namespace serial

// OpenMP-parallel kernels. Every output element is owned by exactly one loop
// iteration and inner accumulation order is fixed, so the result is identical
// to the serial reference for any thread count.

/// y = x * w^T + bias, row per sample. x: n x in, w: out x in, bias: out.
void linear_forward(const Mat& x, const Mat& w, const Vec& bias, Mat& y);

/// gx = gy * w. gy: n x out, w: out x in.
void linear_backward_input(const Mat& gy, const Mat& w, Mat& gx);

/// gw = gy^T * x (out x in), gb = column sums of gy.
void linear_backward_params(const Mat& gy, const Mat& x, Mat& gw, Vec& gb);

/// s(i, j) = <a_i, b_j>. a: m x d, b: n x d.
void pairwise_dots(const Mat& a, const Mat& b, Mat& s);

void relu_forward(const Mat& a, Mat& y);
void relu_backward(const Mat& a, const Mat& gy, Mat& ga);

/// Row-wise softmax with max subtraction.
void softmax_rows(const Mat& z, Mat& t);

}  // namespace plremix::kernels
