// Times the OpenMP kernels against their serial reference implementations
// and verifies that both produce identical bits.

#include <chrono>
#include <cstdio>
#include <string>

#include "plremix/kernels.hpp"
#include "plremix/rng.hpp"

using namespace plremix;

namespace {

Mat random_mat(int r, int c, Rng& rng) {
  Mat m(r, c);
  for (double& v : m.data) v = rng.normal();
  return m;
}

template <typename F>
double time_ms(F&& fn, int reps) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

bool same_bits(const Mat& a, const Mat& b) {
  if (a.rows != b.rows || a.cols != b.cols) return false;
  for (size_t k = 0; k < a.data.size(); ++k)
    if (a.data[k] != b.data[k]) return false;
  return true;
}

void report(const std::string& name, double serial_ms, double parallel_ms, bool match) {
  std::printf("%-24s serial %8.3f ms   parallel %8.3f ms   speedup %5.2fx   %s\n", name.c_str(),
              serial_ms, parallel_ms, serial_ms / parallel_ms, match ? "bitwise-equal" : "MISMATCH");
}

}  // namespace

int main() {
  Rng rng(7);
  const int n = 2048, in = 256, out = 256;
  const int reps = 5;

  const Mat x = random_mat(n, in, rng);
  const Mat w = random_mat(out, in, rng);
  Vec bias(out);
  for (double& v : bias) v = rng.normal();

  {
    Mat ys, yp;
    const double ts = time_ms([&] { kernels::serial::linear_forward(x, w, bias, ys); }, reps);
    const double tp = time_ms([&] { kernels::linear_forward(x, w, bias, yp); }, reps);
    report("linear_forward", ts, tp, same_bits(ys, yp));
  }
  {
    const Mat gy = random_mat(n, out, rng);
    Mat gxs, gxp;
    const double ts = time_ms([&] { kernels::serial::linear_backward_input(gy, w, gxs); }, reps);
    const double tp = time_ms([&] { kernels::linear_backward_input(gy, w, gxp); }, reps);
    report("linear_backward_input", ts, tp, same_bits(gxs, gxp));
  }
  {
    const Mat gy = random_mat(n, out, rng);
    Mat gws, gwp;
    Vec gbs, gbp;
    const double ts =
        time_ms([&] { kernels::serial::linear_backward_params(gy, x, gws, gbs); }, reps);
    const double tp = time_ms([&] { kernels::linear_backward_params(gy, x, gwp, gbp); }, reps);
    report("linear_backward_params", ts, tp, same_bits(gws, gwp) && gbs == gbp);
  }
  {
    const Mat a = random_mat(1024, 64, rng);
    const Mat b = random_mat(1024, 64, rng);
    Mat ss, sp;
    const double ts = time_ms([&] { kernels::serial::pairwise_dots(a, b, ss); }, reps);
    const double tp = time_ms([&] { kernels::pairwise_dots(a, b, sp); }, reps);
    report("pairwise_dots", ts, tp, same_bits(ss, sp));
  }
  {
    Mat ts_out, tp_out;
    const Mat z = random_mat(n, out, rng);
    const double ts = time_ms([&] { kernels::serial::softmax_rows(z, ts_out); }, reps);
    const double tp = time_ms([&] { kernels::softmax_rows(z, tp_out); }, reps);
    report("softmax_rows", ts, tp, same_bits(ts_out, tp_out));
  }
  return 0;
}
