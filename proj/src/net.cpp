#include "plremix/net.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "plremix/csv.hpp"
#include "plremix/kernels.hpp"
#include "plremix/rng.hpp"

namespace plremix {

namespace {

void init_layer(Mat& w, Vec& b, int out, int in, double gain, Rng& rng) {
  w = Mat(out, in);
  const double sigma = gain / std::sqrt(static_cast<double>(in));
  for (double& v : w.data) v = sigma * rng.normal();
  b.assign(out, 0.0);
}

void append_block(Vec& out, const Mat& w, const Vec& b) {
  out.insert(out.end(), w.data.begin(), w.data.end());
  out.insert(out.end(), b.begin(), b.end());
}

size_t take_block(const Vec& in, size_t pos, Mat& w, Vec& b) {
  std::copy(in.begin() + pos, in.begin() + pos + w.size(), w.data.begin());
  pos += w.size();
  std::copy(in.begin() + pos, in.begin() + pos + b.size(), b.begin());
  return pos + b.size();
}

constexpr double kNormFloor = 1e-12;

}  // namespace

NetState NetState::init(const NetDims& dims, uint64_t seed) {
  if (dims.input < 1 || dims.hidden1 < 1 || dims.hidden2 < 1 || dims.classes < 1 ||
      dims.proj_hidden < 1 || dims.proj_dim < 1)
    throw std::invalid_argument("NetState::init: non-positive dimension");
  NetState net;
  net.dims = dims;
  Rng rng(derive_seed(seed, {0x6e6574}));
  const double relu_gain = std::sqrt(2.0);
  init_layer(net.w1, net.b1, dims.hidden1, dims.input, relu_gain, rng);
  init_layer(net.w2, net.b2, dims.hidden2, dims.hidden1, relu_gain, rng);
  init_layer(net.wc, net.bc, dims.classes, dims.hidden2, 1.0, rng);
  init_layer(net.wp1, net.bp1, dims.proj_hidden, dims.hidden2, relu_gain, rng);
  init_layer(net.wp2, net.bp2, dims.proj_dim, dims.proj_hidden, 1.0, rng);
  return net;
}

int NetState::param_count() const {
  return static_cast<int>(w1.size() + b1.size() + w2.size() + b2.size() + wc.size() + bc.size() +
                          wp1.size() + bp1.size() + wp2.size() + bp2.size());
}

Vec NetState::flatten() const {
  Vec out;
  out.reserve(param_count());
  append_block(out, w1, b1);
  append_block(out, w2, b2);
  append_block(out, wc, bc);
  append_block(out, wp1, bp1);
  append_block(out, wp2, bp2);
  return out;
}

void NetState::unflatten(const Vec& params) {
  if (static_cast<int>(params.size()) != param_count())
    throw std::invalid_argument("unflatten: length mismatch");
  size_t pos = 0;
  pos = take_block(params, pos, w1, b1);
  pos = take_block(params, pos, w2, b2);
  pos = take_block(params, pos, wc, bc);
  pos = take_block(params, pos, wp1, bp1);
  pos = take_block(params, pos, wp2, bp2);
}

ForwardCache forward(const NetState& net, const Mat& x) {
  if (x.cols != net.dims.input) throw std::invalid_argument("forward: input width mismatch");
  if (!all_finite(x)) throw std::invalid_argument("forward: non-finite input");
  ForwardCache c;
  c.x = x;
  kernels::linear_forward(x, net.w1, net.b1, c.a1);
  kernels::relu_forward(c.a1, c.h1);
  kernels::linear_forward(c.h1, net.w2, net.b2, c.a2);
  kernels::relu_forward(c.a2, c.h2);
  kernels::linear_forward(c.h2, net.wc, net.bc, c.z);
  kernels::softmax_rows(c.z, c.t);
  kernels::linear_forward(c.h2, net.wp1, net.bp1, c.up);
  kernels::relu_forward(c.up, c.u);
  kernels::linear_forward(c.u, net.wp2, net.bp2, c.v);
  c.vnorm.resize(c.v.rows);
  c.q = Mat(c.v.rows, c.v.cols);
  for (int i = 0; i < c.v.rows; ++i) {
    const double n = std::max(l2_norm(c.v.row(i), c.v.cols), kNormFloor);
    c.vnorm[i] = n;
    for (int j = 0; j < c.v.cols; ++j) c.q(i, j) = c.v(i, j) / n;
  }
  return c;
}

Vec backward(const NetState& net, const ForwardCache& cache, const Mat& gz, const Mat& gq) {
  const int b = cache.x.rows;
  if (cache.x.cols != net.dims.input || cache.h2.cols != net.dims.hidden2)
    throw std::invalid_argument("backward: cache does not match this net");
  if (!gz.empty() && (gz.rows != b || gz.cols != net.dims.classes))
    throw std::invalid_argument("backward: gz shape mismatch");
  if (!gq.empty() && (gq.rows != b || gq.cols != net.dims.proj_dim))
    throw std::invalid_argument("backward: gq shape mismatch");

  Mat gfeat(b, net.dims.hidden2);
  Mat gwc(net.dims.classes, net.dims.hidden2);
  Vec gbc(net.dims.classes, 0.0);
  Mat gwp1(net.dims.proj_hidden, net.dims.hidden2);
  Vec gbp1(net.dims.proj_hidden, 0.0);
  Mat gwp2(net.dims.proj_dim, net.dims.proj_hidden);
  Vec gbp2(net.dims.proj_dim, 0.0);

  if (!gz.empty()) {
    kernels::linear_backward_params(gz, cache.h2, gwc, gbc);
    kernels::linear_backward_input(gz, net.wc, gfeat);
  }

  if (!gq.empty()) {
    // dL/dv = (gq - <gq, q> q) / ||v||, row by row
    Mat gv(b, net.dims.proj_dim);
    for (int i = 0; i < b; ++i) {
      const double* gqr = gq.row(i);
      const double* qr = cache.q.row(i);
      const double s = dot(gqr, qr, net.dims.proj_dim);
      double* gvr = gv.row(i);
      for (int j = 0; j < net.dims.proj_dim; ++j) gvr[j] = (gqr[j] - s * qr[j]) / cache.vnorm[i];
    }
    kernels::linear_backward_params(gv, cache.u, gwp2, gbp2);
    Mat gu;
    kernels::linear_backward_input(gv, net.wp2, gu);
    Mat gup;
    kernels::relu_backward(cache.up, gu, gup);
    kernels::linear_backward_params(gup, cache.h2, gwp1, gbp1);
    Mat gfeat_p;
    kernels::linear_backward_input(gup, net.wp1, gfeat_p);
    for (size_t k = 0; k < gfeat.data.size(); ++k) gfeat.data[k] += gfeat_p.data[k];
  }

  Mat ga2;
  kernels::relu_backward(cache.a2, gfeat, ga2);
  Mat gw2;
  Vec gb2;
  kernels::linear_backward_params(ga2, cache.h1, gw2, gb2);
  Mat gh1;
  kernels::linear_backward_input(ga2, net.w2, gh1);
  Mat ga1;
  kernels::relu_backward(cache.a1, gh1, ga1);
  Mat gw1;
  Vec gb1;
  kernels::linear_backward_params(ga1, cache.x, gw1, gb1);

  Vec grad;
  grad.reserve(net.param_count());
  append_block(grad, gw1, gb1);
  append_block(grad, gw2, gb2);
  append_block(grad, gwc, gbc);
  append_block(grad, gwp1, gbp1);
  append_block(grad, gwp2, gbp2);
  return grad;
}

void sgd_step(NetState& net, const Vec& grad, double lr, double momentum, double weight_decay,
              SgdState& state) {
  if (lr < 0.0) throw std::invalid_argument("sgd_step: negative learning rate");
  if (static_cast<int>(grad.size()) != net.param_count())
    throw std::invalid_argument("sgd_step: gradient length mismatch");
  if (!all_finite(grad)) throw std::runtime_error("sgd_step: non-finite gradient");
  Vec params = net.flatten();
  if (state.velocity.empty()) state.velocity.assign(params.size(), 0.0);
  if (state.velocity.size() != params.size())
    throw std::invalid_argument("sgd_step: optimizer state size mismatch");
  for (size_t k = 0; k < params.size(); ++k) {
    const double g = grad[k] + weight_decay * params[k];
    state.velocity[k] = momentum * state.velocity[k] + g;
    params[k] -= lr * state.velocity[k];
  }
  net.unflatten(params);
}

void softmax_vjp(const double* t, const double* gt, int classes, double* gz) {
  double inner = 0.0;
  for (int c = 0; c < classes; ++c) inner += gt[c] * t[c];
  for (int c = 0; c < classes; ++c) gz[c] = t[c] * (gt[c] - inner);
}

void save_checkpoint(const NetState& net, const std::string& params_path,
                     const std::string& dims_path) {
  std::ostringstream out;
  for (double v : net.flatten()) out << fmt_double(v) << '\n';
  write_text_file(params_path, out.str());

  nlohmann::json j;
  j["input"] = net.dims.input;
  j["hidden1"] = net.dims.hidden1;
  j["hidden2"] = net.dims.hidden2;
  j["classes"] = net.dims.classes;
  j["proj_hidden"] = net.dims.proj_hidden;
  j["proj_dim"] = net.dims.proj_dim;
  write_text_file(dims_path, j.dump(2) + "\n");
}

NetState load_checkpoint(const std::string& params_path, const std::string& dims_path) {
  const auto j = nlohmann::json::parse(read_text_file(dims_path));
  NetDims dims;
  dims.input = j.at("input").get<int>();
  dims.hidden1 = j.at("hidden1").get<int>();
  dims.hidden2 = j.at("hidden2").get<int>();
  dims.classes = j.at("classes").get<int>();
  dims.proj_hidden = j.at("proj_hidden").get<int>();
  dims.proj_dim = j.at("proj_dim").get<int>();
  NetState net = NetState::init(dims, 0);

  Vec params;
  params.reserve(net.param_count());
  std::istringstream in(read_text_file(params_path));
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (!t.empty()) params.push_back(parse_double(t));
  }
  net.unflatten(params);
  return net;
}

}  // namespace plremix
