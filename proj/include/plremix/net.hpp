#pragma once

#include <cstdint>
#include <string>

#include "plremix/matrix.hpp"

namespace plremix {

struct NetDims {
  int input = 2;
  int hidden1 = 64;
  int hidden2 = 64;
  int classes = 2;
  int proj_hidden = 64;
  int proj_dim = 32;
};

/// Encoder (two ReLU layers) with a linear classifier head and a one-hidden-
/// layer projection head whose output is L2-normalized inside forward().
/// Weight matrices are stored out x in.
struct NetState {
  NetDims dims;
  Mat w1, w2, wc, wp1, wp2;
  Vec b1, b2, bc, bp1, bp2;

  static NetState init(const NetDims& dims, uint64_t seed);

  int param_count() const;

  /// Canonical flattening order: w1,b1,w2,b2,wc,bc,wp1,bp1,wp2,bp2, each
  /// row-major. backward() and sgd_step() use the same order.
  Vec flatten() const;
  void unflatten(const Vec& params);
};

/// Forward activations kept for the backward pass.
struct ForwardCache {
  Mat x;        // input batch
  Mat a1, h1;   // first encoder layer pre/post ReLU
  Mat a2, h2;   // second encoder layer; h2 feeds both heads
  Mat z, t;     // logits and softmax probabilities
  Mat up, u;    // projector hidden pre/post ReLU
  Mat v;        // projector output before normalization
  Vec vnorm;    // per-row norms used for normalization (floored at 1e-12)
  Mat q;        // unit-norm projection embeddings
};

ForwardCache forward(const NetState& net, const Mat& x);

/// Exact reverse-mode gradients for upstream gz on the logits and gq on the
/// normalized embeddings (either may be empty). Includes the normalization
/// Jacobian of q. Returns a flat vector in the canonical parameter order.
Vec backward(const NetState& net, const ForwardCache& cache, const Mat& gz, const Mat& gq);

struct SgdState {
  Vec velocity;
};

/// v <- momentum * v + g + weight_decay * theta; theta <- theta - lr * v.
void sgd_step(NetState& net, const Vec& grad, double lr, double momentum, double weight_decay,
              SgdState& state);

/// gz = t (gt - <gt, t>): pullback of a gradient on softmax outputs to logits.
void softmax_vjp(const double* t, const double* gt, int classes, double* gz);

/// Writes params as one value per line plus a JSON sidecar with the dims.
/// Round-trips bit-exactly in double precision.
void save_checkpoint(const NetState& net, const std::string& params_path,
                     const std::string& dims_path);
NetState load_checkpoint(const std::string& params_path, const std::string& dims_path);

}  // namespace plremix
