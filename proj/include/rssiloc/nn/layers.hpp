#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rssiloc/nn/tensor.hpp"
#include "rssiloc/rng.hpp"

namespace rssiloc::nn {

struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
};

// A differentiable block with cached activations. forward(training=false)
// must be side-effect free; backward may only follow a training forward.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x, bool training) = 0;
  virtual Tensor backward(const Tensor& dy) = 0;
  virtual std::vector<Param*> params() { return {}; }
};

// ---- stateless ops (the layers wrap these and keep the caches) ----

// y = x * w + b with x [B, in], w [in, out], b [out].
Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b);
struct DenseGrads {
  Tensor dx, dw, db;
};
DenseGrads dense_backward(const Tensor& x, const Tensor& w, const Tensor& dy);

// 3x3 cross-correlation with zero same-padding.
// x [B, H, W, Cin], k [3, 3, Cin, Cout], b [Cout] -> [B, H, W, Cout].
Tensor conv2d_forward(const Tensor& x, const Tensor& k, const Tensor& b);
struct Conv2dGrads {
  Tensor dx, dk, db;
};
Conv2dGrads conv2d_backward(const Tensor& x, const Tensor& k,
                            const Tensor& dy);

// 3x3 max pooling with stride 3; edge windows are truncated, so the output
// spatial dims are ceil(H/3) x ceil(W/3). argmax (flat input indices) is
// filled when non-null.
Tensor maxpool3x3_forward(const Tensor& x, std::vector<uint32_t>* argmax);
Tensor maxpool3x3_backward(const Tensor& dy,
                           const std::vector<size_t>& x_shape,
                           const std::vector<uint32_t>& argmax);

// Inverted dropout: keeps each element with probability keep_prob and scales
// survivors by 1/keep_prob; identity when not training.
Tensor dropout(const Tensor& x, double keep_prob, bool training, Rng& rng);

struct LstmState {
  Tensor c;  // [B, units]
  Tensor h;  // [B, units]
};

// One LSTM cell update. w_cat is the concatenated [in + units, 4 * units]
// weight matrix over [x, h_prev], gate column order (i, g, f, o):
//   c' = sigmoid(f) .* c + sigmoid(i) .* tanh(g)
//   h' = sigmoid(o) .* tanh(c')
LstmState lstm_cell_step(const Tensor& x, const LstmState& state,
                         const Tensor& w_cat, const Tensor& bias);

struct SoftmaxXent {
  double loss = 0.0;   // mean over the batch
  Tensor dlogits;      // (softmax - one_hot) / B
  Tensor probs;
};

// Numerically stable (max-subtracted) softmax + cross-entropy.
SoftmaxXent softmax_cross_entropy(const Tensor& logits,
                                  std::span<const int> labels);

// ---- layers ----

class Dense : public Layer {
 public:
  Dense(size_t in, size_t out, std::string name, Rng& init_rng);
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Param*> params() override { return {&w_, &b_}; }

 private:
  Param w_, b_;
  Tensor x_;
};

class Relu : public Layer {
 public:
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& dy) override;

 private:
  Tensor x_;
};

// [B, ...] -> [B, prod(...)].
class Flatten : public Layer {
 public:
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& dy) override;

 private:
  std::vector<size_t> in_shape_;
};

// [B, H, W] -> [B, H, W, 1]; gives the CNN its single input channel.
class ExpandLastDim : public Layer {
 public:
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& dy) override;

 private:
  std::vector<size_t> in_shape_;
};

class Conv2d : public Layer {
 public:
  Conv2d(size_t cin, size_t cout, std::string name, Rng& init_rng);
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Param*> params() override { return {&k_, &b_}; }

 private:
  Param k_, b_;
  Tensor x_;
};

class MaxPool3x3 : public Layer {
 public:
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& dy) override;

 private:
  std::vector<size_t> in_shape_;
  std::vector<uint32_t> argmax_;
};

class DropoutLayer : public Layer {
 public:
  // keep_prob in (0, 1]; throws std::invalid_argument otherwise.
  DropoutLayer(double keep_prob, uint64_t seed);
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& dy) override;
  double keep_prob() const { return keep_prob_; }

 private:
  double keep_prob_;
  Rng rng_;
  Tensor scale_;  // 0 or 1/keep per element, cached for backward
  bool identity_ = true;
};

// Unrolled LSTM over the window: [B, W, in] -> [B, W, units]. States are
// zero-initialized at every sequence start; gradients flow through the full
// unroll (backpropagation through time).
class Lstm : public Layer {
 public:
  Lstm(size_t in, size_t units, std::string name, Rng& init_rng);
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Param*> params() override { return {&w_, &b_}; }
  size_t units() const { return units_; }

 private:
  size_t in_, units_;
  Param w_, b_;
  // per-step caches
  std::vector<Tensor> concat_, gate_i_, gate_g_, gate_f_, gate_o_, cell_,
      tanh_cell_;
  size_t steps_ = 0, batch_ = 0;
};

// [B, W, u] -> [B, u], the last time step.
class TakeLastStep : public Layer {
 public:
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& dy) override;

 private:
  std::vector<size_t> in_shape_;
};

class Sequential {
 public:
  void add(std::unique_ptr<Layer> layer) {
    layers_.push_back(std::move(layer));
  }
  Tensor forward(const Tensor& x, bool training);
  Tensor backward(const Tensor& dy);
  std::vector<Param*> params();
  void zero_grads();
  size_t layer_count() const { return layers_.size(); }
  Layer& layer(size_t i) { return *layers_[i]; }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

}  // namespace rssiloc::nn
