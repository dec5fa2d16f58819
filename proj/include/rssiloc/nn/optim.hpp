#pragma once

#include <vector>

#include "rssiloc/nn/layers.hpp"
#include "rssiloc/nn/tensor.hpp"
#include "rssiloc/rng.hpp"

namespace rssiloc::nn {

// Uniform in [-a, a] with a = sqrt(6 / (fan_in + fan_out)).
Tensor xavier_init(size_t fan_in, size_t fan_out, Rng& rng);
// Same distribution for an arbitrary shape (convolution kernels).
Tensor xavier_init(std::vector<size_t> shape, size_t fan_in, size_t fan_out,
                   Rng& rng);

// Scales all gradients by max_norm / g when the global L2 norm g exceeds
// max_norm; returns the pre-clip norm.
double clip_global_norm(const std::vector<Tensor*>& grads, double max_norm);

// Clamps every element to [-max_abs, +max_abs].
void clip_elementwise(const std::vector<Tensor*>& grads, double max_abs);

struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t t = 0;
  std::vector<Tensor> m, v;

  AdamState() = default;
  AdamState(const std::vector<Param*>& params, double lr);
};

// Standard bias-corrected Adam update over param->grad.
void adam_step(const std::vector<Param*>& params, AdamState& state);

}  // namespace rssiloc::nn
