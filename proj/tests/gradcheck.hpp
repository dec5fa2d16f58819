#pragma once

#include <algorithm>
#include <vector>

#include "rssiloc/nn/layers.hpp"
#include "rssiloc/nn/tensor.hpp"
#include "rssiloc/rng.hpp"
#include "test_util.hpp"

namespace testutil {

inline double project(const rssiloc::nn::Tensor& y,
                      const rssiloc::nn::Tensor& w) {
  double s = 0.0;
  for (size_t i = 0; i < y.size(); ++i) s += y[i] * w[i];
  return s;
}

inline rssiloc::nn::Tensor random_tensor(std::vector<size_t> shape,
                                         rssiloc::Rng& rng, double lo = -1.0,
                                         double hi = 1.0) {
  rssiloc::nn::Tensor t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

// Central-difference check of a layer's input and parameter gradients under
// the projection loss sum(w .* forward(x)). Returns the worst relative
// error (absolute-floored at 1).
inline double layer_gradcheck(rssiloc::nn::Layer& layer, rssiloc::nn::Tensor x,
                              uint64_t seed, double eps = 1e-5) {
  using rssiloc::nn::Tensor;
  rssiloc::Rng rng(rssiloc::derive_seed(seed, 0xABCD));
  Tensor y0 = layer.forward(x, true);
  Tensor w = random_tensor(y0.shape(), rng);

  for (auto* p : layer.params()) p->grad.fill(0.0);
  layer.forward(x, true);
  const Tensor dx = layer.backward(w);
  std::vector<Tensor> analytic;
  for (auto* p : layer.params()) analytic.push_back(p->grad);

  auto loss_with = [&](Tensor& target, size_t idx, double delta) {
    const double saved = target[idx];
    target[idx] = saved + delta;
    const double loss = project(layer.forward(x, true), w);
    target[idx] = saved;
    return loss;
  };

  double worst = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double numeric =
        (loss_with(x, i, eps) - loss_with(x, i, -eps)) / (2.0 * eps);
    worst = std::max(worst, rel_err(dx[i], numeric));
  }
  const auto params = layer.params();
  for (size_t p = 0; p < params.size(); ++p)
    for (size_t i = 0; i < params[p]->value.size(); ++i) {
      const double numeric = (loss_with(params[p]->value, i, eps) -
                              loss_with(params[p]->value, i, -eps)) /
                             (2.0 * eps);
      worst = std::max(worst, rel_err(analytic[p][i], numeric));
    }
  return worst;
}

// Pool inputs where every window has a clear unique maximum, so central
// differences stay on one side of the max kink.
inline rssiloc::nn::Tensor pool_safe_input(std::vector<size_t> shape,
                                           rssiloc::Rng& rng) {
  using rssiloc::nn::Tensor;
  while (true) {
    Tensor x = random_tensor(shape, rng);
    std::vector<uint32_t> argmax;
    const Tensor y = rssiloc::nn::maxpool3x3_forward(x, &argmax);
    bool ok = true;
    for (size_t o = 0; o < y.size() && ok; ++o) {
      double second = -1e30;
      for (size_t i = 0; i < x.size(); ++i)
        if (i != argmax[o] && x[i] > second && x[i] <= y[o]) second = x[i];
      if (y[o] - second < 1e-3) ok = false;
    }
    if (ok) return x;
  }
}

}  // namespace testutil
