#include "rssiloc/nn/optim.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rssiloc::nn {

Tensor xavier_init(std::vector<size_t> shape, size_t fan_in, size_t fan_out,
                   Rng& rng) {
  if (fan_in < 1 || fan_out < 1)
    throw std::invalid_argument("xavier_init: fans must be >= 1");
  const double a =
      std::sqrt(6.0 / (static_cast<double>(fan_in) + static_cast<double>(fan_out)));
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(-a, a);
  return t;
}

Tensor xavier_init(size_t fan_in, size_t fan_out, Rng& rng) {
  return xavier_init({fan_in, fan_out}, fan_in, fan_out, rng);
}

double clip_global_norm(const std::vector<Tensor*>& grads, double max_norm) {
  if (!(max_norm > 0.0))
    throw std::invalid_argument("clip_global_norm: max_norm must be > 0");
  double sq = 0.0;
  for (const Tensor* g : grads)
    for (double v : g->values()) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (Tensor* g : grads)
      for (double& v : g->values()) v *= scale;
  }
  return norm;
}

void clip_elementwise(const std::vector<Tensor*>& grads, double max_abs) {
  if (!(max_abs > 0.0))
    throw std::invalid_argument("clip_elementwise: max_abs must be > 0");
  for (Tensor* g : grads)
    for (double& v : g->values()) v = std::clamp(v, -max_abs, max_abs);
}

AdamState::AdamState(const std::vector<Param*>& params, double lr_) {
  lr = lr_;
  m.reserve(params.size());
  v.reserve(params.size());
  for (const Param* p : params) {
    m.emplace_back(p->value.shape());
    v.emplace_back(p->value.shape());
  }
}

void adam_step(const std::vector<Param*>& params, AdamState& state) {
  if (params.size() != state.m.size())
    throw std::invalid_argument("adam_step: state does not match parameters");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (size_t p = 0; p < params.size(); ++p) {
    Tensor& value = params[p]->value;
    const Tensor& grad = params[p]->grad;
    Tensor& m = state.m[p];
    Tensor& v = state.v[p];
    for (size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      value[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

}  // namespace rssiloc::nn
