#include "rssiloc/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rssiloc/nn/optim.hpp"

namespace rssiloc::nn {

namespace {

double sigmoid(double x) {
  return 1.0 / (1.0 + std::exp(-x));
}

void require_rank(const Tensor& t, size_t rank, const char* who) {
  if (t.rank() != rank)
    throw std::invalid_argument(std::string(who) + ": expected rank " +
                                std::to_string(rank) + " input, got " +
                                shape_str(t));
}

}  // namespace

// ---- dense ----

Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (b.rank() != 1 || b.dim(0) != w.dim(1))
    throw std::invalid_argument("dense: bias " + shape_str(b) +
                                " does not match weights " + shape_str(w));
  Tensor y = matmul(x, w);
  const size_t out = w.dim(1);
  for (size_t i = 0; i < y.dim(0); ++i)
    for (size_t j = 0; j < out; ++j) y(i, j) += b[j];
  return y;
}

DenseGrads dense_backward(const Tensor& x, const Tensor& w, const Tensor& dy) {
  DenseGrads g;
  g.dx = matmul_nt(dy, w);
  g.dw = matmul_tn(x, dy);
  g.db = Tensor({w.dim(1)});
  for (size_t i = 0; i < dy.dim(0); ++i)
    for (size_t j = 0; j < dy.dim(1); ++j) g.db[j] += dy(i, j);
  return g;
}

Dense::Dense(size_t in, size_t out, std::string name, Rng& init_rng) {
  w_.name = name + ".w";
  w_.value = xavier_init(in, out, init_rng);
  w_.grad = Tensor({in, out});
  b_.name = name + ".b";
  b_.value = Tensor({out});
  b_.grad = Tensor({out});
}

Tensor Dense::forward(const Tensor& x, bool training) {
  if (training) x_ = x;
  return dense_forward(x, w_.value, b_.value);
}

Tensor Dense::backward(const Tensor& dy) {
  DenseGrads g = dense_backward(x_, w_.value, dy);
  for (size_t i = 0; i < g.dw.size(); ++i) w_.grad[i] += g.dw[i];
  for (size_t i = 0; i < g.db.size(); ++i) b_.grad[i] += g.db[i];
  return g.dx;
}

// ---- relu ----

Tensor Relu::forward(const Tensor& x, bool training) {
  if (training) x_ = x;
  Tensor y = x;
  for (auto& v : y.values()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor Relu::backward(const Tensor& dy) {
  Tensor dx = dy;
  for (size_t i = 0; i < dx.size(); ++i)
    if (!(x_[i] > 0.0)) dx[i] = 0.0;
  return dx;
}

// ---- shape adapters ----

Tensor Flatten::forward(const Tensor& x, bool training) {
  (void)training;
  in_shape_ = x.shape();
  return x.reshaped({x.dim(0), x.size() / x.dim(0)});
}

Tensor Flatten::backward(const Tensor& dy) {
  return dy.reshaped(in_shape_);
}

Tensor ExpandLastDim::forward(const Tensor& x, bool training) {
  (void)training;
  in_shape_ = x.shape();
  auto shape = x.shape();
  shape.push_back(1);
  return x.reshaped(shape);
}

Tensor ExpandLastDim::backward(const Tensor& dy) {
  return dy.reshaped(in_shape_);
}

// ---- conv ----

Tensor conv2d_forward(const Tensor& x, const Tensor& k, const Tensor& b) {
  require_rank(x, 4, "conv2d");
  require_rank(k, 4, "conv2d kernel");
  if (k.dim(0) != 3 || k.dim(1) != 3 || k.dim(2) != x.dim(3))
    throw std::invalid_argument("conv2d: kernel " + shape_str(k) +
                                " does not match input " + shape_str(x));
  const size_t B = x.dim(0), H = x.dim(1), W = x.dim(2), Ci = x.dim(3);
  const size_t Co = k.dim(3);
  Tensor y({B, H, W, Co});
  std::vector<double> acc(Co);
  for (size_t n = 0; n < B; ++n)
    for (size_t i = 0; i < H; ++i)
      for (size_t j = 0; j < W; ++j) {
        for (size_t co = 0; co < Co; ++co) acc[co] = b[co];
        for (size_t di = 0; di < 3; ++di) {
          const size_t ii = i + di;
          if (ii < 1 || ii > H) continue;  // zero padding
          for (size_t dj = 0; dj < 3; ++dj) {
            const size_t jj = j + dj;
            if (jj < 1 || jj > W) continue;
            for (size_t ci = 0; ci < Ci; ++ci) {
              const double xv = x(n, ii - 1, jj - 1, ci);
              const double* kp = &k(di, dj, ci, 0);
              for (size_t co = 0; co < Co; ++co) acc[co] += xv * kp[co];
            }
          }
        }
        double* yp = &y(n, i, j, 0);
        for (size_t co = 0; co < Co; ++co) yp[co] = acc[co];
      }
  return y;
}

Conv2dGrads conv2d_backward(const Tensor& x, const Tensor& k,
                            const Tensor& dy) {
  const size_t B = x.dim(0), H = x.dim(1), W = x.dim(2), Ci = x.dim(3);
  const size_t Co = k.dim(3);
  Conv2dGrads g;
  g.dx = Tensor(x.shape());
  g.dk = Tensor(k.shape());
  g.db = Tensor({Co});
  for (size_t n = 0; n < B; ++n)
    for (size_t i = 0; i < H; ++i)
      for (size_t j = 0; j < W; ++j) {
        const double* dyp = &dy(n, i, j, 0);
        for (size_t co = 0; co < Co; ++co) g.db[co] += dyp[co];
        for (size_t di = 0; di < 3; ++di) {
          const size_t ii = i + di;
          if (ii < 1 || ii > H) continue;
          for (size_t dj = 0; dj < 3; ++dj) {
            const size_t jj = j + dj;
            if (jj < 1 || jj > W) continue;
            for (size_t ci = 0; ci < Ci; ++ci) {
              const double xv = x(n, ii - 1, jj - 1, ci);
              double* dxp = &g.dx(n, ii - 1, jj - 1, ci);
              double* dkp = &g.dk(di, dj, ci, 0);
              const double* kp = &k(di, dj, ci, 0);
              double dxv = 0.0;
              for (size_t co = 0; co < Co; ++co) {
                dkp[co] += xv * dyp[co];
                dxv += kp[co] * dyp[co];
              }
              *dxp += dxv;
            }
          }
        }
      }
  return g;
}

Conv2d::Conv2d(size_t cin, size_t cout, std::string name, Rng& init_rng) {
  k_.name = name + ".k";
  k_.value = xavier_init({3, 3, cin, cout}, 9 * cin, 9 * cout, init_rng);
  k_.grad = Tensor({3, 3, cin, cout});
  b_.name = name + ".b";
  b_.value = Tensor({cout});
  b_.grad = Tensor({cout});
}

Tensor Conv2d::forward(const Tensor& x, bool training) {
  if (training) x_ = x;
  return conv2d_forward(x, k_.value, b_.value);
}

Tensor Conv2d::backward(const Tensor& dy) {
  Conv2dGrads g = conv2d_backward(x_, k_.value, dy);
  for (size_t i = 0; i < g.dk.size(); ++i) k_.grad[i] += g.dk[i];
  for (size_t i = 0; i < g.db.size(); ++i) b_.grad[i] += g.db[i];
  return g.dx;
}

// ---- max pooling ----

Tensor maxpool3x3_forward(const Tensor& x, std::vector<uint32_t>* argmax) {
  require_rank(x, 4, "maxpool");
  const size_t B = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
  const size_t OH = (H + 2) / 3, OW = (W + 2) / 3;
  Tensor y({B, OH, OW, C});
  if (argmax) argmax->assign(y.size(), 0);
  for (size_t n = 0; n < B; ++n)
    for (size_t oi = 0; oi < OH; ++oi)
      for (size_t oj = 0; oj < OW; ++oj)
        for (size_t c = 0; c < C; ++c) {
          const size_t i_end = std::min(oi * 3 + 3, H);
          const size_t j_end = std::min(oj * 3 + 3, W);
          double best = -std::numeric_limits<double>::infinity();
          size_t best_idx = 0;
          for (size_t i = oi * 3; i < i_end; ++i)
            for (size_t j = oj * 3; j < j_end; ++j) {
              const size_t idx = ((n * H + i) * W + j) * C + c;
              const double v = x[idx];
              if (v > best) {
                best = v;
                best_idx = idx;
              }
            }
          y(n, oi, oj, c) = best;
          if (argmax)
            (*argmax)[((n * OH + oi) * OW + oj) * C + c] =
                static_cast<uint32_t>(best_idx);
        }
  return y;
}

Tensor maxpool3x3_backward(const Tensor& dy,
                           const std::vector<size_t>& x_shape,
                           const std::vector<uint32_t>& argmax) {
  Tensor dx(x_shape);
  for (size_t i = 0; i < dy.size(); ++i) dx[argmax[i]] += dy[i];
  return dx;
}

Tensor MaxPool3x3::forward(const Tensor& x, bool training) {
  (void)training;
  in_shape_ = x.shape();
  return maxpool3x3_forward(x, &argmax_);
}

Tensor MaxPool3x3::backward(const Tensor& dy) {
  return maxpool3x3_backward(dy, in_shape_, argmax_);
}

// ---- dropout ----

Tensor dropout(const Tensor& x, double keep_prob, bool training, Rng& rng) {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0))
    throw std::invalid_argument("dropout: keep_prob must be in (0, 1]");
  if (!training || keep_prob == 1.0) return x;
  Tensor y = x;
  const double inv = 1.0 / keep_prob;
  for (auto& v : y.values()) v = rng.uniform() < keep_prob ? v * inv : 0.0;
  return y;
}

DropoutLayer::DropoutLayer(double keep_prob, uint64_t seed)
    : keep_prob_(keep_prob), rng_(seed) {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0))
    throw std::invalid_argument("dropout: keep_prob must be in (0, 1]");
}

Tensor DropoutLayer::forward(const Tensor& x, bool training) {
  identity_ = !training || keep_prob_ == 1.0;
  if (identity_) return x;
  scale_ = Tensor(x.shape());
  const double inv = 1.0 / keep_prob_;
  Tensor y = x;
  for (size_t i = 0; i < y.size(); ++i) {
    const double s = rng_.uniform() < keep_prob_ ? inv : 0.0;
    scale_[i] = s;
    y[i] *= s;
  }
  return y;
}

Tensor DropoutLayer::backward(const Tensor& dy) {
  if (identity_) return dy;
  Tensor dx = dy;
  for (size_t i = 0; i < dx.size(); ++i) dx[i] *= scale_[i];
  return dx;
}

// ---- lstm ----

namespace {

// Shared forward math of one cell step. Outputs are [B, units] each.
struct LstmStepOut {
  Tensor i, g, f, o, c, tanh_c, h;
};

LstmStepOut lstm_step(const Tensor& concat, const Tensor& c_prev,
                      const Tensor& w_cat, const Tensor& bias, size_t units) {
  const size_t B = concat.dim(0);
  Tensor z = matmul(concat, w_cat);
  for (size_t n = 0; n < B; ++n)
    for (size_t j = 0; j < 4 * units; ++j) z(n, j) += bias[j];
  LstmStepOut out;
  out.i = Tensor({B, units});
  out.g = Tensor({B, units});
  out.f = Tensor({B, units});
  out.o = Tensor({B, units});
  out.c = Tensor({B, units});
  out.tanh_c = Tensor({B, units});
  out.h = Tensor({B, units});
  for (size_t n = 0; n < B; ++n)
    for (size_t u = 0; u < units; ++u) {
      const double zi = z(n, u);
      const double zg = z(n, units + u);
      const double zf = z(n, 2 * units + u);
      const double zo = z(n, 3 * units + u);
      const double i_ = sigmoid(zi);
      const double g_ = std::tanh(zg);
      const double f_ = sigmoid(zf);
      const double o_ = sigmoid(zo);
      const double c_ = f_ * c_prev(n, u) + i_ * g_;
      const double tc = std::tanh(c_);
      out.i(n, u) = i_;
      out.g(n, u) = g_;
      out.f(n, u) = f_;
      out.o(n, u) = o_;
      out.c(n, u) = c_;
      out.tanh_c(n, u) = tc;
      out.h(n, u) = o_ * tc;
    }
  return out;
}

}  // namespace

LstmState lstm_cell_step(const Tensor& x, const LstmState& state,
                         const Tensor& w_cat, const Tensor& bias) {
  const size_t B = x.dim(0), in = x.dim(1);
  const size_t units = state.c.dim(1);
  if (w_cat.dim(0) != in + units || w_cat.dim(1) != 4 * units)
    throw std::invalid_argument("lstm_cell_step: weights " + shape_str(w_cat) +
                                " do not match input " + shape_str(x) +
                                " and state " + shape_str(state.c));
  Tensor concat({B, in + units});
  for (size_t n = 0; n < B; ++n) {
    for (size_t j = 0; j < in; ++j) concat(n, j) = x(n, j);
    for (size_t u = 0; u < units; ++u) concat(n, in + u) = state.h(n, u);
  }
  LstmStepOut out = lstm_step(concat, state.c, w_cat, bias, units);
  return LstmState{std::move(out.c), std::move(out.h)};
}

Lstm::Lstm(size_t in, size_t units, std::string name, Rng& init_rng)
    : in_(in), units_(units) {
  w_.name = name + ".w";
  w_.value = xavier_init(in + units, 4 * units, init_rng);
  w_.grad = Tensor({in + units, 4 * units});
  b_.name = name + ".b";
  b_.value = Tensor({4 * units});
  b_.grad = Tensor({4 * units});
  // Forget-gate bias starts at 1 so early training does not flush the cell.
  for (size_t u = 0; u < units; ++u) b_.value[2 * units + u] = 1.0;
}

Tensor Lstm::forward(const Tensor& x, bool training) {
  require_rank(x, 3, "lstm");
  if (x.dim(2) != in_)
    throw std::invalid_argument("lstm: input " + shape_str(x) +
                                " does not match layer input size " +
                                std::to_string(in_));
  const size_t B = x.dim(0), W = x.dim(1);
  batch_ = B;
  steps_ = W;
  concat_.assign(W, Tensor());
  gate_i_.assign(W, Tensor());
  gate_g_.assign(W, Tensor());
  gate_f_.assign(W, Tensor());
  gate_o_.assign(W, Tensor());
  cell_.assign(W, Tensor());
  tanh_cell_.assign(W, Tensor());

  Tensor out({B, W, units_});
  Tensor c_prev({B, units_});
  Tensor h_prev({B, units_});
  for (size_t t = 0; t < W; ++t) {
    Tensor concat({B, in_ + units_});
    for (size_t n = 0; n < B; ++n) {
      for (size_t j = 0; j < in_; ++j) concat(n, j) = x(n, t, j);
      for (size_t u = 0; u < units_; ++u) concat(n, in_ + u) = h_prev(n, u);
    }
    LstmStepOut step = lstm_step(concat, c_prev, w_.value, b_.value, units_);
    for (size_t n = 0; n < B; ++n)
      for (size_t u = 0; u < units_; ++u) out(n, t, u) = step.h(n, u);
    c_prev = step.c;
    h_prev = step.h;
    if (training) {
      concat_[t] = std::move(concat);
      gate_i_[t] = std::move(step.i);
      gate_g_[t] = std::move(step.g);
      gate_f_[t] = std::move(step.f);
      gate_o_[t] = std::move(step.o);
      cell_[t] = std::move(step.c);
      tanh_cell_[t] = std::move(step.tanh_c);
    }
  }
  return out;
}

Tensor Lstm::backward(const Tensor& dy) {
  const size_t B = batch_, W = steps_;
  Tensor dx({B, W, in_});
  Tensor dh({B, units_});      // gradient flowing into h_t from t+1
  Tensor dc({B, units_});      // gradient flowing into c_t from t+1
  Tensor dz({B, 4 * units_});
  for (size_t t = W; t-- > 0;) {
    const Tensor& i = gate_i_[t];
    const Tensor& g = gate_g_[t];
    const Tensor& f = gate_f_[t];
    const Tensor& o = gate_o_[t];
    const Tensor& tc = tanh_cell_[t];
    const Tensor* c_prev = t > 0 ? &cell_[t - 1] : nullptr;
    for (size_t n = 0; n < B; ++n)
      for (size_t u = 0; u < units_; ++u) {
        const double dh_total = dy(n, t, u) + dh(n, u);
        const double tcv = tc(n, u);
        const double dc_total =
            dc(n, u) + dh_total * o(n, u) * (1.0 - tcv * tcv);
        const double iv = i(n, u), gv = g(n, u), fv = f(n, u), ov = o(n, u);
        const double cp = c_prev ? (*c_prev)(n, u) : 0.0;
        dz(n, u) = dc_total * gv * iv * (1.0 - iv);
        dz(n, units_ + u) = dc_total * iv * (1.0 - gv * gv);
        dz(n, 2 * units_ + u) = dc_total * cp * fv * (1.0 - fv);
        dz(n, 3 * units_ + u) = dh_total * tcv * ov * (1.0 - ov);
        dc(n, u) = dc_total * fv;
      }
    // accumulate parameter grads and route input/recurrent gradients
    Tensor dwt = matmul_tn(concat_[t], dz);
    for (size_t idx = 0; idx < dwt.size(); ++idx) w_.grad[idx] += dwt[idx];
    for (size_t n = 0; n < B; ++n)
      for (size_t j = 0; j < 4 * units_; ++j) b_.grad[j] += dz(n, j);
    Tensor dconcat = matmul_nt(dz, w_.value);
    for (size_t n = 0; n < B; ++n) {
      for (size_t j = 0; j < in_; ++j) dx(n, t, j) = dconcat(n, j);
      for (size_t u = 0; u < units_; ++u) dh(n, u) = dconcat(n, in_ + u);
    }
  }
  return dx;
}

// ---- take last step ----

Tensor TakeLastStep::forward(const Tensor& x, bool training) {
  (void)training;
  require_rank(x, 3, "take_last_step");
  in_shape_ = x.shape();
  const size_t B = x.dim(0), W = x.dim(1), U = x.dim(2);
  Tensor y({B, U});
  for (size_t n = 0; n < B; ++n)
    for (size_t u = 0; u < U; ++u) y(n, u) = x(n, W - 1, u);
  return y;
}

Tensor TakeLastStep::backward(const Tensor& dy) {
  Tensor dx(in_shape_);
  const size_t B = in_shape_[0], W = in_shape_[1], U = in_shape_[2];
  for (size_t n = 0; n < B; ++n)
    for (size_t u = 0; u < U; ++u) dx(n, W - 1, u) = dy(n, u);
  return dx;
}

// ---- softmax cross entropy ----

SoftmaxXent softmax_cross_entropy(const Tensor& logits,
                                  std::span<const int> labels) {
  require_rank(logits, 2, "softmax_cross_entropy");
  const size_t B = logits.dim(0), K = logits.dim(1);
  if (labels.size() != B)
    throw std::invalid_argument("softmax_cross_entropy: batch " +
                                std::to_string(B) + " but " +
                                std::to_string(labels.size()) + " labels");
  SoftmaxXent out;
  out.probs = Tensor({B, K});
  out.dlogits = Tensor({B, K});
  double loss = 0.0;
  for (size_t n = 0; n < B; ++n) {
    const int label = labels[n];
    if (label < 0 || static_cast<size_t>(label) >= K)
      throw std::out_of_range("softmax_cross_entropy: label " +
                              std::to_string(label) + " out of [0, " +
                              std::to_string(K) + ")");
    double mx = logits(n, 0);
    for (size_t k = 1; k < K; ++k) mx = std::max(mx, logits(n, k));
    double sum = 0.0;
    for (size_t k = 0; k < K; ++k) {
      const double e = std::exp(logits(n, k) - mx);
      out.probs(n, k) = e;
      sum += e;
    }
    const double inv = 1.0 / sum;
    for (size_t k = 0; k < K; ++k) out.probs(n, k) *= inv;
    // loss = log(sum exp(l - mx)) - (l_label - mx), exact log-softmax
    loss += std::log(sum) - (logits(n, static_cast<size_t>(label)) - mx);
  }
  const double inv_b = 1.0 / static_cast<double>(B);
  out.loss = loss * inv_b;
  for (size_t n = 0; n < B; ++n) {
    for (size_t k = 0; k < K; ++k) out.dlogits(n, k) = out.probs(n, k) * inv_b;
    out.dlogits(n, static_cast<size_t>(labels[n])) -= inv_b;
  }
  return out;
}

// ---- sequential ----

Tensor Sequential::forward(const Tensor& x, bool training) {
  Tensor cur = x;
  for (auto& layer : layers_) cur = layer->forward(cur, training);
  return cur;
}

Tensor Sequential::backward(const Tensor& dy) {
  Tensor cur = dy;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
    cur = (*it)->backward(cur);
  return cur;
}

std::vector<Param*> Sequential::params() {
  std::vector<Param*> all;
  for (auto& layer : layers_)
    for (Param* p : layer->params()) all.push_back(p);
  return all;
}

void Sequential::zero_grads() {
  for (Param* p : params()) p->grad.fill(0.0);
}

}  // namespace rssiloc::nn
