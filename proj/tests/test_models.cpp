#include "doctest.h"

#include <cmath>

#include "rssiloc/errors.hpp"
#include "rssiloc/models.hpp"
#include "test_util.hpp"

using namespace rssiloc;
using nn::Tensor;

namespace {

Tensor random_window_batch(size_t batch, int window, int nodes, Rng& rng,
                           double lo = -10, double hi = 10) {
  Tensor x({batch, static_cast<size_t>(window), static_cast<size_t>(nodes)});
  for (auto& v : x.values()) v = rng.uniform(lo, hi);
  return x;
}

void check_probability_rows(Model& model, size_t batch) {
  Rng rng(17);
  const Tensor x = random_window_batch(batch, model.window, model.nodes, rng);
  const Tensor logits = model.net.forward(x, false);
  REQUIRE(logits.shape() ==
          std::vector<size_t>{batch, static_cast<size_t>(model.n_bins)});
  CHECK(logits.all_finite());
  std::vector<int> labels(batch, 0);
  const auto sm = nn::softmax_cross_entropy(logits, labels);
  for (size_t i = 0; i < batch; ++i) {
    double s = 0.0;
    for (size_t k = 0; k < static_cast<size_t>(model.n_bins); ++k) {
      CHECK(sm.probs(i, k) >= 0.0);
      s += sm.probs(i, k);
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

size_t total_params(Model& model) {
  size_t n = 0;
  for (const auto* p : model.net.params()) n += p->value.size();
  return n;
}

// Tiny separable problem: class-c windows hold the constant c.
WindowSet separable_windows(size_t count, int window, int nodes, int classes,
                            uint64_t seed) {
  WindowSet ws;
  ws.count = count;
  ws.window = window;
  ws.nodes = nodes;
  ws.inputs.resize(count * static_cast<size_t>(window) *
                   static_cast<size_t>(nodes));
  ws.labels.resize(count);
  ws.truth_d.assign(count, 1.0);
  ws.target_rssi.assign(count, -50.0);
  Rng rng(seed);
  for (size_t w = 0; w < count; ++w) {
    const int c = static_cast<int>(w % static_cast<size_t>(classes));
    ws.labels[w] = c;
    for (int t = 0; t < window; ++t)
      for (int n = 0; n < nodes; ++n)
        ws.inputs[(w * static_cast<size_t>(window) +
                   static_cast<size_t>(t)) *
                      static_cast<size_t>(nodes) +
                  static_cast<size_t>(n)] =
            static_cast<double>(c) + 0.05 * rng.uniform(-1, 1);
  }
  return ws;
}

}  // namespace

TEST_CASE("fcn architecture arithmetic") {
  Hyperparams hp;
  Model m = build_fcn(30, 20, 5, hp);
  // flattened input is 100-dimensional
  CHECK(m.net.params()[0]->value.shape() == std::vector<size_t>{100, 64});
  // 100*64+64 + 64*128+128 + 128*30+30
  CHECK(total_params(m) == 18654);
  check_probability_rows(m, 7);
}

TEST_CASE("cnn architecture arithmetic") {
  Hyperparams hp;
  Model m = build_cnn(30, 20, 5, hp);
  // after the 3x3/3 pool the 20x5 window is 7x2, so the head sees 7*2*64
  bool found = false;
  for (const auto* p : m.net.params())
    if (p->name == "cnn.out.w") {
      CHECK(p->value.shape() == std::vector<size_t>{896, 30});
      found = true;
    }
  CHECK(found);
  check_probability_rows(m, 3);
}

TEST_CASE("lstm architecture emits probabilities and resets state") {
  Hyperparams hp;
  Model m = build_lstm(30, 20, 5, hp);
  check_probability_rows(m, 2);
  // the same window through two consecutive forwards gives the same output:
  // no state leaks across sequence starts
  Rng rng(3);
  const Tensor x = random_window_batch(2, 20, 5, rng);
  const Tensor y1 = m.net.forward(x, false);
  const Tensor y2 = m.net.forward(x, false);
  CHECK(y1.values() == y2.values());
}

TEST_CASE("lstm is temporally sensitive where the fcn is re-indexable") {
  Hyperparams hp;
  hp.seed = 5;
  const int W = 20, N = 5;
  Rng rng(23);
  Tensor x = random_window_batch(1, W, N, rng);
  Tensor x_rev({1, static_cast<size_t>(W), static_cast<size_t>(N)});
  for (int t = 0; t < W; ++t)
    for (int n = 0; n < N; ++n)
      x_rev(0, static_cast<size_t>(t), static_cast<size_t>(n)) =
          x(0, static_cast<size_t>(W - 1 - t), static_cast<size_t>(n));

  Model lstm = build_lstm(30, W, N, hp);
  const Tensor y = lstm.net.forward(x, false);
  const Tensor y_rev = lstm.net.forward(x_rev, false);
  double diff = 0.0;
  for (size_t i = 0; i < y.size(); ++i)
    diff = std::max(diff, std::abs(y[i] - y_rev[i]));
  CHECK(diff > 1e-6);  // time order matters to the recurrent model

  // The FCN on the permuted window with correspondingly permuted first-layer
  // rows is bit-for-bit the original: flattening carries no time structure.
  Model fcn = build_fcn(30, W, N, hp);
  const Tensor y_fcn = fcn.net.forward(x, false);
  nn::Param* w1 = fcn.net.params()[0];
  const Tensor original = w1->value;
  for (int t = 0; t < W; ++t)
    for (int n = 0; n < N; ++n)
      for (size_t j = 0; j < 64; ++j)
        w1->value(static_cast<size_t>(t * N + n), j) =
            original(static_cast<size_t>((W - 1 - t) * N + n), j);
  const Tensor y_fcn_rev = fcn.net.forward(x_rev, false);
  // identical up to summation reassociation in the matrix product
  for (size_t i = 0; i < y_fcn.size(); ++i)
    CHECK(y_fcn[i] == doctest::Approx(y_fcn_rev[i]).epsilon(1e-12));
}

TEST_CASE("predict takes the argmax with ties toward the lower bin") {
  Hyperparams hp;
  Model m = build_fcn(30, 4, 2, hp);
  // zero all weights; the output bias alone sets the logits
  for (auto* p : m.net.params()) p->value.fill(0.0);
  nn::Param* out_b = m.net.params().back();
  REQUIRE(out_b->name == "fcn.out.b");

  WindowSet one;
  one.count = 1;
  one.window = 4;
  one.nodes = 2;
  one.inputs.assign(8, 0.5);
  one.labels = {0};
  one.truth_d = {1.0};
  one.target_rssi = {-50.0};
  const BinningSpec spec;

  SUBCASE("unique maximum") {
    out_b->value[7] = 1.0;
    const Predictions p = predict(m, one, spec);
    CHECK(p.bins == std::vector<int>{7});
    CHECK(p.distances[0] == bin_center(7, spec));
  }
  SUBCASE("exact tie between bins 3 and 4") {
    out_b->value[3] = 2.0;
    out_b->value[4] = 2.0;
    const Predictions p = predict(m, one, spec);
    CHECK(p.bins == std::vector<int>{3});
  }
  SUBCASE("distances stay inside the bin range") {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
      for (size_t k = 0; k < 30; ++k) out_b->value[k] = rng.uniform(-3, 3);
      const Predictions p = predict(m, one, spec);
      CHECK(p.distances[0] >= spec.d_min_m);
      CHECK(p.distances[0] <= spec.d_min_m + spec.n_bins * spec.l_bin_m);
    }
  }
}

TEST_CASE("training memorizes a small separable set") {
  const WindowSet data = separable_windows(32, 4, 2, 4, 1);
  Hyperparams hp;
  hp.batch_size = 32;  // full batch
  hp.iterations = 300;
  hp.lr = 1e-3;
  hp.eval_every = 50;
  hp.seed = 2;
  Model m = build_fcn(4, 4, 2, hp);
  const TrainResult result = train(m, data, data, hp);
  CHECK(accuracy_on(m, data) == 1.0);
  CHECK(result.trace.back().val_accuracy == 1.0);
  // full-batch loss after training is far below the initial value
  CHECK(result.iteration_loss.back() < 0.1 * result.iteration_loss.front());
}

TEST_CASE("training is deterministic per seed") {
  const WindowSet data = separable_windows(24, 4, 2, 3, 4);
  Hyperparams hp;
  hp.batch_size = 8;  // exercise the sampling path
  hp.iterations = 60;
  hp.lr = 1e-3;
  hp.eval_every = 20;
  hp.seed = 11;
  Model a = build_lstm(3, 4, 2, hp);
  Model b = build_lstm(3, 4, 2, hp);
  const TrainResult ra = train(a, data, data, hp);
  const TrainResult rb = train(b, data, data, hp);
  CHECK(ra.iteration_loss == rb.iteration_loss);
  REQUIRE(ra.trace.size() == rb.trace.size());
  for (size_t i = 0; i < ra.trace.size(); ++i)
    CHECK(ra.trace[i].val_accuracy == rb.trace[i].val_accuracy);
  const auto pa = a.net.params();
  const auto pb = b.net.params();
  for (size_t i = 0; i < pa.size(); ++i)
    CHECK(pa[i]->value.values() == pb[i]->value.values());
}

TEST_CASE("zero learning rate leaves parameters untouched") {
  const WindowSet data = separable_windows(16, 4, 2, 2, 7);
  Hyperparams hp;
  hp.batch_size = 16;
  hp.iterations = 40;
  hp.lr = 0.0;
  hp.eval_every = 10;
  hp.dropout_keep = 1.0;  // frozen masks keep the full-batch loss flat
  Model m = build_cnn(2, 4, 2, hp);
  std::vector<std::vector<double>> before;
  for (const auto* p : m.net.params()) before.push_back(p->value.values());
  const TrainResult result = train(m, data, data, hp);
  const auto params = m.net.params();
  for (size_t i = 0; i < params.size(); ++i)
    CHECK(params[i]->value.values() == before[i]);
  for (const auto& row : result.trace)
    CHECK(row.train_loss == result.trace.front().train_loss);
}

TEST_CASE("training rejects empty splits") {
  const WindowSet data = separable_windows(8, 4, 2, 2, 3);
  WindowSet empty;
  empty.window = 4;
  empty.nodes = 2;
  Hyperparams hp;
  hp.iterations = 1;
  Model m = build_fcn(2, 4, 2, hp);
  CHECK_THROWS_AS(train(m, empty, data, hp), ConfigError);
  CHECK_THROWS_AS(train(m, data, empty, hp), ConfigError);
}

TEST_CASE("checkpoint save / load preserves predictions bitwise") {
  testutil::TempDir tmp("models_checkpoint");
  const WindowSet data = separable_windows(12, 6, 3, 4, 9);
  Hyperparams hp;
  hp.batch_size = 12;
  hp.iterations = 30;
  hp.lr = 1e-3;
  hp.seed = 21;
  hp.lstm_units = {6, 7};
  const BinningSpec spec;
  for (const auto kind :
       {ModelKind::kFcn, ModelKind::kCnn, ModelKind::kLstm}) {
    Model m = build_model(kind, 4, 6, 3, hp);
    train(m, data, data, hp);
    const Predictions before = predict(m, data, spec);
    const auto file = tmp.path() / (std::string(to_string(kind)) + ".bin");
    save_model(m, file);
    Model loaded = load_model(file, hp);
    CHECK(loaded.kind == kind);
    const Predictions after = predict(loaded, data, spec);
    CHECK(before.bins == after.bins);
    CHECK(before.distances == after.distances);
  }
}

TEST_CASE("architectures stay finite on inputs in [-10, 10]") {
  Hyperparams hp;
  hp.seed = 31;
  Rng rng(31);
  for (const auto kind :
       {ModelKind::kFcn, ModelKind::kCnn, ModelKind::kLstm}) {
    Model m = build_model(kind, 30, 20, 5, hp);
    for (int trial = 0; trial < 3; ++trial) {
      const Tensor x = random_window_batch(4, 20, 5, rng, -10, 10);
      CHECK(m.net.forward(x, false).all_finite());
      CHECK(m.net.forward(x, true).all_finite());
    }
  }
}

TEST_CASE("unknown architecture names are rejected") {
  CHECK_THROWS_AS(parse_model_kind("mlp"), ConfigError);
  CHECK(parse_model_kind("fcn") == ModelKind::kFcn);
  CHECK(parse_model_kind("cnn") == ModelKind::kCnn);
  CHECK(parse_model_kind("lstm") == ModelKind::kLstm);
}
