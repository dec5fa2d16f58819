#include "rssiloc/models.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "rssiloc/errors.hpp"
#include "rssiloc/nn/optim.hpp"

namespace rssiloc {

namespace {
constexpr uint64_t kSaltInit = 0x696E6974;
constexpr uint64_t kSaltDropout = 0x64726F00;
constexpr uint64_t kSaltBatch = 0x62617463;
}  // namespace

void validate(const Hyperparams& hp) {
  if (hp.batch_size < 1 || hp.iterations < 0 || !(hp.lr >= 0.0) ||
      !(hp.max_grad_norm > 0.0) ||
      !(hp.dropout_keep > 0.0 && hp.dropout_keep <= 1.0) ||
      hp.eval_every < 1 || hp.lstm_units.empty())
    throw ConfigError("hyperparams: out-of-range value");
  for (int u : hp.lstm_units)
    if (u < 1) throw ConfigError("hyperparams: lstm_units must be positive");
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "fcn") return ModelKind::kFcn;
  if (name == "cnn") return ModelKind::kCnn;
  if (name == "lstm") return ModelKind::kLstm;
  throw ConfigError("unknown architecture: " + std::string(name) +
                    " (expected fcn | cnn | lstm)");
}

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kFcn: return "fcn";
    case ModelKind::kCnn: return "cnn";
    case ModelKind::kLstm: return "lstm";
  }
  return "?";
}

Model build_fcn(int n_bins, int window, int nodes, const Hyperparams& hp) {
  Model m;
  m.kind = ModelKind::kFcn;
  m.n_bins = n_bins;
  m.window = window;
  m.nodes = nodes;
  Rng rng(derive_seed(hp.seed, kSaltInit));
  const size_t in = static_cast<size_t>(window) * static_cast<size_t>(nodes);
  m.net.add(std::make_unique<nn::Flatten>());
  m.net.add(std::make_unique<nn::Dense>(in, 64, "fcn.dense1", rng));
  m.net.add(std::make_unique<nn::Relu>());
  m.net.add(std::make_unique<nn::Dense>(64, 128, "fcn.dense2", rng));
  m.net.add(std::make_unique<nn::Relu>());
  m.net.add(std::make_unique<nn::Dense>(128, static_cast<size_t>(n_bins),
                                        "fcn.out", rng));
  return m;
}

Model build_cnn(int n_bins, int window, int nodes, const Hyperparams& hp) {
  Model m;
  m.kind = ModelKind::kCnn;
  m.n_bins = n_bins;
  m.window = window;
  m.nodes = nodes;
  Rng rng(derive_seed(hp.seed, kSaltInit));
  m.net.add(std::make_unique<nn::ExpandLastDim>());
  m.net.add(std::make_unique<nn::Conv2d>(1, 8, "cnn.conv1", rng));
  m.net.add(std::make_unique<nn::Relu>());
  m.net.add(std::make_unique<nn::Conv2d>(8, 16, "cnn.conv2", rng));
  m.net.add(std::make_unique<nn::Relu>());
  m.net.add(std::make_unique<nn::MaxPool3x3>());
  m.net.add(std::make_unique<nn::DropoutLayer>(
      hp.dropout_keep, derive_seed(hp.seed, kSaltDropout)));
  m.net.add(std::make_unique<nn::Conv2d>(16, 32, "cnn.conv3", rng));
  m.net.add(std::make_unique<nn::Relu>());
  m.net.add(std::make_unique<nn::Conv2d>(32, 32, "cnn.conv4", rng));
  m.net.add(std::make_unique<nn::Relu>());
  m.net.add(std::make_unique<nn::Conv2d>(32, 64, "cnn.conv5", rng));
  m.net.add(std::make_unique<nn::Relu>());
  m.net.add(std::make_unique<nn::Flatten>());
  const size_t pooled_h = (static_cast<size_t>(window) + 2) / 3;
  const size_t pooled_w = (static_cast<size_t>(nodes) + 2) / 3;
  m.net.add(std::make_unique<nn::Dense>(pooled_h * pooled_w * 64,
                                        static_cast<size_t>(n_bins),
                                        "cnn.out", rng));
  return m;
}

Model build_lstm(int n_bins, int window, int nodes, const Hyperparams& hp) {
  Model m;
  m.kind = ModelKind::kLstm;
  m.n_bins = n_bins;
  m.window = window;
  m.nodes = nodes;
  m.lstm_units = hp.lstm_units;
  Rng rng(derive_seed(hp.seed, kSaltInit));
  size_t in = static_cast<size_t>(nodes);
  for (size_t layer = 0; layer < hp.lstm_units.size(); ++layer) {
    const size_t units = static_cast<size_t>(hp.lstm_units[layer]);
    m.net.add(std::make_unique<nn::Lstm>(
        in, units, "lstm.l" + std::to_string(layer + 1), rng));
    in = units;
  }
  m.net.add(std::make_unique<nn::TakeLastStep>());
  m.net.add(std::make_unique<nn::Dense>(in, 64, "lstm.fc1", rng));
  m.net.add(std::make_unique<nn::Relu>());
  m.net.add(std::make_unique<nn::Dense>(64, 32, "lstm.fc2", rng));
  m.net.add(std::make_unique<nn::Relu>());
  m.net.add(std::make_unique<nn::Dense>(32, static_cast<size_t>(n_bins),
                                        "lstm.out", rng));
  return m;
}

Model build_model(ModelKind kind, int n_bins, int window, int nodes,
                  const Hyperparams& hp) {
  switch (kind) {
    case ModelKind::kFcn: return build_fcn(n_bins, window, nodes, hp);
    case ModelKind::kCnn: return build_cnn(n_bins, window, nodes, hp);
    case ModelKind::kLstm: return build_lstm(n_bins, window, nodes, hp);
  }
  throw ConfigError("unknown model kind");
}

namespace {

nn::Tensor gather_batch(const WindowSet& ws, std::span<const size_t> indices,
                        std::vector<int>& labels_out) {
  const size_t W = static_cast<size_t>(ws.window);
  const size_t N = static_cast<size_t>(ws.nodes);
  nn::Tensor x({indices.size(), W, N});
  labels_out.resize(indices.size());
  for (size_t i = 0; i < indices.size(); ++i) {
    std::memcpy(x.data() + i * W * N, ws.inputs.data() + indices[i] * W * N,
                W * N * sizeof(double));
    labels_out[i] = ws.labels[indices[i]];
  }
  return x;
}

}  // namespace

TrainResult train(Model& model, const WindowSet& train_set,
                  const WindowSet& val_set, const Hyperparams& hp) {
  validate(hp);
  if (train_set.count == 0)
    throw ConfigError("train: empty training split");
  if (val_set.count == 0)
    throw ConfigError("train: empty validation split");

  Rng batch_rng(derive_seed(hp.seed, kSaltBatch));
  auto params = model.net.params();
  nn::AdamState adam(params, hp.lr);
  std::vector<nn::Tensor*> grads;
  grads.reserve(params.size());
  for (nn::Param* p : params) grads.push_back(&p->grad);

  const bool full_batch =
      static_cast<size_t>(hp.batch_size) >= train_set.count;
  std::vector<size_t> indices(
      full_batch ? train_set.count : static_cast<size_t>(hp.batch_size));
  if (full_batch)
    for (size_t i = 0; i < indices.size(); ++i) indices[i] = i;

  TrainResult result;
  result.iteration_loss.reserve(static_cast<size_t>(hp.iterations));
  std::vector<int> labels;
  for (int iter = 1; iter <= hp.iterations; ++iter) {
    if (!full_batch)
      for (auto& idx : indices) idx = batch_rng.index(train_set.count);
    nn::Tensor x = gather_batch(train_set, indices, labels);
    nn::Tensor logits = model.net.forward(x, /*training=*/true);
    nn::SoftmaxXent xent = nn::softmax_cross_entropy(logits, labels);
    if (!std::isfinite(xent.loss))
      throw NumericError("train: non-finite loss at iteration " +
                         std::to_string(iter));
    model.net.zero_grads();
    model.net.backward(xent.dlogits);
    if (hp.clip_elementwise)
      nn::clip_elementwise(grads, hp.max_grad_norm);
    else
      nn::clip_global_norm(grads, hp.max_grad_norm);
    nn::adam_step(params, adam);
    result.iteration_loss.push_back(xent.loss);
    if (iter % hp.eval_every == 0 || iter == hp.iterations) {
      const double val_acc = accuracy_on(model, val_set, hp.batch_size);
      result.trace.push_back({iter, xent.loss, val_acc});
    }
  }
  return result;
}

Predictions predict(Model& model, const WindowSet& ws, const BinningSpec& spec,
                    int batch_size) {
  Predictions out;
  out.bins.reserve(ws.count);
  out.distances.reserve(ws.count);
  const size_t W = static_cast<size_t>(ws.window);
  const size_t N = static_cast<size_t>(ws.nodes);
  const size_t chunk = static_cast<size_t>(std::max(batch_size, 1));
  for (size_t start = 0; start < ws.count; start += chunk) {
    const size_t n = std::min(chunk, ws.count - start);
    nn::Tensor x({n, W, N});
    std::memcpy(x.data(), ws.inputs.data() + start * W * N,
                n * W * N * sizeof(double));
    nn::Tensor logits = model.net.forward(x, /*training=*/false);
    for (size_t i = 0; i < n; ++i) {
      size_t best = 0;
      for (size_t k = 1; k < logits.dim(1); ++k)
        if (logits(i, k) > logits(i, best)) best = k;  // ties keep lower index
      out.bins.push_back(static_cast<int>(best));
      out.distances.push_back(bin_center(static_cast<int>(best), spec));
    }
  }
  return out;
}

double accuracy_on(Model& model, const WindowSet& ws, int batch_size) {
  if (ws.count == 0) return 0.0;
  BinningSpec wide;  // only bin centers depend on the spec; accuracy does not
  wide.n_bins = model.n_bins;
  Predictions p = predict(model, ws, wide, batch_size);
  size_t correct = 0;
  for (size_t i = 0; i < ws.count; ++i)
    if (p.bins[i] == ws.labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(ws.count);
}

void save_model(Model& model, const std::filesystem::path& file) {
  nn::CheckpointHeader header;
  header.arch = to_string(model.kind);
  header.window = static_cast<uint32_t>(model.window);
  header.nodes = static_cast<uint32_t>(model.nodes);
  header.n_bins = static_cast<uint32_t>(model.n_bins);
  for (int u : model.lstm_units)
    header.lstm_units.push_back(static_cast<uint32_t>(u));
  save_checkpoint(file, header, model.net.params());
}

Model load_model(const std::filesystem::path& file, const Hyperparams& hp) {
  nn::Checkpoint ck = nn::load_checkpoint(file);
  Hyperparams build_hp = hp;
  if (!ck.header.lstm_units.empty()) {
    build_hp.lstm_units.clear();
    for (uint32_t u : ck.header.lstm_units)
      build_hp.lstm_units.push_back(static_cast<int>(u));
  }
  Model model = build_model(parse_model_kind(ck.header.arch),
                            static_cast<int>(ck.header.n_bins),
                            static_cast<int>(ck.header.window),
                            static_cast<int>(ck.header.nodes), build_hp);
  auto params = model.net.params();
  if (params.size() != ck.tensors.size())
    throw ConfigError("checkpoint: parameter count mismatch for " +
                      file.string());
  for (size_t i = 0; i < params.size(); ++i) {
    if (params[i]->name != ck.tensors[i].name ||
        params[i]->value.shape() != ck.tensors[i].value.shape())
      throw ConfigError("checkpoint: parameter " + ck.tensors[i].name +
                        " does not match the " + ck.header.arch +
                        " architecture");
    params[i]->value = ck.tensors[i].value;
  }
  return model;
}

void write_trace_csv(const TrainResult& result,
                     const std::filesystem::path& file) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw IoError("cannot write " + file.string());
  os << "iteration,train_loss,val_accuracy\n";
  char buf[96];
  for (const auto& row : result.trace) {
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f\n", row.iteration,
                  row.train_loss, row.val_accuracy);
    os << buf;
  }
}

}  // namespace rssiloc
