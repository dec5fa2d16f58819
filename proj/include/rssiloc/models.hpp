#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "rssiloc/nn/checkpoint.hpp"
#include "rssiloc/nn/layers.hpp"
#include "rssiloc/pipeline.hpp"

namespace rssiloc {

struct Hyperparams {
  int batch_size = 128;
  int iterations = 1500;
  double lr = 1e-4;
  double max_grad_norm = 10.0;
  bool clip_elementwise = false;  // alternative reading of "clipped to 10"
  double dropout_keep = 0.75;
  std::vector<int> lstm_units{64, 128};
  int eval_every = 50;
  uint64_t seed = 1;
};

void validate(const Hyperparams& hp);

enum class ModelKind { kFcn, kCnn, kLstm };

ModelKind parse_model_kind(std::string_view name);
const char* to_string(ModelKind kind);

struct Model {
  ModelKind kind = ModelKind::kLstm;
  int n_bins = 30;
  int window = 20;
  int nodes = 5;
  std::vector<int> lstm_units;
  nn::Sequential net;
};

// Input is the flattened window: [W*N -> 64 -> 128 -> n_bins], ReLU between
// the hidden layers, softmax head applied by the loss.
Model build_fcn(int n_bins, int window, int nodes, const Hyperparams& hp);
// Window as a [W x N x 1] image: conv8, conv16, 3x3/3 max-pool, dropout,
// conv32, conv32, conv64 (all 3x3 same-padded with ReLU), dense head.
Model build_cnn(int n_bins, int window, int nodes, const Hyperparams& hp);
// Stacked LSTMs over the window; the last step of the top layer feeds the
// ReLU head units -> 64 -> 32 -> n_bins.
Model build_lstm(int n_bins, int window, int nodes, const Hyperparams& hp);
Model build_model(ModelKind kind, int n_bins, int window, int nodes,
                  const Hyperparams& hp);

struct TraceRow {
  int iteration = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  std::vector<TraceRow> trace;          // at eval_every boundaries
  std::vector<double> iteration_loss;   // every iteration
};

// Mini-batch Adam with gradient clipping, deterministic per hp.seed. When
// batch_size >= the split size the full split is used every iteration.
TrainResult train(Model& model, const WindowSet& train_set,
                  const WindowSet& val_set, const Hyperparams& hp);

struct Predictions {
  std::vector<int> bins;
  std::vector<double> distances;  // bin centers
};

// Argmax over class scores, ties toward the lower index.
Predictions predict(Model& model, const WindowSet& ws, const BinningSpec& spec,
                    int batch_size = 256);

double accuracy_on(Model& model, const WindowSet& ws, int batch_size = 256);

void save_model(Model& model, const std::filesystem::path& file);
// Rebuilds the architecture recorded in the checkpoint header and loads the
// weights; name/shape mismatches raise ConfigError.
Model load_model(const std::filesystem::path& file, const Hyperparams& hp);

void write_trace_csv(const TrainResult& result,
                     const std::filesystem::path& file);

}  // namespace rssiloc
