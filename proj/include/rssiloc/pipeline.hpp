#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "rssiloc/channel.hpp"
#include "rssiloc/netsim.hpp"

namespace rssiloc {

// 30 equal distance bins; bin i covers [d_min + i*l_bin, d_min + (i+1)*l_bin).
struct BinningSpec {
  double d_min_m = 0.0151;
  int n_bins = 30;
  double l_bin_m = 0.1173;
};

void validate(const BinningSpec& spec);

// floor((d - d_min) / l_bin); throws std::out_of_range for distances the
// spec cannot label.
int bin_index(double distance_m, const BinningSpec& spec);

// d_min + (i + 0.5) * l_bin; throws std::out_of_range for bad indices.
double bin_center(int bin, const BinningSpec& spec);

// Sliding median with replicate padding; output length equals input length.
// window must be odd, >= 1 and <= series length.
std::vector<double> median_filter(std::span<const double> series, int window);

// Per-node normalization statistics, frozen on the training split.
struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // population std, epsilon-floored
};

NormStats fit_normalize(const std::vector<std::vector<double>>& per_node);
std::vector<double> apply_normalize(std::span<const double> series,
                                    double mean, double stddev);

// Gap-filled per-tick view of a dataset: features are the model inputs
// (later filtered + normalized in place), target_raw the unnormalized target
// column the path-loss baseline consumes.
struct TickGrid {
  size_t ticks = 0;
  int nodes = 0;
  std::vector<double> features;    // [ticks x nodes], row-major
  std::vector<double> target_raw;  // [ticks]
  std::vector<double> truth_d;     // [ticks]

  double& feature(size_t t, int n) { return features[t * nodes + n]; }
  double feature(size_t t, int n) const { return features[t * nodes + n]; }
};

// Missing (tick, node) reports are filled by last observation carried
// forward; a leading gap takes the first delivered value.
TickGrid build_tick_grid(const Dataset& ds);

// Window tensor plus per-window labels. inputs is [count x W x N] row-major;
// label, truth distance and raw target RSSI belong to the window's last tick.
struct WindowSet {
  size_t count = 0;
  int window = 0;
  int nodes = 0;
  std::vector<double> inputs;
  std::vector<int> labels;
  std::vector<double> truth_d;
  std::vector<double> target_rssi;
};

// Stride-1 default yields T - W + 1 windows; T < W yields an empty set.
WindowSet make_windows(const TickGrid& grid, const BinningSpec& spec, int window,
                       int stride = 1);

struct PipelineConfig {
  BinningSpec bins;
  int median_window = 5;
  bool filter_rssi = true;
  bool filter_truth = true;
  int window = 20;
  int stride = 1;
  double split_train = 0.70;
  double split_val = 0.15;
};

void validate(const PipelineConfig& cfg);

struct PreprocessResult {
  WindowSet train, val, test;
  NormStats stats;
  PipelineConfig cfg;
  ChannelParams channel;  // target-node channel, for the baseline
};

// Filter -> split -> fit stats on train -> normalize -> window, each split
// windowed inside its own contiguous tick range.
PreprocessResult preprocess(const Dataset& ds, const PipelineConfig& cfg);

// Versioned binary tensor cache (not a compatibility contract).
void save_cache(const PreprocessResult& result,
                const std::filesystem::path& file);
PreprocessResult load_cache(const std::filesystem::path& file);

// Human-readable preprocessing record, key = value lines, including the
// pipeline stage order.
void write_preprocess_meta(const PreprocessResult& result,
                           const std::filesystem::path& file);

}  // namespace rssiloc
