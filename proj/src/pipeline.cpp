#include "rssiloc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "rssiloc/errors.hpp"

namespace rssiloc {

namespace {
constexpr double kStdFloor = 1e-12;
}

void validate(const BinningSpec& spec) {
  if (!(spec.l_bin_m > 0.0) || spec.n_bins < 2 || !std::isfinite(spec.d_min_m))
    throw ConfigError("binning: need l_bin > 0, n_bins >= 2 and finite d_min");
}

int bin_index(double distance_m, const BinningSpec& spec) {
  const double offset = distance_m - spec.d_min_m;
  const double range = spec.n_bins * spec.l_bin_m;
  if (!(offset >= 0.0) || !(offset < range)) {
    std::ostringstream msg;
    msg << "bin_index: distance " << distance_m << " outside labelable range ["
        << spec.d_min_m << ", " << spec.d_min_m + range << ")";
    throw std::out_of_range(msg.str());
  }
  int idx = static_cast<int>(offset / spec.l_bin_m);
  if (idx >= spec.n_bins) idx = spec.n_bins - 1;  // ulp guard at the top edge
  return idx;
}

double bin_center(int bin, const BinningSpec& spec) {
  if (bin < 0 || bin >= spec.n_bins)
    throw std::out_of_range("bin_center: bin " + std::to_string(bin) +
                            " outside [0, " + std::to_string(spec.n_bins) + ")");
  return spec.d_min_m + (bin + 0.5) * spec.l_bin_m;
}

std::vector<double> median_filter(std::span<const double> series, int window) {
  if (window < 1 || window % 2 == 0)
    throw std::invalid_argument("median_filter: window must be odd and >= 1");
  if (static_cast<size_t>(window) > series.size())
    throw std::invalid_argument(
        "median_filter: window exceeds series length");
  const int n = static_cast<int>(series.size());
  const int half = window / 2;
  std::vector<double> out(series.size());
  std::vector<double> buf(static_cast<size_t>(window));
  for (int i = 0; i < n; ++i) {
    for (int k = -half; k <= half; ++k) {
      const int j = std::clamp(i + k, 0, n - 1);  // replicate padding
      buf[static_cast<size_t>(k + half)] = series[static_cast<size_t>(j)];
    }
    auto mid = buf.begin() + half;
    std::nth_element(buf.begin(), mid, buf.end());
    out[static_cast<size_t>(i)] = *mid;
  }
  return out;
}

NormStats fit_normalize(const std::vector<std::vector<double>>& per_node) {
  NormStats stats;
  for (const auto& series : per_node) {
    if (series.empty())
      throw std::invalid_argument("fit_normalize: empty series");
    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(series.size());
    double var = 0.0;
    for (double v : series) var += (v - mean) * (v - mean);
    var /= static_cast<double>(series.size());
    stats.mean.push_back(mean);
    stats.stddev.push_back(std::max(std::sqrt(var), kStdFloor));
  }
  return stats;
}

std::vector<double> apply_normalize(std::span<const double> series,
                                    double mean, double stddev) {
  std::vector<double> out(series.size());
  const double inv = 1.0 / stddev;
  for (size_t i = 0; i < series.size(); ++i) out[i] = (series[i] - mean) * inv;
  return out;
}

TickGrid build_tick_grid(const Dataset& ds) {
  const size_t ticks = ds.truth.samples.size();
  if (ticks == 0) throw ParseError("dataset: empty ground truth");
  TickGrid grid;
  grid.ticks = ticks;
  grid.nodes = kNodeCount;
  grid.features.assign(ticks * kNodeCount,
                       std::numeric_limits<double>::quiet_NaN());
  grid.truth_d.resize(ticks);
  for (size_t t = 0; t < ticks; ++t) {
    if (ds.truth.samples[t].timestamp_ms != static_cast<int64_t>(t) * kTickMs)
      throw ParseError("dataset: ground truth off the 50 ms tick grid");
    grid.truth_d[t] = ds.truth.samples[t].distance_m;
  }
  for (const auto& r : ds.records) {
    if (r.timestamp_ms % kTickMs != 0)
      throw ParseError("dataset: record timestamp off the 50 ms tick grid");
    const size_t t = static_cast<size_t>(r.timestamp_ms / kTickMs);
    if (t >= ticks)
      throw ParseError("dataset: record timestamp beyond ground truth");
    double& cell = grid.feature(t, r.node_id);
    if (!std::isnan(cell))
      throw ParseError("dataset: duplicate record for node " +
                       std::to_string(r.node_id) + " at tick " +
                       std::to_string(t));
    cell = r.rssi_dbm;
  }
  // Gap fill: last observation carried forward, leading gaps backfilled.
  for (int n = 0; n < kNodeCount; ++n) {
    size_t first_valid = ticks;
    for (size_t t = 0; t < ticks; ++t) {
      if (!std::isnan(grid.feature(t, n))) {
        first_valid = t;
        break;
      }
    }
    if (first_valid == ticks)
      throw IoError("dataset: node " + std::to_string(n) +
                    " delivered no records");
    for (size_t t = 0; t < first_valid; ++t)
      grid.feature(t, n) = grid.feature(first_valid, n);
    for (size_t t = first_valid + 1; t < ticks; ++t)
      if (std::isnan(grid.feature(t, n)))
        grid.feature(t, n) = grid.feature(t - 1, n);
  }
  grid.target_raw.resize(ticks);
  for (size_t t = 0; t < ticks; ++t)
    grid.target_raw[t] = grid.feature(t, kTargetNode);
  return grid;
}

WindowSet make_windows(const TickGrid& grid, const BinningSpec& spec,
                       int window, int stride) {
  if (window < 1) throw std::invalid_argument("make_windows: window must be >= 1");
  if (stride < 1) throw std::invalid_argument("make_windows: stride must be >= 1");
  validate(spec);
  WindowSet ws;
  ws.window = window;
  ws.nodes = grid.nodes;
  if (grid.ticks < static_cast<size_t>(window)) return ws;  // empty, not an error
  const size_t count = (grid.ticks - static_cast<size_t>(window)) /
                           static_cast<size_t>(stride) +
                       1;
  ws.count = count;
  ws.inputs.resize(count * static_cast<size_t>(window) *
                   static_cast<size_t>(grid.nodes));
  ws.labels.resize(count);
  ws.truth_d.resize(count);
  ws.target_rssi.resize(count);
  const size_t row = static_cast<size_t>(grid.nodes);
  for (size_t w = 0; w < count; ++w) {
    const size_t start = w * static_cast<size_t>(stride);
    const size_t last = start + static_cast<size_t>(window) - 1;
    std::memcpy(&ws.inputs[w * static_cast<size_t>(window) * row],
                &grid.features[start * row],
                static_cast<size_t>(window) * row * sizeof(double));
    ws.labels[w] = bin_index(grid.truth_d[last], spec);
    ws.truth_d[w] = grid.truth_d[last];
    ws.target_rssi[w] = grid.target_raw[last];
  }
  return ws;
}

void validate(const PipelineConfig& cfg) {
  validate(cfg.bins);
  if (cfg.median_window < 1 || cfg.median_window % 2 == 0)
    throw ConfigError("pipeline: median_window must be odd and >= 1");
  if (cfg.window < 1) throw ConfigError("pipeline: window must be >= 1");
  if (cfg.stride < 1) throw ConfigError("pipeline: stride must be >= 1");
  if (!(cfg.split_train > 0.0) || !(cfg.split_val >= 0.0) ||
      !(cfg.split_train + cfg.split_val < 1.0))
    throw ConfigError(
        "pipeline: splits must satisfy train > 0, val >= 0, train + val < 1");
}

namespace {

TickGrid slice_grid(const TickGrid& grid, size_t start, size_t len) {
  TickGrid out;
  out.ticks = len;
  out.nodes = grid.nodes;
  const size_t row = static_cast<size_t>(grid.nodes);
  out.features.assign(grid.features.begin() + start * row,
                      grid.features.begin() + (start + len) * row);
  out.target_raw.assign(grid.target_raw.begin() + start,
                        grid.target_raw.begin() + start + len);
  out.truth_d.assign(grid.truth_d.begin() + start,
                     grid.truth_d.begin() + start + len);
  return out;
}

}  // namespace

PreprocessResult preprocess(const Dataset& ds, const PipelineConfig& cfg) {
  validate(cfg);
  TickGrid grid = build_tick_grid(ds);
  if (static_cast<size_t>(cfg.median_window) > grid.ticks)
    throw ConfigError("pipeline: median_window exceeds dataset length");

  // Stage 1: median filtering (per node column, and on the distance signal).
  if (cfg.filter_rssi) {
    std::vector<double> col(grid.ticks);
    for (int n = 0; n < grid.nodes; ++n) {
      for (size_t t = 0; t < grid.ticks; ++t) col[t] = grid.feature(t, n);
      const auto filtered = median_filter(col, cfg.median_window);
      for (size_t t = 0; t < grid.ticks; ++t) grid.feature(t, n) = filtered[t];
    }
    for (size_t t = 0; t < grid.ticks; ++t)
      grid.target_raw[t] = grid.feature(t, kTargetNode);
  }
  if (cfg.filter_truth)
    grid.truth_d = median_filter(grid.truth_d, cfg.median_window);

  // Stage 2: contiguous split by time.
  const size_t n_train = static_cast<size_t>(
      std::floor(static_cast<double>(grid.ticks) * cfg.split_train));
  const size_t n_val = static_cast<size_t>(
      std::floor(static_cast<double>(grid.ticks) * cfg.split_val));
  const size_t n_test = grid.ticks - n_train - n_val;

  // Stage 3: normalization statistics from the training ticks only.
  if (n_train == 0) throw ConfigError("pipeline: empty training split");
  std::vector<std::vector<double>> train_cols(
      static_cast<size_t>(grid.nodes));
  for (int n = 0; n < grid.nodes; ++n) {
    train_cols[static_cast<size_t>(n)].resize(n_train);
    for (size_t t = 0; t < n_train; ++t)
      train_cols[static_cast<size_t>(n)][t] = grid.feature(t, n);
  }
  NormStats stats = fit_normalize(train_cols);

  PreprocessResult result;
  result.stats = stats;
  result.cfg = cfg;
  result.channel = ds.meta.channel;

  TickGrid normalized = grid;
  for (int n = 0; n < grid.nodes; ++n) {
    const double mean = stats.mean[static_cast<size_t>(n)];
    const double inv = 1.0 / stats.stddev[static_cast<size_t>(n)];
    for (size_t t = 0; t < grid.ticks; ++t)
      normalized.feature(t, n) = (grid.feature(t, n) - mean) * inv;
  }

  // Stage 4: windowing, each split inside its own range so no window
  // straddles a boundary.
  auto window_split = [&](size_t start, size_t len) {
    const TickGrid sub = slice_grid(normalized, start, len);
    try {
      return make_windows(sub, cfg.bins, cfg.window, cfg.stride);
    } catch (const std::out_of_range& e) {
      throw ConfigError(std::string("pipeline: ") + e.what() +
                        "; regenerate the trajectory or widen the bin range");
    }
  };
  result.train = window_split(0, n_train);
  result.val = window_split(n_train, n_val);
  result.test = window_split(n_train + n_val, n_test);
  return result;
}

// ---- cache ----

namespace {

constexpr char kCacheMagic[4] = {'R', 'L', 'T', 'C'};
constexpr uint32_t kCacheVersion = 1;

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::istream& is, const char* what) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw ParseError(std::string("tensor cache: truncated ") + what);
  return v;
}

void write_doubles(std::ostream& os, const std::vector<double>& v) {
  write_pod<uint64_t>(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> read_doubles(std::istream& is, const char* what) {
  const uint64_t n = read_pod<uint64_t>(is, what);
  std::vector<double> v(n);
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw ParseError(std::string("tensor cache: truncated ") + what);
  return v;
}

void write_window_set(std::ostream& os, const WindowSet& ws) {
  write_pod<uint64_t>(os, ws.count);
  write_pod<uint32_t>(os, static_cast<uint32_t>(ws.window));
  write_pod<uint32_t>(os, static_cast<uint32_t>(ws.nodes));
  write_doubles(os, ws.inputs);
  write_pod<uint64_t>(os, ws.labels.size());
  for (int l : ws.labels) write_pod<uint32_t>(os, static_cast<uint32_t>(l));
  write_doubles(os, ws.truth_d);
  write_doubles(os, ws.target_rssi);
}

WindowSet read_window_set(std::istream& is) {
  WindowSet ws;
  ws.count = read_pod<uint64_t>(is, "window count");
  ws.window = static_cast<int>(read_pod<uint32_t>(is, "window length"));
  ws.nodes = static_cast<int>(read_pod<uint32_t>(is, "node count"));
  ws.inputs = read_doubles(is, "inputs");
  const uint64_t n_labels = read_pod<uint64_t>(is, "label count");
  ws.labels.resize(n_labels);
  for (uint64_t i = 0; i < n_labels; ++i)
    ws.labels[i] = static_cast<int>(read_pod<uint32_t>(is, "label"));
  ws.truth_d = read_doubles(is, "truth distances");
  ws.target_rssi = read_doubles(is, "target rssi");
  return ws;
}

}  // namespace

void save_cache(const PreprocessResult& result,
                const std::filesystem::path& file) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw IoError("cannot write " + file.string());
  os.write(kCacheMagic, sizeof kCacheMagic);
  write_pod<uint32_t>(os, kCacheVersion);
  write_pod<double>(os, result.cfg.bins.d_min_m);
  write_pod<uint32_t>(os, static_cast<uint32_t>(result.cfg.bins.n_bins));
  write_pod<double>(os, result.cfg.bins.l_bin_m);
  write_pod<uint32_t>(os, static_cast<uint32_t>(result.cfg.median_window));
  write_pod<uint8_t>(os, result.cfg.filter_rssi ? 1 : 0);
  write_pod<uint8_t>(os, result.cfg.filter_truth ? 1 : 0);
  write_pod<uint32_t>(os, static_cast<uint32_t>(result.cfg.window));
  write_pod<uint32_t>(os, static_cast<uint32_t>(result.cfg.stride));
  write_pod<double>(os, result.cfg.split_train);
  write_pod<double>(os, result.cfg.split_val);
  write_pod<double>(os, result.channel.p0_dbm);
  write_pod<double>(os, result.channel.d0_m);
  write_pod<double>(os, result.channel.gamma);
  write_pod<double>(os, result.channel.sigma_db);
  write_pod<double>(os, result.channel.rho);
  write_pod<double>(os, result.channel.rician_k);
  write_pod<uint64_t>(os, result.channel.seed);
  write_doubles(os, result.stats.mean);
  write_doubles(os, result.stats.stddev);
  write_window_set(os, result.train);
  write_window_set(os, result.val);
  write_window_set(os, result.test);
  if (!os) throw IoError("write failed for " + file.string());
}

PreprocessResult load_cache(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw IoError("cannot read tensor cache " + file.string());
  char magic[4];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kCacheMagic, sizeof kCacheMagic) != 0)
    throw ParseError("tensor cache: bad magic in " + file.string());
  const uint32_t version = read_pod<uint32_t>(is, "version");
  if (version != kCacheVersion)
    throw ParseError("tensor cache: unsupported version " +
                     std::to_string(version));
  PreprocessResult r;
  r.cfg.bins.d_min_m = read_pod<double>(is, "d_min");
  r.cfg.bins.n_bins = static_cast<int>(read_pod<uint32_t>(is, "n_bins"));
  r.cfg.bins.l_bin_m = read_pod<double>(is, "l_bin");
  r.cfg.median_window =
      static_cast<int>(read_pod<uint32_t>(is, "median window"));
  r.cfg.filter_rssi = read_pod<uint8_t>(is, "filter flag") != 0;
  r.cfg.filter_truth = read_pod<uint8_t>(is, "filter flag") != 0;
  r.cfg.window = static_cast<int>(read_pod<uint32_t>(is, "window"));
  r.cfg.stride = static_cast<int>(read_pod<uint32_t>(is, "stride"));
  r.cfg.split_train = read_pod<double>(is, "split");
  r.cfg.split_val = read_pod<double>(is, "split");
  r.channel.p0_dbm = read_pod<double>(is, "channel");
  r.channel.d0_m = read_pod<double>(is, "channel");
  r.channel.gamma = read_pod<double>(is, "channel");
  r.channel.sigma_db = read_pod<double>(is, "channel");
  r.channel.rho = read_pod<double>(is, "channel");
  r.channel.rician_k = read_pod<double>(is, "channel");
  r.channel.seed = read_pod<uint64_t>(is, "channel seed");
  r.stats.mean = read_doubles(is, "norm means");
  r.stats.stddev = read_doubles(is, "norm stds");
  r.train = read_window_set(is);
  r.val = read_window_set(is);
  r.test = read_window_set(is);
  return r;
}

void write_preprocess_meta(const PreprocessResult& result,
                           const std::filesystem::path& file) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw IoError("cannot write " + file.string());
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  os << "pipeline_order = median_filter,normalize,window\n";
  os << "median_window = " << result.cfg.median_window << "\n";
  os << "filter_rssi = " << (result.cfg.filter_rssi ? "true" : "false") << "\n";
  os << "filter_truth = " << (result.cfg.filter_truth ? "true" : "false")
     << "\n";
  os << "d_min_m = " << num(result.cfg.bins.d_min_m) << "\n";
  os << "n_bins = " << result.cfg.bins.n_bins << "\n";
  os << "l_bin_m = " << num(result.cfg.bins.l_bin_m) << "\n";
  os << "window_w = " << result.cfg.window << "\n";
  os << "window_stride = " << result.cfg.stride << "\n";
  os << "split_train = " << num(result.cfg.split_train) << "\n";
  os << "split_val = " << num(result.cfg.split_val) << "\n";
  for (size_t n = 0; n < result.stats.mean.size(); ++n) {
    os << "norm_mean_node" << n << " = " << num(result.stats.mean[n]) << "\n";
    os << "norm_std_node" << n << " = " << num(result.stats.stddev[n]) << "\n";
  }
  os << "train_windows = " << result.train.count << "\n";
  os << "val_windows = " << result.val.count << "\n";
  os << "test_windows = " << result.test.count << "\n";
}

}  // namespace rssiloc
