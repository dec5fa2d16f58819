#include "rssiloc/config.hpp"

#include <charconv>
#include <fstream>

#include "rssiloc/errors.hpp"

namespace rssiloc {

namespace {

constexpr unsigned kCmdTrainLike = kCmdTrain | kCmdCompare;

const std::vector<KeySpec> kSchema = {
    // paths
    {"out_dir", "out", kCmdSimulate, "directory simulate writes env<k>/ into"},
    {"data_dir", "out/env0", kCmdPreprocess | kCmdTrainLike | kCmdEval,
     "dataset directory (records.csv, truth.csv, meta.txt)"},
    {"checkpoint", "", kCmdEval,
     "checkpoint file; default <data_dir>/<arch>/checkpoint.bin"},
    // simulation
    {"seed", "1", kCmdAll, "master seed; every stream derives from it"},
    {"duration_s", "1800", kCmdSimulate, "simulated run length in seconds"},
    {"environments", "1", kCmdSimulate,
     "number of environment variants (out_dir/env0..envK-1)"},
    {"loss_prob", "0", kCmdSimulate, "per-report drop probability in [0, 1)"},
    {"trajectory", "lissajous", kCmdSimulate,
     "waypoint-loop | lissajous | random-walk"},
    {"traj_period_s", "120", kCmdSimulate, "lissajous period"},
    {"traj_speed_mps", "0.35", kCmdSimulate,
     "cruise speed for waypoint-loop / random-walk"},
    {"max_speed_mps", "0.5", kCmdSimulate, "hard per-tick speed cap"},
    {"wap_clearance_m", "0.05", kCmdSimulate,
     "keep-out radius around the WAP"},
    {"gt_noise_mm", "4", kCmdSimulate, "camera ground-truth noise half-range"},
    {"room_w", "8.46", kCmdSimulate, "room width, m"},
    {"room_d", "6.98", kCmdSimulate, "room depth, m"},
    {"inner_w", "4.14", kCmdSimulate, "inner arena width, m"},
    {"inner_d", "2.86", kCmdSimulate, "inner arena depth, m"},
    {"wap_x", "auto", kCmdSimulate, "WAP x (auto = room center)"},
    {"wap_y", "auto", kCmdSimulate, "WAP y (auto = room center)"},
    {"p0_dbm", "-40", kCmdSimulate, "received power at reference distance"},
    {"d0_m", "1", kCmdSimulate, "reference distance, m"},
    {"gamma", "2.2", kCmdSimulate, "path-loss exponent"},
    {"sigma_db", "4", kCmdSimulate, "shadowing standard deviation, dB"},
    {"rho", "0.95", kCmdSimulate, "shadowing correlation per 50 ms tick"},
    {"rician_k", "6", kCmdSimulate, "multipath Rician K-factor"},
    // preprocessing
    {"median_window", "5", kCmdPreprocess, "median filter window (odd)"},
    {"filter_rssi", "true", kCmdPreprocess, "median-filter the RSSI columns"},
    {"filter_truth", "true", kCmdPreprocess,
     "median-filter the distance signal"},
    {"d_min_m", "0.0151", kCmdPreprocess, "lower edge of bin 0, m"},
    {"n_bins", "30", kCmdPreprocess, "number of distance bins"},
    {"l_bin_m", "0.1173", kCmdPreprocess, "bin length, m"},
    {"window_w", "20", kCmdPreprocess, "ticks per window (W)"},
    {"window_stride", "1", kCmdPreprocess, "window stride"},
    {"split_train", "0.70", kCmdPreprocess, "training fraction (contiguous)"},
    {"split_val", "0.15", kCmdPreprocess,
     "validation fraction (test gets the rest)"},
    // training
    {"arch", "lstm", kCmdTrain | kCmdEval, "fcn | cnn | lstm"},
    {"batch_size", "128", kCmdTrainLike, "windows per iteration (Bs)"},
    {"iterations", "1500", kCmdTrainLike, "training iterations"},
    {"lr", "1e-4", kCmdTrainLike, "Adam learning rate"},
    {"max_grad_norm", "10", kCmdTrainLike, "gradient clipping threshold"},
    {"clip_mode", "global", kCmdTrainLike,
     "global (L2 norm) | element (per-element clamp)"},
    {"dropout_keep", "0.75", kCmdTrainLike, "dropout parameter (lambda)"},
    {"dropout_is_keep_prob", "true", kCmdTrainLike,
     "lambda is the keep probability; false flips it to the drop rate"},
    {"lstm_units", "64,128", kCmdTrainLike, "LSTM layer sizes"},
    {"eval_every", "50", kCmdTrainLike,
     "iterations between validation trace rows"},
};

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

const std::vector<KeySpec>& Config::schema() {
  return kSchema;
}

Config::Config() {
  for (const auto& spec : kSchema) values_[spec.key] = spec.def;
}

void Config::set(const std::string& key, const std::string& value) {
  const auto it = values_.find(key);
  if (it == values_.end())
    throw ConfigError("unknown config key: " + key);
  it->second = value;
}

bool Config::has(const std::string& key) const {
  return values_.count(key) != 0;
}

void Config::load_file(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw IoError("cannot read config file " + file.string());
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(file.string() + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    try {
      set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(file.string() + ":" + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
}

const std::string& Config::str(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end())
    throw ConfigError("unknown config key: " + key);
  return it->second;
}

double Config::num(const std::string& key) const {
  const std::string& s = str(key);
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": not a number: '" + s + "'");
  }
}

int64_t Config::integer(const std::string& key) const {
  const std::string& s = str(key);
  int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ConfigError("config key " + key + ": not an integer: '" + s + "'");
  return v;
}

uint64_t Config::u64(const std::string& key) const {
  const std::string& s = str(key);
  uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ConfigError("config key " + key + ": not an unsigned integer: '" +
                      s + "'");
  return v;
}

bool Config::boolean(const std::string& key) const {
  const std::string& s = str(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("config key " + key + ": not a boolean: '" + s + "'");
}

std::vector<int> Config::int_list(const std::string& key) const {
  const std::string& s = str(key);
  std::vector<int> out;
  size_t start = 0;
  while (start <= s.size()) {
    const size_t comma = s.find(',', start);
    const std::string part =
        trim(s.substr(start, comma == std::string::npos ? std::string::npos
                                                        : comma - start));
    if (part.empty())
      throw ConfigError("config key " + key + ": empty list element");
    int v = 0;
    const auto [ptr, ec] =
        std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc{} || ptr != part.data() + part.size())
      throw ConfigError("config key " + key + ": bad list element '" + part +
                        "'");
    out.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace rssiloc
