#include "rssiloc/netsim.hpp"

#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "rssiloc/errors.hpp"

namespace rssiloc {

namespace {

constexpr uint64_t kSaltDrop = 0x64726F70;

double quantize(double v, double scale) {
  return std::round(v * scale) / scale;
}

template <typename T>
T parse_field(std::string_view text, const char* field) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last)
    throw ParseError(std::string("record: non-numeric ") + field + ": '" +
                     std::string(text) + "'");
  return value;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

std::string_view strip_eol(std::string_view line) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r'))
    line.remove_suffix(1);
  return line;
}

void write_meta_line(std::ostream& os, const std::string& key, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << key << " = " << buf << "\n";
}

}  // namespace

std::string encode_record(const RssiRecord& r) {
  char buf[96];
  const int n =
      std::snprintf(buf, sizeof buf, "%d,%" PRIu64 ",%" PRId64 ",%.2f\n",
                    r.node_id, r.seq, r.timestamp_ms, r.rssi_dbm);
  return std::string(buf, static_cast<size_t>(n));
}

RssiRecord decode_record(std::string_view line) {
  const auto fields = split_csv(strip_eol(line));
  if (fields.size() != 4) {
    std::ostringstream msg;
    msg << "record: expected 4 fields (node_id,seq,timestamp_ms,rssi_dbm), "
           "got "
        << fields.size();
    throw ParseError(msg.str());
  }
  RssiRecord r;
  r.node_id = parse_field<int>(fields[0], "node_id");
  if (r.node_id < 0 || r.node_id >= kNodeCount)
    throw ParseError("record: node_id out of range [0, 4]: " +
                     std::string(fields[0]));
  r.seq = parse_field<uint64_t>(fields[1], "seq");
  r.timestamp_ms = parse_field<int64_t>(fields[2], "timestamp_ms");
  r.rssi_dbm = parse_field<double>(fields[3], "rssi_dbm");
  return r;
}

Dataset run_acquisition(const Arena& arena, const Trajectory& traj,
                        const GroundTruth& truth,
                        const std::array<ChannelParams, kNodeCount>& params,
                        double loss_prob, uint64_t seed) {
  if (!(loss_prob >= 0.0 && loss_prob < 1.0))
    throw ConfigError("acquisition: loss_prob must be in [0, 1)");
  validate(arena);
  if (traj.samples.size() != truth.samples.size())
    throw ConfigError("acquisition: trajectory and ground truth length differ");
  for (const auto& p : params) validate(p);

  std::vector<NodeChannel> channels;
  channels.reserve(kNodeCount);
  std::vector<Rng> drop_rng;
  drop_rng.reserve(kNodeCount);
  for (int node = 0; node < kNodeCount; ++node) {
    channels.emplace_back(params[node], node, node != kTargetNode);
    drop_rng.emplace_back(derive_seed(seed, kSaltDrop, node));
  }

  std::array<double, 4> fixed_dist{};
  for (int i = 0; i < 4; ++i)
    fixed_dist[i] = distance(arena.fixed_nodes[i], arena.wap);

  Dataset ds;
  ds.truth = truth;
  const size_t ticks = traj.samples.size();
  ds.records.reserve(ticks * kNodeCount);
  for (size_t t = 0; t < ticks; ++t) {
    const int64_t ts = static_cast<int64_t>(t) * kTickMs;
    const double target_d = distance(traj.samples[t].pos, arena.wap);
    for (int node = 0; node < kNodeCount; ++node) {
      const double d = node == kTargetNode ? target_d : fixed_dist[node];
      const double rssi = quantize(channels[node].sample(d), 100.0);
      const bool dropped =
          loss_prob > 0.0 && drop_rng[node].uniform() < loss_prob;
      if (!dropped)
        ds.records.push_back({node, t, ts, rssi});
    }
  }

  ds.meta.channel = params[kTargetNode];
  ds.meta.arena = arena;
  ds.meta.seed = seed;
  ds.meta.duration_s = static_cast<double>(ticks) * 0.050;
  ds.meta.loss_prob = loss_prob;
  for (int i = 0; i < 4; ++i)
    ds.meta.static_offsets_db[i] = channels[i].multipath_offset_db();
  return ds;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string());

  {
    std::ofstream os(dir / "records.csv", std::ios::binary);
    if (!os) throw IoError("cannot write " + (dir / "records.csv").string());
    os << "node_id,seq,timestamp_ms,rssi_dbm\n";
    for (const auto& r : ds.records) os << encode_record(r);
  }
  {
    std::ofstream os(dir / "truth.csv", std::ios::binary);
    if (!os) throw IoError("cannot write " + (dir / "truth.csv").string());
    os << "timestamp_ms,distance_m\n";
    char buf[64];
    for (const auto& s : ds.truth.samples) {
      std::snprintf(buf, sizeof buf, "%" PRId64 ",%.4f\n", s.timestamp_ms,
                    s.distance_m);
      os << buf;
    }
  }
  {
    std::ofstream os(dir / "meta.txt", std::ios::binary);
    if (!os) throw IoError("cannot write " + (dir / "meta.txt").string());
    const SimMeta& m = ds.meta;
    os << "tick_ms = 50\n";
    os << "seed = " << m.seed << "\n";
    write_meta_line(os, "duration_s", m.duration_s);
    write_meta_line(os, "loss_prob", m.loss_prob);
    os << "trajectory = " << m.trajectory << "\n";
    write_meta_line(os, "gt_noise_mm", m.gt_noise_mm);
    os << "env_index = " << m.env_index << "\n";
    write_meta_line(os, "room_w", m.arena.room_w);
    write_meta_line(os, "room_d", m.arena.room_d);
    write_meta_line(os, "inner_w", m.arena.inner_w);
    write_meta_line(os, "inner_d", m.arena.inner_d);
    write_meta_line(os, "wap_x", m.arena.wap.x);
    write_meta_line(os, "wap_y", m.arena.wap.y);
    write_meta_line(os, "p0_dbm", m.channel.p0_dbm);
    write_meta_line(os, "d0_m", m.channel.d0_m);
    write_meta_line(os, "gamma", m.channel.gamma);
    write_meta_line(os, "sigma_db", m.channel.sigma_db);
    write_meta_line(os, "rho", m.channel.rho);
    write_meta_line(os, "rician_k", m.channel.rician_k);
    os << "channel_seed = " << m.channel.seed << "\n";
    for (int i = 0; i < 4; ++i)
      write_meta_line(os, "multipath_offset_node" + std::to_string(i),
                      m.static_offsets_db[i]);
  }
}

namespace {

std::map<std::string, std::string> read_meta_map(
    const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw IoError("cannot read " + file.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

double meta_num(const std::map<std::string, std::string>& kv,
                const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw ParseError("meta.txt: missing key " + key);
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw ParseError("meta.txt: bad number for " + key);
  }
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  {
    std::ifstream is(dir / "records.csv");
    if (!is) throw IoError("cannot read " + (dir / "records.csv").string());
    std::string line;
    if (!std::getline(is, line) ||
        strip_eol(line) != "node_id,seq,timestamp_ms,rssi_dbm")
      throw ParseError("records.csv: bad or missing header");
    size_t line_no = 1;
    while (std::getline(is, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        ds.records.push_back(decode_record(line));
      } catch (const ParseError& e) {
        throw ParseError("records.csv line " + std::to_string(line_no) + ": " +
                         e.what());
      }
    }
  }
  {
    std::ifstream is(dir / "truth.csv");
    if (!is) throw IoError("cannot read " + (dir / "truth.csv").string());
    std::string line;
    if (!std::getline(is, line) ||
        strip_eol(line) != "timestamp_ms,distance_m")
      throw ParseError("truth.csv: bad or missing header");
    size_t line_no = 1;
    while (std::getline(is, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto fields = split_csv(strip_eol(line));
      if (fields.size() != 2)
        throw ParseError("truth.csv line " + std::to_string(line_no) +
                         ": expected 2 fields");
      GtSample s;
      s.timestamp_ms = parse_field<int64_t>(fields[0], "timestamp_ms");
      s.distance_m = parse_field<double>(fields[1], "distance_m");
      ds.truth.samples.push_back(s);
    }
  }
  {
    const auto kv = read_meta_map(dir / "meta.txt");
    SimMeta& m = ds.meta;
    m.duration_s = meta_num(kv, "duration_s");
    m.loss_prob = meta_num(kv, "loss_prob");
    m.gt_noise_mm = meta_num(kv, "gt_noise_mm");
    m.seed = static_cast<uint64_t>(meta_num(kv, "seed"));
    m.env_index = static_cast<int>(meta_num(kv, "env_index"));
    if (auto it = kv.find("trajectory"); it != kv.end())
      m.trajectory = it->second;
    m.arena = make_arena(meta_num(kv, "room_w"), meta_num(kv, "room_d"),
                         meta_num(kv, "inner_w"), meta_num(kv, "inner_d"),
                         Vec2{meta_num(kv, "wap_x"), meta_num(kv, "wap_y")});
    m.channel.p0_dbm = meta_num(kv, "p0_dbm");
    m.channel.d0_m = meta_num(kv, "d0_m");
    m.channel.gamma = meta_num(kv, "gamma");
    m.channel.sigma_db = meta_num(kv, "sigma_db");
    m.channel.rho = meta_num(kv, "rho");
    m.channel.rician_k = meta_num(kv, "rician_k");
    m.channel.seed = static_cast<uint64_t>(meta_num(kv, "channel_seed"));
    for (int i = 0; i < 4; ++i)
      m.static_offsets_db[i] =
          meta_num(kv, "multipath_offset_node" + std::to_string(i));
  }
  return ds;
}

}  // namespace rssiloc
