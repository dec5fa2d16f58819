#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rssiloc/channel.hpp"
#include "rssiloc/scenario.hpp"

namespace rssiloc {

inline constexpr int kNodeCount = 5;
inline constexpr int kTargetNode = 4;  // nodes 0-3 are the fixed ones
inline constexpr int64_t kTickMs = 50;

// One RSSI report. seq counts ticks per node, so a gap in delivered seq
// numbers marks exactly one dropped report.
struct RssiRecord {
  int node_id = 0;
  uint64_t seq = 0;
  int64_t timestamp_ms = 0;
  double rssi_dbm = 0.0;  // carried at wire resolution (2 decimals)
};

// ASCII line "node_id,seq,timestamp_ms,rssi_dbm\n", rssi at 2 decimals.
std::string encode_record(const RssiRecord& r);

// Inverse of encode_record; throws ParseError naming the offending field.
RssiRecord decode_record(std::string_view line);

// Everything needed to reproduce / interpret a dataset. channel holds the
// target node's parameters (the baseline inverts these).
struct SimMeta {
  ChannelParams channel;
  Arena arena;
  uint64_t seed = 0;
  double duration_s = 0.0;
  double loss_prob = 0.0;
  double gt_noise_mm = 4.0;
  std::string trajectory = "lissajous";
  int env_index = 0;
  std::array<double, 4> static_offsets_db{};
};

struct Dataset {
  std::vector<RssiRecord> records;  // sorted by (timestamp_ms, node_id)
  GroundTruth truth;
  SimMeta meta;
};

// Simulates the five-node star acquisition over the trajectory's tick grid.
// Every node samples its channel each tick; reports are independently lost
// with loss_prob. Deterministic per (params seeds, seed).
Dataset run_acquisition(const Arena& arena, const Trajectory& traj,
                        const GroundTruth& truth,
                        const std::array<ChannelParams, kNodeCount>& params,
                        double loss_prob, uint64_t seed);

// records.csv + truth.csv + meta.txt in dir. Rewrites are byte-identical for
// identical datasets.
void write_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace rssiloc
