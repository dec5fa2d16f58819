#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace rssiloc {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

double distance(Vec2 a, Vec2 b);

// Room with a centered inner arena; four fixed nodes sit at the arena
// corners and the WAP inside the arena. All lengths in meters.
struct Arena {
  double room_w = 8.46;
  double room_d = 6.98;
  double inner_w = 4.14;
  double inner_d = 2.86;
  Vec2 wap;
  std::array<Vec2, 4> fixed_nodes;
};

// Builds an arena with the inner rectangle centered in the room, fixed nodes
// at the inner corners and the WAP at `wap` (room center when omitted).
Arena make_arena(double room_w, double room_d, double inner_w, double inner_d);
Arena make_arena(double room_w, double room_d, double inner_w, double inner_d,
                 Vec2 wap);
Arena make_default_arena();

// Lower-left corner of the inner rectangle.
Vec2 inner_origin(const Arena& a);

// Throws ConfigError when the geometry is inconsistent.
void validate(const Arena& a);

enum class TrajectoryKind { kWaypointLoop, kLissajous, kRandomWalk };

TrajectoryKind parse_trajectory_kind(std::string_view name);
const char* to_string(TrajectoryKind kind);

struct TrajSample {
  int64_t timestamp_ms = 0;
  Vec2 pos;
};

// Target positions on the 50 ms tick grid.
struct Trajectory {
  std::vector<TrajSample> samples;
};

struct TrajectoryOptions {
  double max_speed_mps = 0.5;      // hard cap checked by the invariants
  double cruise_speed_mps = 0.35;  // waypoint-loop / random-walk speed
  double period_s = 120.0;         // lissajous period
  double wap_clearance_m = 0.05;   // keep-out radius around the WAP
};

// Deterministic per seed. Throws ConfigError when the arena cannot realize
// the requested path (e.g. the keep-out disk swallows it).
Trajectory make_trajectory(const Arena& a, TrajectoryKind kind,
                           double duration_s, const TrajectoryOptions& opt,
                           uint64_t seed);

// Checks tick spacing, containment in the inner rectangle and the speed cap.
void validate_trajectory(const Trajectory& t, const Arena& a,
                         double max_speed_mps);

struct GtSample {
  int64_t timestamp_ms = 0;
  double distance_m = 0.0;
};

// Camera-style distance ground truth, one sample per trajectory tick.
struct GroundTruth {
  std::vector<GtSample> samples;
};

// Euclidean distance to the WAP plus uniform noise in [-noise_mm, +noise_mm],
// clamped at zero.
GroundTruth sample_ground_truth(const Arena& a, const Trajectory& t,
                                double noise_mm, uint64_t seed);

}  // namespace rssiloc
