#include "rssiloc/scenario.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "rssiloc/errors.hpp"
#include "rssiloc/rng.hpp"

namespace rssiloc {

namespace {
constexpr int64_t kTickMs = 50;
constexpr double kTickS = 0.050;
constexpr uint64_t kSaltGroundTruth = 0x67740001;
constexpr uint64_t kSaltRandomWalk = 0x72770001;
constexpr double kGeomEps = 1e-9;
}  // namespace

double distance(Vec2 a, Vec2 b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

Arena make_arena(double room_w, double room_d, double inner_w, double inner_d,
                 Vec2 wap) {
  Arena a;
  a.room_w = room_w;
  a.room_d = room_d;
  a.inner_w = inner_w;
  a.inner_d = inner_d;
  a.wap = wap;
  const Vec2 o = inner_origin(a);
  a.fixed_nodes = {Vec2{o.x, o.y}, Vec2{o.x + inner_w, o.y},
                   Vec2{o.x + inner_w, o.y + inner_d},
                   Vec2{o.x, o.y + inner_d}};
  validate(a);
  return a;
}

Arena make_arena(double room_w, double room_d, double inner_w,
                 double inner_d) {
  return make_arena(room_w, room_d, inner_w, inner_d,
                    Vec2{room_w / 2.0, room_d / 2.0});
}

Arena make_default_arena() {
  return make_arena(8.46, 6.98, 4.14, 2.86);
}

Vec2 inner_origin(const Arena& a) {
  return Vec2{(a.room_w - a.inner_w) / 2.0, (a.room_d - a.inner_d) / 2.0};
}

void validate(const Arena& a) {
  std::ostringstream bad;
  if (!(a.room_w > 0 && a.room_d > 0 && a.inner_w > 0 && a.inner_d > 0)) {
    bad << "room and inner dimensions must be positive";
  } else if (a.inner_w > a.room_w + kGeomEps ||
             a.inner_d > a.room_d + kGeomEps) {
    bad << "inner rectangle does not fit in the room";
  } else {
    const Vec2 o = inner_origin(a);
    if (a.wap.x < o.x - kGeomEps || a.wap.x > o.x + a.inner_w + kGeomEps ||
        a.wap.y < o.y - kGeomEps || a.wap.y > o.y + a.inner_d + kGeomEps) {
      bad << "wap (" << a.wap.x << ", " << a.wap.y
          << ") lies outside the inner rectangle";
    }
  }
  if (!bad.str().empty()) throw ConfigError("arena: " + bad.str());
}

TrajectoryKind parse_trajectory_kind(std::string_view name) {
  if (name == "waypoint-loop") return TrajectoryKind::kWaypointLoop;
  if (name == "lissajous") return TrajectoryKind::kLissajous;
  if (name == "random-walk") return TrajectoryKind::kRandomWalk;
  throw ConfigError("unknown trajectory kind: " + std::string(name) +
                    " (expected waypoint-loop | lissajous | random-walk)");
}

const char* to_string(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::kWaypointLoop: return "waypoint-loop";
    case TrajectoryKind::kLissajous: return "lissajous";
    case TrajectoryKind::kRandomWalk: return "random-walk";
  }
  return "?";
}

namespace {

size_t tick_count(double duration_s) {
  if (!(duration_s > 0.0))
    throw ConfigError("trajectory: duration_s must be > 0");
  return static_cast<size_t>(std::llround(duration_s / kTickS));
}

Trajectory make_waypoint_loop(const Arena& a, size_t n,
                              const TrajectoryOptions& opt) {
  const auto& wp = a.fixed_nodes;  // perimeter order ll, lr, ur, ul
  Trajectory t;
  t.samples.reserve(n);
  size_t leg = 0;
  Vec2 from = wp[0];
  t.samples.push_back({0, from});
  Vec2 to = wp[1];
  double leg_len = distance(from, to);
  size_t leg_ticks = static_cast<size_t>(
      std::ceil(leg_len / (opt.cruise_speed_mps * kTickS)));
  size_t step = 0;
  while (t.samples.size() < n) {
    ++step;
    const double frac = static_cast<double>(step) / leg_ticks;
    const Vec2 pos{from.x + frac * (to.x - from.x),
                   from.y + frac * (to.y - from.y)};
    t.samples.push_back(
        {static_cast<int64_t>(t.samples.size()) * kTickMs, pos});
    if (step == leg_ticks) {
      leg = (leg + 1) % wp.size();
      from = wp[leg];
      to = wp[(leg + 1) % wp.size()];
      leg_len = distance(from, to);
      leg_ticks = static_cast<size_t>(
          std::ceil(leg_len / (opt.cruise_speed_mps * kTickS)));
      step = 0;
    }
  }
  return t;
}

Trajectory make_lissajous(const Arena& a, size_t n,
                          const TrajectoryOptions& opt) {
  const Vec2 o = inner_origin(a);
  const Vec2 c{o.x + a.inner_w / 2.0, o.y + a.inner_d / 2.0};
  const double ax = 0.95 * a.inner_w / 2.0;
  const double ay = 0.95 * a.inner_d / 2.0;
  const double omega = 2.0 * std::numbers::pi / opt.period_s;
  Trajectory t;
  t.samples.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    const double theta = omega * static_cast<double>(i) * kTickS;
    const Vec2 pos{c.x + ax * std::sin(2.0 * theta + std::numbers::pi / 2.0),
                   c.y + ay * std::sin(3.0 * theta)};
    t.samples.push_back({static_cast<int64_t>(i) * kTickMs, pos});
  }
  return t;
}

Trajectory make_random_walk(const Arena& a, size_t n,
                            const TrajectoryOptions& opt, uint64_t seed) {
  Rng rng(derive_seed(seed, kSaltRandomWalk));
  const Vec2 o = inner_origin(a);
  const double margin = 0.02;
  const double x_lo = o.x + margin, x_hi = o.x + a.inner_w - margin;
  const double y_lo = o.y + margin, y_hi = o.y + a.inner_d - margin;
  Vec2 pos{o.x + a.inner_w * 0.75, o.y + a.inner_d / 2.0};
  double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
  // Stop-and-go cruising: the speed itself wanders (mean-reverting, clamped
  // at standstill and below the cap), so the bot pauses, creeps and sprints.
  const double v_cap = std::min(opt.cruise_speed_mps * 1.6,
                                opt.max_speed_mps * 0.95);
  double speed = opt.cruise_speed_mps;

  Trajectory t;
  t.samples.reserve(n);
  t.samples.push_back({0, pos});
  for (size_t i = 1; i < n; ++i) {
    heading += rng.normal(0.0, 0.25);
    speed = std::clamp(0.9 * speed + 0.1 * opt.cruise_speed_mps +
                           0.22 * opt.cruise_speed_mps * rng.normal(),
                       0.0, v_cap);
    const double step_len = speed * kTickS;
    Vec2 cand = pos;
    bool ok = false;
    for (int attempt = 0; attempt < 8 && !ok; ++attempt) {
      cand = {pos.x + step_len * std::cos(heading),
              pos.y + step_len * std::sin(heading)};
      ok = true;
      if (cand.x < x_lo || cand.x > x_hi) {
        heading = std::numbers::pi - heading;
        ok = false;
      }
      if (cand.y < y_lo || cand.y > y_hi) {
        heading = -heading;
        ok = false;
      }
      if (ok && distance(cand, a.wap) < opt.wap_clearance_m + margin) {
        // Point away from the WAP with a little wobble.
        heading = std::atan2(pos.y - a.wap.y, pos.x - a.wap.x) +
                  rng.normal(0.0, 0.2);
        ok = false;
      }
    }
    if (!ok) cand = pos;  // give up this tick; standing still is legal
    pos = cand;
    t.samples.push_back({static_cast<int64_t>(i) * kTickMs, pos});
  }
  return t;
}

}  // namespace

Trajectory make_trajectory(const Arena& a, TrajectoryKind kind,
                           double duration_s, const TrajectoryOptions& opt,
                           uint64_t seed) {
  validate(a);
  if (!(opt.max_speed_mps > 0) || !(opt.cruise_speed_mps > 0) ||
      !(opt.period_s > 0) || !(opt.wap_clearance_m >= 0))
    throw ConfigError("trajectory: speeds and period must be positive");
  if (opt.cruise_speed_mps > opt.max_speed_mps)
    throw ConfigError("trajectory: cruise speed exceeds max_speed_mps");
  if (0.95 * std::min(a.inner_w, a.inner_d) / 2.0 <= opt.wap_clearance_m)
    throw ConfigError(
        "trajectory: arena too small for the requested WAP clearance");

  const size_t n = tick_count(duration_s);
  Trajectory t;
  switch (kind) {
    case TrajectoryKind::kWaypointLoop: t = make_waypoint_loop(a, n, opt); break;
    case TrajectoryKind::kLissajous: t = make_lissajous(a, n, opt); break;
    case TrajectoryKind::kRandomWalk: t = make_random_walk(a, n, opt, seed); break;
  }
  validate_trajectory(t, a, opt.max_speed_mps);
  for (const auto& s : t.samples) {
    if (distance(s.pos, a.wap) < opt.wap_clearance_m - kGeomEps)
      throw ConfigError(
          "trajectory: path violates the WAP clearance; arena too small for "
          "the requested path");
  }
  return t;
}

void validate_trajectory(const Trajectory& t, const Arena& a,
                         double max_speed_mps) {
  if (t.samples.empty()) throw ConfigError("trajectory: empty");
  const Vec2 o = inner_origin(a);
  for (size_t i = 0; i < t.samples.size(); ++i) {
    const auto& s = t.samples[i];
    if (s.timestamp_ms != static_cast<int64_t>(i) * kTickMs)
      throw ConfigError("trajectory: timestamps must advance by exactly 50 ms");
    if (s.pos.x < o.x - kGeomEps || s.pos.x > o.x + a.inner_w + kGeomEps ||
        s.pos.y < o.y - kGeomEps || s.pos.y > o.y + a.inner_d + kGeomEps)
      throw ConfigError("trajectory: sample outside the inner rectangle");
    if (i > 0) {
      const double v = distance(s.pos, t.samples[i - 1].pos) / kTickS;
      if (v > max_speed_mps + kGeomEps)
        throw ConfigError("trajectory: per-tick speed exceeds max_speed_mps");
    }
  }
}

GroundTruth sample_ground_truth(const Arena& a, const Trajectory& t,
                                double noise_mm, uint64_t seed) {
  if (noise_mm < 0) throw ConfigError("ground truth: noise_mm must be >= 0");
  Rng rng(derive_seed(seed, kSaltGroundTruth));
  GroundTruth gt;
  gt.samples.reserve(t.samples.size());
  for (const auto& s : t.samples) {
    double d = distance(s.pos, a.wap);
    if (noise_mm > 0) d += rng.uniform(-noise_mm, noise_mm) / 1000.0;
    if (d < 0) d = 0;
    gt.samples.push_back({s.timestamp_ms, d});
  }
  return gt;
}

}  // namespace rssiloc
