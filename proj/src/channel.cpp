#include "rssiloc/channel.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rssiloc/errors.hpp"

namespace rssiloc {

namespace {
constexpr uint64_t kSaltNodeStream = 0x6368616E;  // per-node channel stream
}

void validate(const ChannelParams& p) {
  std::ostringstream bad;
  if (!(p.d0_m > 0.0)) bad << "d0_m must be > 0 (got " << p.d0_m << ")";
  else if (!(p.sigma_db >= 0.0))
    bad << "sigma_db must be >= 0 (got " << p.sigma_db << ")";
  else if (!(p.rho >= 0.0 && p.rho < 1.0))
    bad << "rho must be in [0, 1) (got " << p.rho << ")";
  else if (!(p.rician_k >= 0.0))
    bad << "rician_k must be >= 0 (got " << p.rician_k << ")";
  else if (!std::isfinite(p.p0_dbm) || !std::isfinite(p.gamma))
    bad << "p0_dbm and gamma must be finite";
  if (!bad.str().empty()) throw ConfigError("channel: " + bad.str());
}

double mean_rssi(const ChannelParams& p, double distance_m) {
  if (!(distance_m > 0.0)) {
    std::ostringstream msg;
    msg << "mean_rssi: distance must be > 0 (got " << distance_m << ")";
    throw std::domain_error(msg.str());
  }
  // Received power falls with distance.
  return p.p0_dbm - 10.0 * p.gamma * std::log10(distance_m / p.d0_m);
}

double step_shadowing(ShadowState& s, const ChannelParams& p, Rng& rng) {
  const double innovation =
      std::sqrt(1.0 - p.rho * p.rho) * p.sigma_db * rng.normal();
  s.current_db = p.rho * s.current_db + innovation;
  return s.current_db;
}

double rician_fade_db(double k_factor, Rng& rng) {
  // LOS amplitude s and per-component scatter sd chosen so E[x^2 + y^2] = 1.
  const double los = std::sqrt(k_factor / (k_factor + 1.0));
  const double scatter = std::sqrt(0.5 / (k_factor + 1.0));
  const double x = los + scatter * rng.normal();
  const double y = scatter * rng.normal();
  double power = x * x + y * y;
  if (power < 1e-300) power = 1e-300;
  return 10.0 * std::log10(power);
}

double sample_rssi(const ChannelParams& p, ShadowState& s, Rng& rng,
                   double multipath_offset_db, double distance_m) {
  return mean_rssi(p, distance_m) + step_shadowing(s, p, rng) +
         multipath_offset_db;
}

double sample_rssi_target(const ChannelParams& p, ShadowState& s, Rng& rng,
                          double distance_m) {
  return mean_rssi(p, distance_m) + step_shadowing(s, p, rng) +
         rician_fade_db(p.rician_k, rng);
}

NodeChannel::NodeChannel(const ChannelParams& p, int node_id, bool is_static)
    : params_(p),
      rng_(derive_seed(p.seed, kSaltNodeStream, static_cast<uint64_t>(node_id))),
      static_(is_static) {
  validate(p);
  if (static_) offset_db_ = rician_fade_db(params_.rician_k, rng_);
}

double NodeChannel::sample(double distance_m) {
  if (static_)
    return sample_rssi(params_, shadow_, rng_, offset_db_, distance_m);
  return sample_rssi_target(params_, shadow_, rng_, distance_m);
}

}  // namespace rssiloc
