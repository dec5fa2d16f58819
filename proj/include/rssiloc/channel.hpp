#pragma once

#include <cstdint>

#include "rssiloc/rng.hpp"

namespace rssiloc {

// Log-distance path loss with AR(1) shadowing and Rician small-scale fading.
// Distances are meters, powers dBm, deviations dB.
struct ChannelParams {
  double p0_dbm = -40.0;  // received power at the reference distance
  double d0_m = 1.0;      // reference distance, > 0
  double gamma = 2.2;     // path-loss exponent
  double sigma_db = 4.0;  // shadowing standard deviation, >= 0
  double rho = 0.95;      // shadowing correlation per 50 ms tick, in [0, 1)
  double rician_k = 6.0;  // multipath K-factor (LOS / scattered power), >= 0
  uint64_t seed = 0;
};

// Throws ConfigError when an invariant is violated.
void validate(const ChannelParams& p);

// Deterministic mean received power at distance d; strictly decreasing in d
// for gamma > 0. Throws std::domain_error for d <= 0.
double mean_rssi(const ChannelParams& p, double distance_m);

// Shadowing deviate of one node; stationary marginal is N(0, sigma^2).
struct ShadowState {
  double current_db = 0.0;
};

// Advances the Gauss-Markov shadowing process one tick and returns the new
// deviate: next = rho * current + sqrt(1 - rho^2) * sigma * z.
double step_shadowing(ShadowState& s, const ChannelParams& p, Rng& rng);

// One Rician fade in dB. The envelope power is normalized so its mean is 1
// (0 dB); k = 0 degenerates to Rayleigh fading.
double rician_fade_db(double k_factor, Rng& rng);

// Static-node sample: multipath enters as a fixed per-node offset that was
// drawn once for the environment.
double sample_rssi(const ChannelParams& p, ShadowState& s, Rng& rng,
                   double multipath_offset_db, double distance_m);

// Target-node sample: a fresh fade is drawn every tick.
double sample_rssi_target(const ChannelParams& p, ShadowState& s, Rng& rng,
                          double distance_m);

// Per-node channel instance. Owns an RNG stream derived from
// (params.seed, node_id), so nodes are independent and a run is reproducible.
class NodeChannel {
 public:
  NodeChannel(const ChannelParams& p, int node_id, bool is_static);

  double sample(double distance_m);
  double multipath_offset_db() const { return offset_db_; }
  bool is_static() const { return static_; }

 private:
  ChannelParams params_;
  Rng rng_;
  ShadowState shadow_;
  double offset_db_ = 0.0;
  bool static_ = false;
};

}  // namespace rssiloc
