#include "doctest.h"

#include <cmath>
#include <vector>

#include "rssiloc/channel.hpp"
#include "rssiloc/errors.hpp"
#include "test_util.hpp"

using namespace rssiloc;

namespace {

ChannelParams params(double p0, double gamma, double d0) {
  ChannelParams p;
  p.p0_dbm = p0;
  p.gamma = gamma;
  p.d0_m = d0;
  return p;
}

}  // namespace

TEST_CASE("mean_rssi reference cases") {
  CHECK(mean_rssi(params(-40, 2, 1), 1.0) == doctest::Approx(-40.0).epsilon(1e-12));
  CHECK(mean_rssi(params(-40, 2, 1), 10.0) == doctest::Approx(-60.0).epsilon(1e-12));
  // 10 * 3 * log10(2) = 9.030899869919434
  CHECK(mean_rssi(params(-40, 3, 1), 2.0) ==
        doctest::Approx(-49.030899869919434).epsilon(1e-12));
}

TEST_CASE("mean_rssi rejects non-positive distances") {
  const ChannelParams p = params(-40, 2, 1);
  CHECK_THROWS_AS(mean_rssi(p, 0.0), std::domain_error);
  CHECK_THROWS_AS(mean_rssi(p, -1.0), std::domain_error);
}

TEST_CASE("mean_rssi is strictly decreasing in distance for gamma > 0") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    ChannelParams p;
    p.p0_dbm = rng.uniform(-70, -20);
    p.gamma = rng.uniform(0.5, 5.0);
    p.d0_m = rng.uniform(0.1, 2.0);
    const double d1 = rng.uniform(0.01, 20.0);
    const double d2 = d1 + rng.uniform(1e-6, 10.0);
    CHECK(mean_rssi(p, d1) > mean_rssi(p, d2));
  }
}

TEST_CASE("channel params invariants") {
  ChannelParams p;
  p.d0_m = 0;
  CHECK_THROWS_AS(validate(p), ConfigError);
  p = ChannelParams{};
  p.sigma_db = -1;
  CHECK_THROWS_AS(validate(p), ConfigError);
  p = ChannelParams{};
  p.rho = 1.0;
  CHECK_THROWS_AS(validate(p), ConfigError);
  p = ChannelParams{};
  p.rician_k = -0.5;
  CHECK_THROWS_AS(validate(p), ConfigError);
  CHECK_NOTHROW(validate(ChannelParams{}));
}

TEST_CASE("step_shadowing degenerate noise-free case") {
  ChannelParams p;
  p.rho = 0.0;
  p.sigma_db = 0.0;
  ShadowState s;
  Rng rng(11);
  for (int i = 0; i < 100; ++i) CHECK(step_shadowing(s, p, rng) == 0.0);
}

TEST_CASE("step_shadowing stationary std and lag-1 autocorrelation") {
  ChannelParams p;
  p.rho = 0.95;
  p.sigma_db = 6.0;
  ShadowState s;
  Rng rng(42);
  for (int i = 0; i < 2000; ++i) step_shadowing(s, p, rng);  // burn-in
  std::vector<double> samples(100000);
  for (auto& v : samples) v = step_shadowing(s, p, rng);
  CHECK(std::abs(testutil::population_std(samples) - 6.0) < 0.15);
  CHECK(std::abs(testutil::lag1_autocorr(samples) - 0.95) < 0.01);
}

TEST_CASE("stationary shadowing marginal passes a KS test at the 1% level") {
  ChannelParams p;
  p.rho = 0.95;
  p.sigma_db = 6.0;
  ShadowState s;
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) step_shadowing(s, p, rng);
  // Thin by 128 ticks (rho^128 ~ 1.4e-3) so the KS critical value for
  // independent samples applies.
  std::vector<double> samples(100000);
  for (auto& v : samples) {
    for (int k = 0; k < 127; ++k) step_shadowing(s, p, rng);
    v = step_shadowing(s, p, rng);
  }
  const double d = testutil::ks_statistic_vs_normal(samples, 6.0);
  const double crit_1pct = 1.628 / std::sqrt(100000.0);
  CHECK(d < crit_1pct);
}

TEST_CASE("static node with sigma = 0 is deterministic mean + offset") {
  ChannelParams p;
  p.sigma_db = 0.0;
  p.seed = 9;
  NodeChannel node(p, 2, /*is_static=*/true);
  const double expected = mean_rssi(p, 3.0) + node.multipath_offset_db();
  for (int i = 0; i < 50; ++i) CHECK(node.sample(3.0) == expected);
}

TEST_CASE("static node Monte-Carlo mean matches mean_rssi + offset") {
  ChannelParams p;
  p.sigma_db = 6.0;
  p.rho = 0.0;  // independent ticks; the sample mean concentrates fast
  p.seed = 123;
  NodeChannel node(p, 0, true);
  std::vector<double> samples(100000);
  for (auto& v : samples) v = node.sample(2.0);
  const double expected = mean_rssi(p, 2.0) + node.multipath_offset_db();
  CHECK(std::abs(testutil::mean(samples) - expected) < 0.1);
}

TEST_CASE("formula is finite arbitrarily close to the transmitter") {
  const ChannelParams p = params(-40, 2, 1);
  const double v = mean_rssi(p, 0.0001);
  CHECK(std::isfinite(v));
  CHECK(v > p.p0_dbm);
}

TEST_CASE("same seed gives bit-identical RSSI sequences") {
  ChannelParams p;
  p.seed = 77;
  for (const bool is_static : {true, false}) {
    NodeChannel a(p, 4, is_static);
    NodeChannel b(p, 4, is_static);
    for (int i = 0; i < 200; ++i) {
      const double d = 0.5 + 0.01 * i;
      CHECK(a.sample(d) == b.sample(d));
    }
  }
}

TEST_CASE("node streams with different ids are decorrelated") {
  ChannelParams p;
  p.seed = 77;
  NodeChannel a(p, 0, true);
  NodeChannel b(p, 1, true);
  CHECK(a.multipath_offset_db() != b.multipath_offset_db());
}

TEST_CASE("rician fade dB has unit mean envelope power") {
  Rng rng(3);
  for (const double k : {0.0, 1.0, 6.0, 20.0}) {
    double power = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i)
      power += std::pow(10.0, rician_fade_db(k, rng) / 10.0);
    CHECK(power / n == doctest::Approx(1.0).epsilon(0.01));
  }
  // LOS-dominated fading collapses to 0 dB.
  CHECK(std::abs(rician_fade_db(1e12, rng)) < 1e-4);
}
