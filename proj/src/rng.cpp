#include "rssiloc/rng.hpp"

#include <cmath>
#include <numbers>

namespace rssiloc {

uint64_t mix_seed(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

uint64_t derive_seed(uint64_t base, uint64_t salt) {
  return mix_seed(mix_seed(base) ^ mix_seed(salt + 0x5851F42D4C957F2DULL));
}

uint64_t derive_seed(uint64_t base, uint64_t salt1, uint64_t salt2) {
  return derive_seed(derive_seed(base, salt1), salt2);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

}  // namespace rssiloc
