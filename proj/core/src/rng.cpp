#include "colm/rng.hpp"

#include <cmath>

namespace colm {

double Rng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  // Box-Muller on two fresh uniforms; u1 kept away from 0.
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double th = 6.283185307179586476925286766559 * u2;
  cached_ = r * std::sin(th);
  has_cached_ = true;
  return r * std::cos(th);
}

i64 Rng::uniform_int(i64 n) {
  COLM_CHECK(n > 0, Range, "uniform_int: n must be positive, got " << n);
  unsigned __int128 wide = static_cast<unsigned __int128>(next_u64());
  wide *= static_cast<unsigned __int128>(n);
  return static_cast<i64>(wide >> 64);
}

}  // namespace colm
