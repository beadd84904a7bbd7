#include "hear/types.hpp"

#include <cmath>
#include <limits>

namespace hear {

std::uint64_t Rng::integer(std::uint64_t n) {
  // rejection sampling keeps the draw unbiased
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / n * n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double Rng::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = uniform(-1.0, 1.0);
    v = uniform(-1.0, 1.0);
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double m = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * m;
  have_spare_ = true;
  return u * m;
}

void Rng::ball(double radius, double out[3]) {
  while (true) {
    const double x = uniform(-radius, radius);
    const double y = uniform(-radius, radius);
    const double z = uniform(-radius, radius);
    if (x * x + y * y + z * z <= radius * radius) {
      out[0] = x;
      out[1] = y;
      out[2] = z;
      return;
    }
  }
}

} // namespace hear
