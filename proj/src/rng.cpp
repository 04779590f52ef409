#include "dtof/rng.hpp"

#include <cmath>
#include <numbers>

namespace dtof {

double Rng::gaussian() {
  if (has_cached_gauss_) {
    has_cached_gauss_ = false;
    return cached_gauss_;
  }
  const double u1 = uniform_pos();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  cached_gauss_ = r * std::sin(phi);
  has_cached_gauss_ = true;
  return r * std::cos(phi);
}

std::uint64_t Rng::uniform_below(std::uint64_t n) {
  if (n == 0) throw DomainError("Rng::uniform_below: n must be > 0");
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

} // namespace dtof
