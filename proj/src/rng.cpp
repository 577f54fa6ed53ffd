#include "gffx/rng.hpp"

#include <cmath>
#include <numbers>

namespace gffx {

std::uint64_t Rng::uniform_below(std::uint64_t n) {
  // Rejection keeps the draw exactly uniform; the loop runs once in the
  // common case because n is tiny relative to 2^64.
  std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double Rng::gaussian() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_gaussian_;
  }
  double u1 = uniform01_open();
  double u2 = uniform01();
  double radius = std::sqrt(-2.0 * std::log(u1));
  double angle = 2.0 * std::numbers::pi * u2;
  cached_gaussian_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

}  // namespace gffx
