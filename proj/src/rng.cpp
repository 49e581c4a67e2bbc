#include "sk/rng.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sk {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master_seed, Stream stream, std::uint64_t index) noexcept {
  std::uint64_t s = splitmix64(master_seed);
  s = splitmix64(s ^ (static_cast<std::uint64_t>(stream) * 0xD1B54A32D192ED03ULL));
  return splitmix64(s ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw std::domain_error("normal_quantile: argument must lie in (0, 1)");
  }
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

}  // namespace sk
