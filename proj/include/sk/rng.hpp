#pragma once

#include <cstdint>
#include <random>

namespace sk {

// Tags that separate independent random streams derived from one master seed.
enum class Stream : std::uint64_t {
  disorder = 1,
  aux_gaussians = 2,
  chain = 3,
  replica = 4,
  bootstrap = 5,
  interpolation = 6,
  replica_draw = 7,
  sample = 8,
};

// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Pure mixing function of (master_seed, stream, index). Distinct arguments give
// statistically unrelated seeds; the same arguments always give the same seed.
std::uint64_t derive_seed(std::uint64_t master_seed, Stream stream, std::uint64_t index) noexcept;

// Standard-normal quantile function.
double normal_quantile(double u);

// Seeded generator. Gaussian draws go through the inverse CDF of a uniform so
// that a seed maps to the same sequence on every run of the same build.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return normal_quantile(uniform()); }

  std::uint64_t next_u64() noexcept { return engine_(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace sk
