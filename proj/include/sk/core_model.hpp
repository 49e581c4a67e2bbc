#pragma once

// Static objects of the Sherrington-Kirkpatrick model: parameters, disorder,
// spin configurations, and the energy / field formulas built on them.
//
// Sites are 0-based throughout the library. Command-line front ends convert
// from the 1-based numbering users see.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace sk {

struct ModelParams {
  std::size_t n = 1;  // number of spins
  double beta = 0.0;  // inverse temperature
  double h = 0.0;     // external field

  // Throws std::invalid_argument unless n >= 1, beta >= 0 and both reals are finite.
  void validate() const;
};

// Symmetric N x N coupling matrix with zero diagonal. Entry (i, j) is g_ij.
class Disorder {
 public:
  // i.i.d. standard normals above the diagonal; a pure function of (n, seed).
  static Disorder sample(std::size_t n, std::uint64_t seed);
  static Disorder zeros(std::size_t n);
  // Row-major matrix; must be symmetric with a zero diagonal.
  static Disorder from_matrix(std::size_t n, std::vector<double> couplings);

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return g_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {g_.data() + i * n_, n_};
  }
  std::span<const double> matrix() const noexcept { return g_; }

  // Same matrix with every coupling multiplied by c.
  Disorder scaled(double c) const;

 private:
  Disorder(std::size_t n, std::vector<double> g) : n_(n), g_(std::move(g)) {}

  std::size_t n_;
  std::vector<double> g_;
};

// Spins in {-1, +1}, packed one bit per site: bit b encodes spin 2b - 1.
class SpinConfig {
 public:
  explicit SpinConfig(std::size_t n, int fill = -1);
  static SpinConfig from_bits(std::size_t n, std::uint64_t bits);
  static SpinConfig from_spins(std::span<const int> spins);

  std::size_t size() const noexcept { return n_; }
  int operator[](std::size_t i) const noexcept {
    return ((words_[i >> 6] >> (i & 63)) & 1ULL) ? 1 : -1;
  }
  void set(std::size_t i, int spin) noexcept {
    const std::uint64_t mask = 1ULL << (i & 63);
    if (spin > 0) {
      words_[i >> 6] |= mask;
    } else {
      words_[i >> 6] &= ~mask;
    }
  }
  void flip(std::size_t i) noexcept { words_[i >> 6] ^= 1ULL << (i & 63); }

  SpinConfig flipped() const;
  // Low 64 sites as a bit mask.
  std::uint64_t low_bits() const noexcept { return words_.empty() ? 0 : words_[0]; }
  std::vector<int> spins() const;

  friend bool operator==(const SpinConfig&, const SpinConfig&) = default;

 private:
  std::size_t n_;
  std::vector<std::uint64_t> words_;
};

// The g_1..g_N of the cavity field, drawn independently of the disorder.
class AuxGaussians {
 public:
  static AuxGaussians sample(std::size_t n, std::uint64_t seed);
  explicit AuxGaussians(std::vector<double> g) : g_(std::move(g)) {}

  std::size_t size() const noexcept { return g_.size(); }
  double operator[](std::size_t j) const noexcept { return g_[j]; }
  std::span<const double> values() const noexcept { return g_; }

 private:
  std::vector<double> g_;
};

// The N-1 spin system left after removing `site`. Original index j maps to j
// for j < site and to j - 1 for j > site.
struct ReducedSystem {
  std::size_t site = 0;
  double beta_minus = 0.0;  // beta * sqrt((N - 1) / N)
  Disorder sub_disorder;

  ModelParams params(double h) const { return {sub_disorder.size(), beta_minus, h}; }
  static std::size_t map_index(std::size_t removed_site, std::size_t j) noexcept {
    return j < removed_site ? j : j - 1;
  }
};

// -H_N(sigma) = beta / sqrt(N) * sum_{i<j} g_ij s_i s_j + h * sum_i s_i.
double energy(const ModelParams& params, const Disorder& disorder, const SpinConfig& config);

// l_i = N^{-1/2} * sum_{j != i} g_ij s_j.
double local_field(const Disorder& disorder, const SpinConfig& config, std::size_t site);

// l = N^{-1/2} * sum_j g_j s_j.
double cavity_field(const SpinConfig& config, const AuxGaussians& aux);

ReducedSystem reduce(const ModelParams& params, const Disorder& disorder, std::size_t site);

// rho: the configuration with `site` removed.
SpinConfig remove_site(const SpinConfig& config, std::size_t site);

}  // namespace sk
