#include "sk/core_model.hpp"

#include "sk/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sk {

void ModelParams::validate() const {
  if (n < 1) throw std::invalid_argument("ModelParams: N must be at least 1");
  if (!std::isfinite(beta) || beta < 0.0) {
    throw std::invalid_argument("ModelParams: beta must be finite and non-negative");
  }
  if (!std::isfinite(h)) throw std::invalid_argument("ModelParams: h must be finite");
}

Disorder Disorder::sample(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("Disorder::sample: N must be at least 1");
  std::vector<double> g(n * n, 0.0);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double x = rng.normal();
      g[i * n + j] = x;
      g[j * n + i] = x;
    }
  }
  return Disorder(n, std::move(g));
}

Disorder Disorder::zeros(std::size_t n) {
  if (n < 1) throw std::invalid_argument("Disorder::zeros: N must be at least 1");
  return Disorder(n, std::vector<double>(n * n, 0.0));
}

Disorder Disorder::from_matrix(std::size_t n, std::vector<double> couplings) {
  if (n < 1 || couplings.size() != n * n) {
    throw std::invalid_argument("Disorder::from_matrix: expected an N x N matrix");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (couplings[i * n + i] != 0.0) {
      throw std::invalid_argument("Disorder::from_matrix: diagonal must be zero");
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      if (couplings[i * n + j] != couplings[j * n + i]) {
        throw std::invalid_argument("Disorder::from_matrix: matrix must be symmetric");
      }
    }
  }
  return Disorder(n, std::move(couplings));
}

Disorder Disorder::scaled(double c) const {
  std::vector<double> g = g_;
  for (double& x : g) x *= c;
  return Disorder(n_, std::move(g));
}

SpinConfig::SpinConfig(std::size_t n, int fill)
    : n_(n), words_((n + 63) / 64, fill > 0 ? ~0ULL : 0ULL) {
  if (fill > 0 && (n & 63) != 0) words_.back() &= (1ULL << (n & 63)) - 1;
}

SpinConfig SpinConfig::from_bits(std::size_t n, std::uint64_t bits) {
  if (n > 64) throw std::invalid_argument("SpinConfig::from_bits: at most 64 sites");
  SpinConfig c(n);
  if (n > 0) c.words_[0] = n == 64 ? bits : bits & ((1ULL << n) - 1);
  return c;
}

SpinConfig SpinConfig::from_spins(std::span<const int> spins) {
  SpinConfig c(spins.size());
  for (std::size_t i = 0; i < spins.size(); ++i) {
    if (spins[i] != 1 && spins[i] != -1) {
      throw std::invalid_argument("SpinConfig::from_spins: spins must be +1 or -1");
    }
    c.set(i, spins[i]);
  }
  return c;
}

SpinConfig SpinConfig::flipped() const {
  SpinConfig c(*this);
  for (auto& w : c.words_) w = ~w;
  if ((n_ & 63) != 0) c.words_.back() &= (1ULL << (n_ & 63)) - 1;
  return c;
}

std::vector<int> SpinConfig::spins() const {
  std::vector<int> s(n_);
  for (std::size_t i = 0; i < n_; ++i) s[i] = (*this)[i];
  return s;
}

AuxGaussians AuxGaussians::sample(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> g(n);
  for (double& x : g) x = rng.normal();
  return AuxGaussians(std::move(g));
}

double energy(const ModelParams& params, const Disorder& disorder, const SpinConfig& config) {
  const std::size_t n = params.n;
  if (disorder.size() != n || config.size() != n) {
    throw std::invalid_argument("energy: dimension mismatch between params, disorder and config");
  }
  double coupling = 0.0;
  double field = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int si = config[i];
    field += si;
    const auto row = disorder.row(i);
    double partial = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) partial += row[j] * config[j];
    coupling += si * partial;
  }
  return params.beta / std::sqrt(static_cast<double>(n)) * coupling + params.h * field;
}

double local_field(const Disorder& disorder, const SpinConfig& config, std::size_t site) {
  const std::size_t n = disorder.size();
  if (config.size() != n) throw std::invalid_argument("local_field: dimension mismatch");
  if (site >= n) throw std::out_of_range("local_field: site " + std::to_string(site) + " out of range");
  const auto row = disorder.row(site);
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j != site) s += row[j] * config[j];
  }
  return s / std::sqrt(static_cast<double>(n));
}

double cavity_field(const SpinConfig& config, const AuxGaussians& aux) {
  if (config.size() != aux.size()) throw std::invalid_argument("cavity_field: length mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < aux.size(); ++j) s += aux[j] * config[j];
  return s / std::sqrt(static_cast<double>(aux.size()));
}

ReducedSystem reduce(const ModelParams& params, const Disorder& disorder, std::size_t site) {
  const std::size_t n = params.n;
  if (disorder.size() != n) throw std::invalid_argument("reduce: dimension mismatch");
  if (n < 2) throw std::invalid_argument("reduce: need at least two spins to remove one");
  if (site >= n) throw std::out_of_range("reduce: site out of range");
  const std::size_t m = n - 1;
  std::vector<double> sub(m * m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == site) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == site) continue;
      sub[ReducedSystem::map_index(site, i) * m + ReducedSystem::map_index(site, j)] = disorder(i, j);
    }
  }
  const double beta_minus =
      params.beta * std::sqrt(static_cast<double>(m) / static_cast<double>(n));
  return ReducedSystem{site, beta_minus, Disorder::from_matrix(m, std::move(sub))};
}

SpinConfig remove_site(const SpinConfig& config, std::size_t site) {
  if (site >= config.size()) throw std::out_of_range("remove_site: site out of range");
  SpinConfig rho(config.size() - 1);
  for (std::size_t j = 0; j < config.size(); ++j) {
    if (j != site) rho.set(ReducedSystem::map_index(site, j), config[j]);
  }
  return rho;
}

}  // namespace sk
