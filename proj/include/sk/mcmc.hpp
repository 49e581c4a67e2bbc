#pragma once

// Heat-bath (Glauber) sampler for the Gibbs measure, for N beyond enumeration.

#include "sk/core_model.hpp"
#include "sk/rng.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace sk {

inline constexpr std::size_t kBatchCount = 20;

struct ChainConfig {
  std::size_t burnin_sweeps = 0;  // 0 selects the default of 10 * N
  std::size_t thinning = 1;       // sweeps between retained samples
  std::size_t n_samples = 1000;
  std::uint64_t seed = 0;
  bool keep_samples = false;

  void validate() const;
  std::size_t effective_burnin(std::size_t n) const { return burnin_sweeps ? burnin_sweeps : 10 * n; }
};

struct ChainEstimate {
  std::vector<double> magnetizations;
  std::vector<double> standard_errors;  // batch means over kBatchCount batches
  std::vector<SpinConfig> samples;      // filled when ChainConfig::keep_samples
};

// P(s_site = +1 | rest) = (1 + tanh(beta * l_site + h)) / 2.
double heat_bath_probability(const ModelParams& params, const Disorder& disorder,
                             const SpinConfig& config, std::size_t site);

// Systematic-sweep heat-bath chain with cached coupling sums.
class GlauberChain {
 public:
  GlauberChain(const ModelParams& params, const Disorder& disorder, std::uint64_t seed);

  void sweep();
  const SpinConfig& config() const noexcept { return config_; }
  // sum_j g_ij s_j for the current state.
  double coupling_sum(std::size_t i) const noexcept { return sums_[i]; }

 private:
  void set_spin(std::size_t i, int spin);

  ModelParams params_;
  const Disorder* disorder_;
  double scale_;
  SpinConfig config_;
  std::vector<double> sums_;
  Rng rng_;
};

ChainEstimate run_chain(const ModelParams& params, const Disorder& disorder, const ChainConfig& chain);

// n_replicas independent chains on the same disorder, seeded by
// derive_seed(chain.seed, Stream::replica, replica_index).
std::vector<ChainEstimate> sample_replicas(const ModelParams& params, const Disorder& disorder,
                                           const ChainConfig& chain, std::size_t n_replicas);

// Batch-means standard error of the mean of a series.
double batch_means_standard_error(const std::vector<double>& series, std::size_t batches = kBatchCount);

// Explicit single-site heat-bath kernel on 2^N states, row-major: entry
// [from * 2^N + to] is the probability of moving from `from` to `to` when
// `site` is refreshed. Intended for N <= 10.
std::vector<double> heat_bath_transition_matrix(const ModelParams& params, const Disorder& disorder,
                                                std::size_t site);

}  // namespace sk
