#include "sk/mcmc.hpp"

#include "sk/gibbs_exact.hpp"
#include "sk/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace sk {

void ChainConfig::validate() const {
  if (thinning < 1) throw std::invalid_argument("ChainConfig: thinning must be at least 1");
  if (n_samples < kBatchCount) {
    throw std::invalid_argument("ChainConfig: need at least 20 samples for batch-means errors");
  }
}

double heat_bath_probability(const ModelParams& params, const Disorder& disorder,
                             const SpinConfig& config, std::size_t site) {
  const double x = params.beta * local_field(disorder, config, site) + params.h;
  return 0.5 * (1.0 + std::tanh(x));
}

GlauberChain::GlauberChain(const ModelParams& params, const Disorder& disorder, std::uint64_t seed)
    : params_(params),
      disorder_(&disorder),
      scale_(params.beta / std::sqrt(static_cast<double>(params.n))),
      config_(params.n),
      sums_(params.n, 0.0),
      rng_(seed) {
  params.validate();
  if (disorder.size() != params.n) throw std::invalid_argument("GlauberChain: dimension mismatch");
  for (std::size_t i = 0; i < params.n; ++i) {
    if (rng_.uniform() < 0.5) config_.set(i, 1);
  }
  for (std::size_t i = 0; i < params.n; ++i) {
    const auto row = disorder.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < params.n; ++j) s += row[j] * config_[j];
    sums_[i] = s;
  }
}

void GlauberChain::set_spin(std::size_t i, int spin) {
  if (config_[i] == spin) return;
  config_.set(i, spin);
  const double delta = 2.0 * spin;
  const auto row = disorder_->row(i);
  for (std::size_t j = 0; j < params_.n; ++j) sums_[j] += delta * row[j];
}

void GlauberChain::sweep() {
  for (std::size_t i = 0; i < params_.n; ++i) {
    const double p_up = 0.5 * (1.0 + std::tanh(scale_ * sums_[i] + params_.h));
    set_spin(i, rng_.uniform() < p_up ? 1 : -1);
  }
}

double batch_means_standard_error(const std::vector<double>& series, std::size_t batches) {
  const std::size_t len = series.size() / batches;
  if (len == 0) throw std::invalid_argument("batch_means_standard_error: series shorter than batch count");
  std::vector<double> means(batches, 0.0);
  for (std::size_t b = 0; b < batches; ++b) {
    for (std::size_t t = 0; t < len; ++t) means[b] += series[b * len + t];
    means[b] /= static_cast<double>(len);
  }
  double grand = 0.0;
  for (double m : means) grand += m;
  grand /= static_cast<double>(batches);
  double ss = 0.0;
  for (double m : means) ss += (m - grand) * (m - grand);
  const double var_of_batch_mean = ss / static_cast<double>(batches - 1);
  return std::sqrt(var_of_batch_mean / static_cast<double>(batches));
}

ChainEstimate run_chain(const ModelParams& params, const Disorder& disorder, const ChainConfig& chain) {
  chain.validate();
  GlauberChain state(params, disorder, chain.seed);
  const std::size_t n = params.n;
  for (std::size_t s = 0; s < chain.effective_burnin(n); ++s) state.sweep();

  // Per-batch sums; the final batch absorbs the remainder.
  const std::size_t per_batch = chain.n_samples / kBatchCount;
  std::vector<std::vector<double>> batch_sums(kBatchCount, std::vector<double>(n, 0.0));
  std::vector<std::size_t> batch_sizes(kBatchCount, 0);
  std::vector<double> totals(n, 0.0);

  ChainEstimate est;
  if (chain.keep_samples) est.samples.reserve(chain.n_samples);
  for (std::size_t t = 0; t < chain.n_samples; ++t) {
    for (std::size_t s = 0; s < chain.thinning; ++s) state.sweep();
    const std::size_t b = std::min(t / per_batch, kBatchCount - 1);
    const SpinConfig& c = state.config();
    for (std::size_t i = 0; i < n; ++i) batch_sums[b][i] += c[i];
    ++batch_sizes[b];
    if (chain.keep_samples) est.samples.push_back(c);
  }

  est.magnetizations.assign(n, 0.0);
  est.standard_errors.assign(n, 0.0);
  const double batches = static_cast<double>(kBatchCount);
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    double mean_of_means = 0.0;
    for (std::size_t b = 0; b < kBatchCount; ++b) {
      total += batch_sums[b][i];
      mean_of_means += batch_sums[b][i] / static_cast<double>(batch_sizes[b]);
    }
    mean_of_means /= batches;
    double ss = 0.0;
    for (std::size_t b = 0; b < kBatchCount; ++b) {
      const double d = batch_sums[b][i] / static_cast<double>(batch_sizes[b]) - mean_of_means;
      ss += d * d;
    }
    est.magnetizations[i] = total / static_cast<double>(chain.n_samples);
    est.standard_errors[i] = std::sqrt(ss / (batches - 1.0) / batches);
  }
  return est;
}

std::vector<ChainEstimate> sample_replicas(const ModelParams& params, const Disorder& disorder,
                                           const ChainConfig& chain, std::size_t n_replicas) {
  if (n_replicas < 1) throw std::invalid_argument("sample_replicas: need at least one replica");
  std::vector<ChainEstimate> out;
  out.reserve(n_replicas);
  for (std::size_t r = 0; r < n_replicas; ++r) {
    ChainConfig c = chain;
    c.seed = derive_seed(chain.seed, Stream::replica, r);
    out.push_back(run_chain(params, disorder, c));
  }
  return out;
}

std::vector<double> heat_bath_transition_matrix(const ModelParams& params, const Disorder& disorder,
                                                std::size_t site) {
  check_enumeration_capacity(params.n);
  if (params.n > 10) throw std::invalid_argument("heat_bath_transition_matrix: N <= 10 only");
  if (site >= params.n) throw std::out_of_range("heat_bath_transition_matrix: site out of range");
  const std::size_t states = std::size_t{1} << params.n;
  std::vector<double> p(states * states, 0.0);
  for (std::size_t from = 0; from < states; ++from) {
    const SpinConfig c = SpinConfig::from_bits(params.n, from);
    const double up = heat_bath_probability(params, disorder, c, site);
    const std::size_t to_up = from | (std::size_t{1} << site);
    const std::size_t to_down = from & ~(std::size_t{1} << site);
    p[from * states + to_up] += up;
    p[from * states + to_down] += 1.0 - up;
  }
  return p;
}

}  // namespace sk
