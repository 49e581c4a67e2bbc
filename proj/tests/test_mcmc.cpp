#include <doctest.h>

#include "sk/gibbs_exact.hpp"
#include "sk/mcmc.hpp"

#include <cmath>
#include <stdexcept>

using namespace sk;

TEST_CASE("heat-bath probability") {
  const Disorder d = Disorder::sample(4, 1);
  const SpinConfig s = SpinConfig::from_bits(4, 0b0110);
  CHECK(heat_bath_probability(ModelParams{4, 0.0, 0.0}, d, s, 2) == 0.5);
  CHECK(heat_bath_probability(ModelParams{4, 0.0, 10.0}, d, s, 2) >= 1.0 - 1e-8);
  CHECK(heat_bath_probability(ModelParams{4, 0.0, -10.0}, d, s, 2) <= 1e-8);
}

TEST_CASE("detailed balance and stationarity of the kernel") {
  for (std::size_t n : {2u, 3u, 4u}) {
    const ModelParams p{n, 0.45, 0.35};
    const Disorder d = Disorder::sample(n, 40 + n);
    const auto g = gibbs_probabilities(p, d);
    const std::size_t states = 1u << n;
    for (std::size_t site = 0; site < n; ++site) {
      const auto kernel = heat_bath_transition_matrix(p, d, site);
      for (std::size_t a = 0; a < states; ++a) {
        double row = 0.0;
        for (std::size_t b = 0; b < states; ++b) {
          row += kernel[a * states + b];
          CHECK(std::abs(g[a] * kernel[a * states + b] - g[b] * kernel[b * states + a]) <= 1e-12);
        }
        CHECK(std::abs(row - 1.0) < 1e-14);
      }
      for (std::size_t b = 0; b < states; ++b) {
        double flow = 0.0;
        for (std::size_t a = 0; a < states; ++a) flow += g[a] * kernel[a * states + b];
        CHECK(std::abs(flow - g[b]) < 1e-12);
      }
    }
  }
}

TEST_CASE("cached coupling sums stay consistent") {
  const ModelParams p{9, 0.4, 0.1};
  const Disorder d = Disorder::sample(9, 4);
  GlauberChain chain(p, d, 12);
  for (int s = 0; s < 50; ++s) chain.sweep();
  for (std::size_t i = 0; i < 9; ++i) {
    double direct = 0.0;
    for (std::size_t j = 0; j < 9; ++j) direct += d(i, j) * chain.config()[j];
    CHECK(std::abs(chain.coupling_sum(i) - direct) < 1e-12);
  }
}

TEST_CASE("independent spins at beta = 0") {
  const ModelParams p{6, 0.0, 0.5};
  const ChainEstimate est = run_chain(p, Disorder::sample(6, 2), ChainConfig{0, 1, 20000, 9, false});
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(est.standard_errors[i] > 0.0);
    CHECK(std::abs(est.magnetizations[i] - std::tanh(0.5)) < 4.0 * est.standard_errors[i]);
  }
}

TEST_CASE("chain agrees with enumeration") {
  const ModelParams p{10, 0.4, 0.3};
  const Disorder d = Disorder::sample(10, 21);
  const GibbsSummary exact = enumerate(p, d);
  const ChainEstimate est = run_chain(p, d, ChainConfig{0, 1, 40000, 5, false});
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(std::abs(est.magnetizations[i] - exact.magnetizations[i]) < 4.0 * est.standard_errors[i]);
  }
}

TEST_CASE("determinism and validation") {
  const ModelParams p{7, 0.3, 0.1};
  const Disorder d = Disorder::sample(7, 3);
  const ChainConfig cfg{0, 2, 500, 77, true};
  const ChainEstimate a = run_chain(p, d, cfg);
  const ChainEstimate b = run_chain(p, d, cfg);
  CHECK(a.magnetizations == b.magnetizations);
  CHECK(a.standard_errors == b.standard_errors);
  CHECK(a.samples.size() == 500);
  CHECK(a.samples == b.samples);
  CHECK_THROWS_AS(run_chain(p, d, ChainConfig{0, 1, 19, 1, false}), std::invalid_argument);
}

TEST_CASE("two replicas at infinite temperature have zero mean overlap") {
  const std::size_t n = 8;
  const ModelParams p{n, 0.0, 0.0};
  const auto reps = sample_replicas(p, Disorder::sample(n, 1), ChainConfig{0, 1, 4000, 3, true}, 2);
  REQUIRE(reps.size() == 2);
  std::vector<double> overlaps;
  for (std::size_t s = 0; s < 4000; ++s) {
    double r = 0.0;
    for (std::size_t j = 0; j < n; ++j) r += reps[0].samples[s][j] * reps[1].samples[s][j];
    overlaps.push_back(r / n);
  }
  double mean = 0.0;
  for (double r : overlaps) mean += r;
  mean /= overlaps.size();
  CHECK(std::abs(mean) < 4.0 * batch_means_standard_error(overlaps));
}

TEST_CASE("replica overlap second moment agrees with the exact value") {
  const std::size_t n = 12;
  const ModelParams p{n, 0.3, 0.3};
  const Disorder d = Disorder::sample(n, 31);
  const double q = 0.1;
  const auto exact = replica_second_moments(p, d, q);
  const auto reps = sample_replicas(p, d, ChainConfig{0, 1, 40000, 8, true}, 2);
  std::vector<double> series;
  for (std::size_t s = 0; s < reps[0].samples.size(); ++s) {
    double r = 0.0;
    for (std::size_t j = 0; j < n; ++j) r += reps[0].samples[s][j] * reps[1].samples[s][j];
    r /= n;
    series.push_back((r - q) * (r - q));
  }
  double mean = 0.0;
  for (double x : series) mean += x;
  mean /= series.size();
  CHECK(std::abs(mean - exact.overlap_m2) < 4.0 * batch_means_standard_error(series));
}

TEST_CASE("batch means of a constant series") {
  CHECK(batch_means_standard_error(std::vector<double>(100, 2.0)) == 0.0);
  CHECK_THROWS(batch_means_standard_error(std::vector<double>(10, 2.0)));
}
