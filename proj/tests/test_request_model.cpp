#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "csn/request_model.hpp"

using namespace csn;

namespace {

// Independent analytic oracle: direct summation of the truncated pmf.
double analytic_truncated_mean(double mean, int max) {
  double z = 0.0, acc = 0.0;
  double weight = std::exp(-mean);  // k = 0 term
  for (int k = 0; k <= max; ++k) {
    z += weight;
    acc += k * weight;
    weight *= mean / (k + 1);
  }
  return acc / z;
}

}  // namespace

TEST_CASE("zero mean always draws zero") {
  Rng rng(1);
  for (int i = 0; i < 100; ++i)
    CHECK(truncated_poisson_sample(0.0, 15, rng) == 0);
}

TEST_CASE("negative mean is rejected") {
  Rng rng(1);
  CHECK_THROWS_AS(truncated_poisson_sample(-0.5, 15, rng),
                  std::invalid_argument);
}

TEST_CASE("empirical mean matches the analytic truncated mean") {
  const double mean = 1.0;
  const int max = 15;
  const int n = 100000;
  Rng rng(7);
  double acc = 0.0, acc2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const int k = truncated_poisson_sample(mean, max, rng);
    acc += k;
    acc2 += static_cast<double>(k) * k;
  }
  const double empirical = acc / n;
  const double variance = acc2 / n - empirical * empirical;
  const double stderr_mean = std::sqrt(variance / n);
  const double expected = analytic_truncated_mean(mean, max);
  CHECK(std::abs(empirical - expected) < 3.0 * stderr_mean);
}

TEST_CASE("a huge mean concentrates on the truncation point") {
  // Renormalized over {0,1,2}: p(2) = 5000/5101.
  const double p2 = 5000.0 / 5101.0;
  Rng rng(11);
  const int n = 20000;
  int twos = 0;
  for (int i = 0; i < n; ++i)
    if (truncated_poisson_sample(100.0, 2, rng) == 2) ++twos;
  const double freq = static_cast<double>(twos) / n;
  const double stderr_freq = std::sqrt(p2 * (1 - p2) / n);
  CHECK(std::abs(freq - p2) < 4.0 * stderr_freq);
}

TEST_CASE("all-zero means give an all-zero matrix") {
  RequestDistribution dist{{0.0, 0.0, 0.0}, 5, "zero"};
  Rng rng(3);
  const RequestMatrix m = sample_request_matrix(dist, 5, 10, rng);
  for (int u = 0; u < 3; ++u)
    for (int f = 0; f < 5; ++f)
      for (int t = 0; t < 10; ++t) CHECK_FALSE(m.at(u, f, t));
}

TEST_CASE("saturating means never exceed the file count per slot") {
  RequestDistribution dist{{50.0, 50.0}, 5, "hot"};
  Rng rng(5);
  const RequestMatrix m = sample_request_matrix(dist, 5, 20, rng);
  int full_slots = 0;
  for (int u = 0; u < 2; ++u)
    for (int t = 0; t < 20; ++t) {
      int row = 0;
      for (int f = 0; f < 5; ++f) row += m.at(u, f, t);
      CHECK(row <= 5);
      if (row == 5) ++full_slots;
    }
  CHECK(full_slots > 30);  // mean 50 of max 5: nearly every slot saturates
}

TEST_CASE("per-cluster request rates track the analytic truncated means") {
  // Half the clusters at mean 1, half at mean 2, 15 files, 100 slots.
  std::vector<double> means(20, 1.0);
  for (int u = 10; u < 20; ++u) means[u] = 2.0;
  RequestDistribution dist{means, 15, "mixed"};
  Rng rng(13);
  const int matrices = 200;
  std::vector<double> counts(20, 0.0);
  for (int i = 0; i < matrices; ++i) {
    const RequestMatrix m = sample_request_matrix(dist, 15, 100, rng);
    for (int u = 0; u < 20; ++u)
      for (int f = 0; f < 15; ++f)
        for (int t = 0; t < 100; ++t) counts[u] += m.at(u, f, t);
  }
  for (int u = 0; u < 20; ++u) {
    const double rate = counts[u] / (matrices * 100.0);
    const double expected = analytic_truncated_mean(means[u], 15);
    CHECK(std::abs(rate - expected) / expected < 0.05);
  }
}

TEST_CASE("same seed reproduces the matrix, fresh seeds vary") {
  RequestDistribution dist{{1.0, 2.0}, 6, "pair"};
  Rng a(99), b(99), c(100);
  const RequestMatrix ma = sample_request_matrix(dist, 6, 30, a);
  const RequestMatrix mb = sample_request_matrix(dist, 6, 30, b);
  const RequestMatrix mc = sample_request_matrix(dist, 6, 30, c);
  CHECK(ma == mb);
  CHECK(ma != mc);
}

TEST_CASE("request matrix round-trips through the wire format") {
  RequestDistribution dist{{1.0, 2.0, 0.5}, 4, "rt"};
  Rng rng(21);
  const RequestMatrix m = sample_request_matrix(dist, 4, 12, rng);
  CHECK(load_requests_text(save_requests(m)) == m);
}

TEST_CASE("distribution file round-trips and validates") {
  RequestDistribution d{{0.25, 1.5, 3.0}, 0, ""};
  const RequestDistribution loaded = load_distribution_text(save_distribution(d));
  CHECK(loaded.means == d.means);
  CHECK_THROWS_WITH_AS(load_distribution_text("DIST v1\nmean 0 1\nmean 2 1\n"),
                       doctest::Contains("exactly once"), std::runtime_error);
  CHECK_THROWS_WITH_AS(load_distribution_text("DIST v1\nmean 0 -1\n"),
                       doctest::Contains(">= 0"), std::runtime_error);
}
