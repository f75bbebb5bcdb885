#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "dptails/empirical.hpp"
#include "helpers.hpp"

using dptails::ConfigError;
using dptails::DataError;
using dptails::dual_generalized_inverse;
using dptails::EmpiricalCDF;
using dptails::jitter;
using dptails::ks_distance;
using dptails::QuantileTable;
using dptails::SampleSet;

namespace {

// Independent oracle for the ECDF: count values <= t by linear scan.
double brute_ecdf(const std::vector<double>& values, double t) {
  std::size_t count = 0;
  for (double v : values) {
    if (v <= t) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(values.size());
}

// Independent oracle for the quantile: smallest j with j/n >= t, linear scan.
double brute_quantile(const std::vector<double>& sorted, double t) {
  if (t == 0.0) return sorted.front();
  const auto n = sorted.size();
  for (std::size_t j = 1; j <= n; ++j) {
    if (static_cast<double>(j) / static_cast<double>(n) >= t) {
      return sorted[j - 1];
    }
  }
  return sorted.back();
}

}  // namespace

TEST_CASE("sample set construction") {
  SampleSet s({3.0, 1.0, 2.0});
  REQUIRE(s.values() == std::vector<double>{1.0, 2.0, 3.0});

  CHECK_THROWS_AS(SampleSet({}), DataError);
  CHECK_THROWS_AS(SampleSet({1.0, std::nan("")}), DataError);
  CHECK_THROWS_AS(SampleSet({std::numeric_limits<double>::infinity()}),
                  DataError);
}

TEST_CASE("ecdf evaluation") {
  EmpiricalCDF f{SampleSet({1.0, 2.0, 3.0})};
  CHECK(f(2.0) == 2.0 / 3.0);
  CHECK(f(0.5) == 0.0);
  CHECK(f(3.0) == 1.0);

  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 30; ++rep) {
    auto values = testutil::random_values(rng, 1 + rep % 40);
    EmpiricalCDF cdf{SampleSet(values)};
    std::uniform_real_distribution<double> t_dist(-3.0, 3.0);
    for (int k = 0; k < 10; ++k) {
      const double t = t_dist(rng);
      CHECK(cdf(t) == brute_ecdf(values, t));
    }
  }
}

TEST_CASE("quantile evaluation") {
  QuantileTable q{SampleSet({1.0, 2.0, 3.0})};
  CHECK(q(0.5) == 2.0);  // ceil(3 * 0.5) = 2nd order statistic
  CHECK(q(0.0) == 1.0);
  CHECK(q(1.0) == 3.0);
  CHECK_THROWS_AS(q(-0.1), ConfigError);
  CHECK_THROWS_AS(q(1.1), ConfigError);

  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 30; ++rep) {
    auto values = testutil::random_values(rng, 1 + rep % 50);
    QuantileTable table{SampleSet(values)};
    const auto& sorted = table.samples().values();
    std::uniform_real_distribution<double> t_dist(0.0, 1.0);
    for (int k = 0; k < 10; ++k) {
      const double t = t_dist(rng);
      CHECK(table(t) == brute_quantile(sorted, t));
    }
    // Exact on the level grid {i/n}.
    const auto n = sorted.size();
    for (std::size_t i = 1; i <= n; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(n);
      CHECK(table(t) == sorted[i - 1]);
    }
  }
}

TEST_CASE("quantile and ecdf round trips") {
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 25; ++rep) {
    auto values = testutil::random_values(rng, 2 + rep % 30);
    SampleSet samples(values);
    EmpiricalCDF f(samples);
    QuantileTable q(samples);
    const auto n = samples.size();
    for (std::size_t i = 1; i <= n; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(n);
      CHECK(f(q(t)) >= t);
      CHECK(q(f(q(t))) == q(t));
    }
    std::uniform_real_distribution<double> t_dist(
        std::numeric_limits<double>::min(), 1.0);
    for (int k = 0; k < 10; ++k) {
      const double t = t_dist(rng);
      CHECK(f(q(t)) >= t);
      CHECK(q(f(q(t))) == q(t));
    }
  }
}

TEST_CASE("dual generalized inverse") {
  auto identity = [](double x) { return x; };
  CHECK(dual_generalized_inverse(identity, 0.3) == 0.3);

  auto step = [](double x) { return x <= 0.5 ? 0.0 : 1.0; };
  CHECK(dual_generalized_inverse(step, 0.5) == 0.5);

  // Empty level set -> left endpoint; full level set -> right endpoint.
  CHECK(dual_generalized_inverse(identity, -1.0) == 0.0);
  CHECK(dual_generalized_inverse(identity, 2.0) == 1.0);

  SECTION("locates the branch point of an adjusted quantile with slack") {
    const double alpha = 0.4;
    const double xi = 1e-5;
    const double p = 0.37;
    auto adjusted = [&](double x) {
      if (x <= p) return std::min(alpha, x);
      return std::max(alpha + xi, 0.5 * x + 0.5 * (x + 1.0));
    };
    CHECK(dual_generalized_inverse(adjusted, alpha) == p);
  }

  SECTION("recovers the inverse of strictly increasing continuous maps") {
    auto affine = [](double x) { return 2.0 * x + 1.0; };
    for (double y : {1.1, 1.5, 2.0, 2.5, 2.9}) {
      CHECK(dual_generalized_inverse(affine, y) ==
            Catch::Approx((y - 1.0) / 2.0).margin(1e-12));
    }
  }

  SECTION("nondecreasing in y") {
    auto q = [](double x) { return x * x; };
    double prev = -1.0;
    for (double y = -0.2; y <= 1.2; y += 0.04) {
      const double x = dual_generalized_inverse(q, y);
      CHECK(x >= prev);
      prev = x;
    }
  }
}

TEST_CASE("jitter") {
  SampleSet base({1.0, 1.0, 2.0, 5.0});

  SECTION("stays within the noise width elementwise") {
    std::mt19937_64 rng(3);
    const double sigma = 0.25;
    SampleSet out = jitter(base, sigma, rng);
    REQUIRE(out.size() == base.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK(std::abs(out.values()[i] - base.values()[i]) <= sigma);
    }
  }

  SECTION("deterministic under a fixed seed") {
    std::mt19937_64 a(99), b(99);
    CHECK(jitter(base, 1e-6, a).values() == jitter(base, 1e-6, b).values());
  }

  SECTION("rejects nonpositive width") {
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(jitter(base, 0.0, rng), ConfigError);
    CHECK_THROWS_AS(jitter(base, -1.0, rng), ConfigError);
  }
}

TEST_CASE("ks distance") {
  CHECK(ks_distance(SampleSet({1.0, 2.0}), SampleSet({1.0, 2.0})) == 0.0);
  // Step CDFs at {0, 1, 2}: F_a = {.5, 1, 1}, F_b = {.5, .5, 1}.
  CHECK(ks_distance(SampleSet({0.0, 1.0}), SampleSet({0.0, 2.0})) == 0.5);
  CHECK(ks_distance(SampleSet({0.0}), SampleSet({1.0})) == 1.0);

  SECTION("symmetry and triangle inequality") {
    std::mt19937_64 rng(17);
    for (int rep = 0; rep < 20; ++rep) {
      SampleSet a(testutil::random_values(rng, 3 + rep % 10));
      SampleSet b(testutil::random_values(rng, 2 + rep % 12));
      SampleSet c(testutil::random_values(rng, 4 + rep % 8));
      const double ab = ks_distance(a, b);
      CHECK(ab == ks_distance(b, a));
      CHECK(ab <= ks_distance(a, c) + ks_distance(c, b) + 1e-15);
      CHECK(ab >= 0.0);
      CHECK(ab <= 1.0);
    }
  }

  SECTION("zero iff the step CDFs agree at union points") {
    SampleSet a({1.0, 2.0});
    SampleSet b({1.0, 2.0, 2.0});
    CHECK(ks_distance(a, b) > 0.0);  // differ at t = 1
  }
}
