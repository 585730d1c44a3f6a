#include <doctest.h>

#include <cmath>

#include "codedals/analysis.hpp"
#include "codedals/cluster.hpp"
#include "codedals/error.hpp"
#include "support/oracles.hpp"

using namespace codedals;
using namespace codedals::analysis;

namespace {

// Per-iteration estimate over the normalisation, with the quantile taken by
// bisection so no library normal code is involved.
double oracle_theta(double h, double W, double s, double n, double d,
                    const cluster::WorkerProfile& p) {
  const double a = 0.375;
  const double z = (h * h + h - 1.0 - a) / (W - s - 2.0 * a + 1.0);
  const double theta = n * n * d * p.mu_u / (h * h) +
                       oracle::bisect_quantile(z) * std::sqrt(d) * n * p.sigma_u / h;
  return theta / (2.0 * n * std::sqrt(d) * p.sigma_u);
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("redundancy") {
  CHECK(redundancy(4, 2) == 1.0);
  CHECK(redundancy(8, 2) == 2.0);
  CHECK(redundancy(50, 5) == 2.0);
  CHECK(redundancy(1, 1) == 1.0);
  CHECK_THROWS_AS(redundancy(3, 2), FeasibilityError);
  CHECK_THROWS_AS(redundancy(48, 7), FeasibilityError);
}

TEST_CASE("threshold from redundancy") {
  CHECK(threshold_from_redundancy(8, 2) == 5.0);
  CHECK(threshold_from_redundancy(18, 2) == 11.0);
  CHECK(threshold_from_redundancy(9, 9) == 1.0);
  CHECK_THROWS_AS(threshold_from_redundancy(8, 1.0), ArgumentError);
  CHECK_THROWS_AS(threshold_from_redundancy(8, 0.5), ArgumentError);
  CHECK(threshold_from_redundancy(10, 2) ==
        doctest::Approx(5.0 + std::sqrt(5.0) - 1.0).epsilon(1e-15));
}

TEST_CASE("threshold agrees with h^2 + h - 1 on perfect squares") {
  for (std::size_t h = 1; h <= 9; ++h) {
    for (int mu = 2; mu <= 5; ++mu) {
      const double W = static_cast<double>(mu) * static_cast<double>(h * h);
      CHECK(threshold_from_redundancy(W, mu) == static_cast<double>(h * h + h - 1));
      CHECK(redundancy(static_cast<std::size_t>(W), h) == static_cast<double>(mu));
    }
  }
}

TEST_CASE("optimal partitions: examples") {
  CHECK(optimal_partitions(50, 5) == 6);
  CHECK(optimal_partitions(10, 2) == 2);
  CHECK(optimal_partitions(20, 0) == 4);
  CHECK(optimal_partitions(1, 0) == 1);
  CHECK_THROWS_AS(optimal_partitions(5, 5), FeasibilityError);
  CHECK_THROWS_AS(optimal_partitions(0, 0), FeasibilityError);
}

TEST_CASE("optimal partitions equals exhaustive search") {
  for (std::size_t W = 1; W <= 200; ++W) {
    for (std::size_t s = 0; s < W; ++s) {
      const std::size_t h = optimal_partitions(W, s);
      REQUIRE(h == oracle::brute_optimal_h(W, s));
      CHECK(h * h + h - 1 + s <= W);
    }
  }
}

TEST_CASE("floor formula and exhaustive search") {
  // The closed form of the exhaustive search is floor(sqrt(W - s + 5/4) - 1/2);
  // the 3/4 variant overshoots on part of the range.
  std::size_t mismatches = 0;
  for (std::size_t W = 1; W <= 200; ++W) {
    for (std::size_t s = 0; s < W; ++s) {
      const double x = static_cast<double>(W - s);
      const auto exact = static_cast<std::size_t>(std::floor(std::sqrt(x + 1.25) - 0.5));
      CHECK(exact == oracle::brute_optimal_h(W, s));
      CHECK(optimal_partitions_formula(W, s) ==
            static_cast<std::size_t>(std::floor(std::sqrt(x + 0.75))));
      if (optimal_partitions_formula(W, s) != optimal_partitions(W, s)) ++mismatches;
      CHECK(optimal_partitions_formula(W, s) >= optimal_partitions(W, s));
    }
  }
  CHECK(optimal_partitions_formula(20, 2) == 4);
  CHECK(optimal_partitions(20, 2) == 3);
  CHECK(mismatches > 0);
}

TEST_CASE("complexity estimates") {
  const auto c = complexity_estimates(8, 2, 24, 16, 2);
  CHECK(c.precompute == 16.0 * 16.0 * 24.0);
  CHECK(c.per_worker == 16.0 * 16.0 * 2.0 * 2.0 / 8.0);
  CHECK(c.encoding == doctest::Approx(16.0 * 2.0 * 4.0));
  CHECK(c.decoding == doctest::Approx(16.0 * 2.0 * (4.0 + 2.0)));
  CHECK(c.decoding_h(2, 16, 2) == 16.0 * 2.0 * 6.0);
  const auto wide = complexity_estimates(8, 2, 10, 30, 2);
  CHECK(wide.precompute == 30.0 * 10.0 * 10.0);
  CHECK_THROWS_AS(complexity_estimates(0, 2, 1, 1, 1), ArgumentError);
  CHECK_THROWS_AS(complexity_estimates(8, 2, 1, -1, 1), ArgumentError);
}

TEST_CASE("per-worker estimate matches the simulated E-stage size at W = mu h^2") {
  for (std::size_t h = 1; h <= 5; ++h) {
    const std::size_t n = 12 * h;
    const std::size_t d = 3;
    const double mu = 2.0;
    const double W = mu * static_cast<double>(h * h);
    const auto c = complexity_estimates(W, mu, 2.0 * n, n, d);
    CHECK(c.per_worker == doctest::Approx(static_cast<double>(cluster::stage_elements(1, n, d, h))));
    CHECK(c.decoding == doctest::Approx(c.decoding_h(h, n, d)));
  }
}

TEST_CASE("theta objective matches its definition") {
  const cluster::WorkerProfile p{1e-7, 2e-8};
  for (double h : {1.0, 2.0, 2.5, 3.0, 4.0, 6.0}) {
    CHECK(theta_objective(h, 50, 5, 160, 8, p) ==
          doctest::Approx(oracle_theta(h, 50, 5, 160, 8, p)).epsilon(1e-7));
  }
}

TEST_CASE("theta derivative matches central differences") {
  const cluster::WorkerProfile p{1e-7, 2e-8};
  for (double h : {1.5, 2.0, 3.0, 4.5, 6.0}) {
    const double step = 1e-5;
    const double fd = (oracle_theta(h + step, 50, 5, 160, 8, p) -
                       oracle_theta(h - step, 50, 5, 160, 8, p)) /
                      (2.0 * step);
    CHECK(theta2_derivative(h, 50, 5, 160, 8, p) == doctest::Approx(fd).epsilon(1e-4));
  }
}

TEST_CASE("theta derivative is negative where the request condition holds") {
  const cluster::WorkerProfile base{1e-7, 2e-8};
  for (std::size_t W : {20u, 30u, 50u, 80u}) {
    for (std::size_t s : {0u, 2u, 5u}) {
      for (double scale : {0.25, 0.5, 1.0, 2.0}) {
        const cluster::WorkerProfile p{base.mu_u, base.sigma_u * scale};
        for (std::size_t h = 1; h <= optimal_partitions(W, s); ++h) {
          if (!request_condition(h, 160, 8, p)) continue;
          CHECK(theta2_derivative(static_cast<double>(h), W, s, 160, 8, p) < 0.0);
        }
      }
    }
  }
}

TEST_CASE("theta derivative errors and degenerate profile") {
  const cluster::WorkerProfile p{1e-7, 2e-8};
  CHECK_THROWS_AS(theta2_derivative(7.0, 50, 5, 160, 8, p), FeasibilityError);
  const cluster::WorkerProfile flat{1e-7, 0.0};
  CHECK(std::isinf(theta2_derivative(2.0, 50, 5, 160, 8, flat)));
}

TEST_CASE("request condition") {
  const cluster::WorkerProfile p{1e-7, 2e-8};
  // 5 * 160 * sqrt(8) / h^3 against 8.5975.
  CHECK(request_condition(6, 160, 8, p));
  CHECK_FALSE(request_condition(7, 160, 8, p));
  CHECK(request_condition(1, 1, 1, cluster::WorkerProfile{8.6, 1.0}));
  CHECK_FALSE(request_condition(1, 1, 1, cluster::WorkerProfile{8.59, 1.0}));
}

TEST_CASE("design table") {
  const auto rows = design_table(50, 5);
  REQUIRE(rows.size() == 7);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    CHECK(r.h == i + 1);
    CHECK(r.W == 50);
    CHECK(r.s == 5);
    CHECK(r.K == r.h * r.h + r.h - 1);
    CHECK(r.mu == doctest::Approx(50.0 / static_cast<double>(r.h * r.h)));
    CHECK(r.feasible == (r.s + r.K <= r.W));
  }
  CHECK(rows[5].feasible);
  CHECK_FALSE(rows[6].feasible);
}

}
