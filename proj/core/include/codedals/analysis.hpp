#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "codedals/cluster.hpp"

namespace codedals::analysis {

struct DesignPoint {
  std::size_t W = 0;
  std::size_t s = 0;
  std::size_t h = 0;
  double mu = 0.0;
  std::size_t K = 0;
  bool feasible = false;
};

/// Coding redundancy W / h^2. Throws FeasibilityError when W < h^2.
double redundancy(std::size_t W, std::size_t h);

/// K = W/mu + sqrt(W/mu) - 1. Throws ArgumentError unless mu > 1.
double threshold_from_redundancy(double W, double mu);

/// Largest h >= 1 with h^2 + h - 1 + s <= W, found by search.
/// Throws FeasibilityError when W < s + 1.
std::size_t optimal_partitions(std::size_t W, std::size_t s);

/// floor(sqrt(W + 3/4 - s)). Disagrees with optimal_partitions whenever
/// W - s + 3/4 lands in [k^2, k^2 + k - 1/4) for some k, e.g. W=20, s=2.
std::size_t optimal_partitions_formula(std::size_t W, std::size_t s);

/// Leading-order operation counts with unit constants.
struct ComplexityEstimates {
  double precompute;      // min(m n^2, n m^2)
  double per_worker;      // n^2 d mu / W
  double encoding;        // n d sqrt(W mu)
  double decoding;        // n d (W/mu + sqrt(W/mu))
  double decoding_h(std::size_t h, double n, double d) const;  // n d (h^2 + h)
};

ComplexityEstimates complexity_estimates(double W, double mu, double m, double n, double d);

/// theta(h) / (2 n sqrt(d) sigma_u), with theta(h) the per-iteration
/// estimate n^2 d mu_u / h^2 + Phi^{-1}(z) sqrt(d) n sigma_u / h and
/// z = (h^2 + h - 1 - a) / (W - s - 2a + 1). Defined for real h.
double theta_objective(double h, std::size_t W, std::size_t s, double n, double d,
                       const cluster::WorkerProfile& profile);

/// d/dh of theta_objective. Throws FeasibilityError at infeasible integer h.
double theta2_derivative(double h, std::size_t W, std::size_t s, double n, double d,
                         const cluster::WorkerProfile& profile);

/// mu_u n sqrt(d) / (h^3 sigma_u) >= 8.5975.
bool request_condition(std::size_t h, double n, double d, const cluster::WorkerProfile& profile);

/// One row per h from 1 up to max(optimal h, 1) + 1, marking feasibility.
std::vector<DesignPoint> design_table(std::size_t W, std::size_t s);

}  // namespace codedals::analysis
