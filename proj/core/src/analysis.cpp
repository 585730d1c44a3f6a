#include "codedals/analysis.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "codedals/error.hpp"
#include "codedals/normal.hpp"

namespace codedals::analysis {

namespace {

constexpr double kAlpha = 0.375;
constexpr double kRequestBound = 8.5975;

std::size_t threshold_for(std::size_t h) { return h * h + h - 1; }

void require_feasible(double h, std::size_t W, std::size_t s) {
  if (!(h >= 1.0)) throw FeasibilityError(fmt::format("h={} must be at least 1", h));
  if (s >= W) throw FeasibilityError(fmt::format("s={} leaves no workers out of W={}", s, W));
  const double k = h * h + h - 1.0;
  if (k + static_cast<double>(s) > static_cast<double>(W)) {
    throw FeasibilityError(
        fmt::format("h={} needs {} responders but only W-s={} respond", h, k, W - s));
  }
}

double quantile_arg(double h, std::size_t W, std::size_t s) {
  return (h * h + h - 1.0 - kAlpha) / (static_cast<double>(W - s) - 2.0 * kAlpha + 1.0);
}

}  // namespace

double redundancy(std::size_t W, std::size_t h) {
  if (h == 0 || W < h * h) {
    throw FeasibilityError(fmt::format("redundancy needs W >= h^2, got W={}, h={}", W, h));
  }
  return static_cast<double>(W) / static_cast<double>(h * h);
}

double threshold_from_redundancy(double W, double mu) {
  if (!(mu > 1.0)) throw ArgumentError(fmt::format("redundancy must exceed 1, got {}", mu));
  if (!(W > 0.0)) throw ArgumentError(fmt::format("W must be positive, got {}", W));
  const double ratio = W / mu;
  return ratio + std::sqrt(ratio) - 1.0;
}

std::size_t optimal_partitions(std::size_t W, std::size_t s) {
  if (W < s + 1) {
    throw FeasibilityError(fmt::format("no partition count works with W={}, s={}", W, s));
  }
  std::size_t h = 1;
  while (threshold_for(h + 1) + s <= W) ++h;
  return h;
}

std::size_t optimal_partitions_formula(std::size_t W, std::size_t s) {
  if (W < s + 1) {
    throw FeasibilityError(fmt::format("no partition count works with W={}, s={}", W, s));
  }
  return static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(W - s) + 0.75)));
}

double ComplexityEstimates::decoding_h(std::size_t h, double n, double d) const {
  const double hd = static_cast<double>(h);
  return n * d * (hd * hd + hd);
}

ComplexityEstimates complexity_estimates(double W, double mu, double m, double n, double d) {
  if (!(W > 0 && mu > 0 && m > 0 && n > 0 && d > 0)) {
    throw ArgumentError("complexity estimates need positive arguments");
  }
  return ComplexityEstimates{
      std::min(m * n * n, n * m * m),
      n * n * d * mu / W,
      n * d * std::sqrt(W * mu),
      n * d * (W / mu + std::sqrt(W / mu)),
  };
}

double theta_objective(double h, std::size_t W, std::size_t s, double n, double d,
                       const cluster::WorkerProfile& profile) {
  if (s >= W) throw FeasibilityError(fmt::format("s={} leaves no workers out of W={}", s, W));
  const double z = quantile_arg(h, W, s);
  const double theta = n * n * d * profile.mu_u / (h * h) +
                       stats::normal_quantile(z) * std::sqrt(d) * n * profile.sigma_u / h;
  return theta / (2.0 * n * std::sqrt(d) * profile.sigma_u);
}

double theta2_derivative(double h, std::size_t W, std::size_t s, double n, double d,
                         const cluster::WorkerProfile& profile) {
  require_feasible(h, W, s);
  if (profile.sigma_u == 0.0) return -std::numeric_limits<double>::infinity();
  const double spread = static_cast<double>(W - s) - 2.0 * kAlpha + 1.0;
  const double q = stats::normal_quantile(quantile_arg(h, W, s));
  return -profile.mu_u * n * std::sqrt(d) / (profile.sigma_u * h * h * h) +
         (2.0 * h + 1.0) / (2.0 * h * spread * stats::normal_pdf(q)) - q / (2.0 * h * h);
}

bool request_condition(std::size_t h, double n, double d, const cluster::WorkerProfile& profile) {
  if (h == 0) throw ArgumentError("h must be positive");
  if (profile.sigma_u == 0.0) return true;
  const double hd = static_cast<double>(h);
  return profile.mu_u * n * std::sqrt(d) / (hd * hd * hd * profile.sigma_u) >= kRequestBound;
}

std::vector<DesignPoint> design_table(std::size_t W, std::size_t s) {
  if (W == 0) throw ArgumentError("W must be positive");
  const std::size_t top = (s < W ? optimal_partitions(W, s) : 0) + 1;
  std::vector<DesignPoint> rows;
  for (std::size_t h = 1; h <= top; ++h) {
    DesignPoint p;
    p.W = W;
    p.s = s;
    p.h = h;
    p.K = threshold_for(h);
    p.mu = static_cast<double>(W) / static_cast<double>(h * h);
    p.feasible = p.K + s <= W;
    rows.push_back(p);
  }
  return rows;
}

}  // namespace codedals::analysis
