#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "codedals/als.hpp"
#include "codedals/cluster.hpp"
#include "codedals/error.hpp"
#include "codedals/matrix.hpp"
#include "config.hpp"

namespace codedals::harness {

struct Synthetic {
  Matrix R;
  Matrix U;  // planted m x d factor
  Matrix V;  // planted n x d factor
};

/// R = U V^T + N with U, V standard normal and N ~ N(0, noise_std^2), all
/// drawn from one stream seeded by `seed`.
Synthetic generate_synthetic(std::size_t m, std::size_t n, std::size_t d, double noise_std,
                             std::uint64_t seed);

struct SweepCell {
  std::size_t h = 0;
  std::size_t k = 0;  // responding workers, W - s
  bool feasible = false;
  double mean_time = 0.0;
  double est_time = 0.0;
};

/// Cells sorted by (k, h).
struct SweepTable {
  std::vector<std::size_t> hs;
  std::vector<std::size_t> ks;
  std::vector<SweepCell> cells;

  const SweepCell& at(std::size_t h, std::size_t k) const;
};

/// Mean simulated stage-1 time per cell over config.rounds rounds, with W
/// fixed and the last W - k workers straggling. Every cell reuses
/// config.seed, so cells share their random draws.
SweepTable run_sweep(const ExperimentConfig& config);

/// h,k,mean_time,est_time,feasible; infeasible cells carry "-" times.
void write_sweep_csv(std::ostream& out, const SweepTable& table);
/// Rows k, columns h, "-" where h^2 + h - 1 > k.
std::string render_sweep_table(const SweepTable& table);

struct FactorizationReport {
  ExperimentConfig config;
  std::size_t h = 0;
  als::Orientation orientation = als::Orientation::ColumnSide;
  std::size_t padded_rows = 0;
  std::size_t padded_cols = 0;
  als::FactorizationResult coded;
  als::FactorizationResult baseline;
  std::vector<cluster::RoundTrace> traces;
  /// |coded - baseline| / max(baseline, 1e-12 ||R||^2) on the final loss.
  double relative_difference = 0.0;

  static constexpr double kAgreementTol = 1e-6;
  bool agrees() const { return relative_difference <= kAgreementTol; }
};

/// Runs the classical baseline and the coded pipeline from the same starting
/// factor. R is zero-padded so that h divides the iterated dimension; the
/// padding is stripped from the returned factors.
FactorizationReport run_factorization(const ExperimentConfig& config, const Matrix& R);
/// Same, on generate_synthetic(config).
FactorizationReport run_factorization(const ExperimentConfig& config);

/// Config echo as "# key=value" lines, then the results.
std::string render_report(const FactorizationReport& report);
/// iteration,value with iterations counted from 1.
void write_loss_csv(std::ostream& out, std::span<const double> losses);

/// 2 config, 3 feasibility, 4 numerical decode, 5 degeneracy.
int exit_code_for(ErrorCategory category) noexcept;

}  // namespace codedals::harness
