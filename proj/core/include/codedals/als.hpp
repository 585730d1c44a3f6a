#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "codedals/cluster.hpp"
#include "codedals/epc.hpp"
#include "codedals/matrix.hpp"

namespace codedals::als {

/// ColumnSide iterates V through D = R^T R (m >= n); RowSide iterates U
/// through D = R R^T (m < n).
enum class Orientation { ColumnSide, RowSide };

Orientation orientation_for(const Matrix& R) noexcept;
const char* to_string(Orientation o) noexcept;

struct Problem {
  Matrix R;
  std::size_t d = 1;
  std::size_t max_iterations = 10;
  /// Stop once ||B(t+1) - B(t)|| / ||B(t)|| < tol.
  double tol = 1e-6;
  std::uint64_t seed = 0;
  /// Record ||R - UV^T||^2 after every iteration (extra master-side work).
  bool track_loss = false;
  /// Starting factor B(0), l x d. Drawn from `seed` when empty.
  std::optional<Matrix> initial;

  void validate() const;
};

struct IterState {
  std::size_t t = 0;
  Matrix B;
  Matrix E;
  Matrix F;
  Matrix G;
  /// Simulated seconds spent in this iteration's rounds.
  double elapsed = 0.0;
};

struct FactorizationResult {
  Matrix U;
  Matrix V;
  std::size_t iterations_run = 0;
  /// ||R - UV^T||^2 per recorded point; the last entry is the final loss.
  std::vector<double> loss_history;
  /// Relative change of the iterated factor, one entry per iteration.
  std::vector<double> change_history;
  double simulated_time = 0.0;

  double final_loss() const { return loss_history.back(); }
};

/// i.i.d. standard normal rows x d matrix from `seed`; verified to have full
/// column rank.
Matrix initial_factor(std::size_t rows, std::size_t d, std::uint64_t seed);

/// U = R V (V^T V)^{-1}
Matrix update_u(const Matrix& R, const Matrix& V, std::size_t iteration = 0);
/// V = R^T U (U^T U)^{-1}
Matrix update_v(const Matrix& R, const Matrix& U, std::size_t iteration = 0);

/// ||R - U V^T||^2
double loss(const Matrix& R, const Matrix& U, const Matrix& V);

/// Classical alternating updates. The returned pair is (U fitted to the
/// final V, final V) for ColumnSide, mirrored for RowSide, so it matches the
/// coded pipeline's post-computation.
FactorizationResult als_baseline(const Problem& problem);

/// D B (B^T D B)^{-1} B^T B, evaluated centrally.
Matrix direct_update(const Matrix& B, const Matrix& D, std::size_t iteration = 0);

/// R^T R or R R^T by direct multiplication.
Matrix gram_target(const Matrix& R, Orientation orientation);

/// Pre-computation code parameters: p = h, q = 1, and r the largest divisor
/// of the summed dimension not exceeding h.
epc::EpcParams precompute_params(const Matrix& R, Orientation orientation, std::size_t h);

/// D decoded from a coded A^T A round over the cluster, then symmetrised.
Matrix precompute_D(const Matrix& R, Orientation orientation, cluster::Cluster& cluster,
                    const epc::EpcParams& params);

/// Worker-side storage D~(x_w), encoded once per D.
struct CodedStorage {
  std::size_t h = 1;
  std::size_t l = 0;
  std::vector<Matrix> shards;
};

CodedStorage encode_storage(const Matrix& D, std::size_t h, const epc::EvalPoints& points);

/// One coded round of the iterative phase; B(t+1) comes back in `B`.
IterState run_iteration(const IterState& state, const CodedStorage& storage,
                        cluster::Cluster& cluster);
IterState run_iteration(const IterState& state, const Matrix& D, cluster::Cluster& cluster,
                        std::size_t h);

/// Coded H = B (B^T B)^{-1}, then the other factor as a general EPC product
/// against R. `params` are the pre-computation parameters.
FactorizationResult post_compute(const Matrix& B_final, const Matrix& R,
                                 Orientation orientation, cluster::Cluster& cluster,
                                 std::size_t h, const epc::EpcParams& params);

/// Master-side equivalent of post_compute.
FactorizationResult post_compute_central(const Matrix& B_final, const Matrix& R,
                                         Orientation orientation);

/// Throws FeasibilityError unless every round tolerates the cluster's
/// per-round straggler count and the partitions divide evenly.
void check_feasibility(const Problem& problem, const cluster::Cluster& cluster, std::size_t h);

FactorizationResult factorize_coded(const Problem& problem, cluster::Cluster& cluster,
                                    std::size_t h);

/// Centralised direct-update pipeline: the oracle for factorize_coded.
FactorizationResult factorize_central(const Problem& problem);

}  // namespace codedals::als
