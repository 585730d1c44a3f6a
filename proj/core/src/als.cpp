#include "codedals/als.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "codedals/error.hpp"

namespace codedals::als {

namespace {

Matrix inverse_or_degenerate(const Matrix& m, std::size_t iteration, const char* what) {
  try {
    return invert(m);
  } catch (const SingularityError& e) {
    throw DegeneracyError(iteration, fmt::format("{} is singular at pivot {}", what, e.pivot()));
  }
}

/// The matrix whose columns are the iterated factor's rows: R for
/// ColumnSide, R^T for RowSide.
Matrix oriented(const Matrix& R, Orientation o) {
  return o == Orientation::ColumnSide ? R : transpose(R);
}

Matrix starting_factor(const Problem& problem, std::size_t l) {
  if (problem.initial) {
    const Matrix& b = *problem.initial;
    if (b.rows() != l || b.cols() != problem.d) {
      throw ShapeError(fmt::format("initial factor is {}x{}, expected {}x{}", b.rows(), b.cols(),
                                   l, problem.d));
    }
    inverse_or_degenerate(matmul_tn(b, b), 0, "initial factor Gram matrix");
    return b;
  }
  return initial_factor(l, problem.d, problem.seed);
}

double relative_change(const Matrix& next, const Matrix& prev) {
  return relative_error(next, prev);
}

FactorizationResult assign_factors(Orientation o, Matrix iterated, Matrix other) {
  if (o == Orientation::ColumnSide) {
    return FactorizationResult{std::move(other), std::move(iterated), 0, {}, {}, 0.0};
  }
  return FactorizationResult{std::move(iterated), std::move(other), 0, {}, {}, 0.0};
}

}  // namespace

Orientation orientation_for(const Matrix& R) noexcept {
  return R.rows() >= R.cols() ? Orientation::ColumnSide : Orientation::RowSide;
}

const char* to_string(Orientation o) noexcept {
  return o == Orientation::ColumnSide ? "column-side" : "row-side";
}

void Problem::validate() const {
  if (d == 0) throw ConfigError("latent dimension d must be positive");
  if (d > std::min(R.rows(), R.cols())) {
    throw ConfigError(fmt::format("d={} exceeds min(m, n)={}", d, std::min(R.rows(), R.cols())));
  }
  if (max_iterations == 0) throw ConfigError("iteration count T must be positive");
  if (!(tol > 0.0)) throw ConfigError("tolerance must be positive");
}

Matrix initial_factor(std::size_t rows, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> data(rows * d);
  for (double& v : data) v = dist(rng);
  Matrix b(rows, d, std::move(data));
  inverse_or_degenerate(matmul_tn(b, b), 0, "initial factor Gram matrix");
  return b;
}

Matrix update_u(const Matrix& R, const Matrix& V, std::size_t iteration) {
  return matmul(matmul(R, V), inverse_or_degenerate(matmul_tn(V, V), iteration, "V^T V"));
}

Matrix update_v(const Matrix& R, const Matrix& U, std::size_t iteration) {
  return matmul(matmul_tn(R, U), inverse_or_degenerate(matmul_tn(U, U), iteration, "U^T U"));
}

double loss(const Matrix& R, const Matrix& U, const Matrix& V) {
  if (U.rows() != R.rows() || V.rows() != R.cols() || U.cols() != V.cols()) {
    throw ShapeError(fmt::format("loss: R {}x{}, U {}x{}, V {}x{}", R.rows(), R.cols(), U.rows(),
                                 U.cols(), V.rows(), V.cols()));
  }
  return frobenius_sq(R - matmul(U, transpose(V)));
}

FactorizationResult als_baseline(const Problem& problem) {
  problem.validate();
  const Orientation o = orientation_for(problem.R);
  const Matrix Rb = oriented(problem.R, o);
  Matrix B = starting_factor(problem, Rb.cols());

  std::vector<double> losses;
  std::vector<double> changes;
  std::size_t t = 0;
  while (t < problem.max_iterations) {
    const Matrix A = update_u(Rb, B, t);
    Matrix next = update_v(Rb, A, t);
    const double change = relative_change(next, B);
    B = std::move(next);
    ++t;
    changes.push_back(change);
    losses.push_back(loss(Rb, update_u(Rb, B, t), B));
    if (change < problem.tol) break;
  }
  Matrix A = update_u(Rb, B, t);
  auto result = assign_factors(o, std::move(B), std::move(A));
  result.iterations_run = t;
  result.loss_history = std::move(losses);
  result.change_history = std::move(changes);
  return result;
}

Matrix direct_update(const Matrix& B, const Matrix& D, std::size_t iteration) {
  const Matrix E = matmul(D, B);
  const Matrix F = matmul_tn(B, B);
  const Matrix G = matmul(inverse_or_degenerate(matmul_tn(B, E), iteration, "B^T D B"), F);
  return matmul(E, G);
}

Matrix gram_target(const Matrix& R, Orientation orientation) {
  return orientation == Orientation::ColumnSide ? matmul_tn(R, R) : matmul(R, transpose(R));
}

epc::EpcParams precompute_params(const Matrix& R, Orientation orientation, std::size_t h) {
  if (h == 0) throw PartitionError("h must be positive");
  const std::size_t summed = orientation == Orientation::ColumnSide ? R.rows() : R.cols();
  const std::size_t l = orientation == Orientation::ColumnSide ? R.cols() : R.rows();
  if (l % h != 0) {
    throw PartitionError(fmt::format("l={} is not divisible by h={}", l, h));
  }
  std::size_t r = std::min(h, summed);
  while (summed % r != 0) --r;
  return epc::EpcParams{h, 1, r};
}

Matrix precompute_D(const Matrix& R, Orientation orientation, cluster::Cluster& cluster,
                    const epc::EpcParams& params) {
  const Matrix A = oriented(R, orientation);
  if (A.rows() % params.r != 0 || A.cols() % params.p != 0 || params.q != 1) {
    throw PartitionError(fmt::format("cannot partition {}x{} with p={}, q={}, r={}", A.rows(),
                                     A.cols(), params.p, params.q, params.r));
  }
  const std::uint64_t elements = static_cast<std::uint64_t>(A.cols() / params.p) *
                                 (A.rows() / params.r) * A.cols();
  auto round = cluster.run_protocol_round(
      "precompute", elements, params.recovery_threshold(),
      [&](std::size_t, double x) {
        const auto [a, b] = epc::epc_encode_general(A, A, params, x);
        return matmul_tn(a, b);
      },
      [&](std::span<const epc::CodedShard> shards) {
        return epc::decode_general(shards, params);
      });
  Matrix D = std::move(round.value);
  const double skew = asymmetry(D);
  // Decoding error is what breaks symmetry here, so allow as much of it as
  // the decoder accepts.
  const double tol = epc::DecodeOptions{}.max_error_bound * std::max(1.0, max_abs(D));
  if (skew > tol) {
    throw CodecError(fmt::format("decoded D asymmetric by {:.3e}", skew));
  }
  return 0.5 * (D + transpose(D));
}

CodedStorage encode_storage(const Matrix& D, std::size_t h, const epc::EvalPoints& points) {
  return CodedStorage{h, D.rows(), epc::encode_D(D, h, points)};
}

IterState run_iteration(const IterState& state, const CodedStorage& storage,
                        cluster::Cluster& cluster) {
  const std::size_t h = storage.h;
  const std::size_t l = storage.l;
  const Matrix& B = state.B;
  const std::size_t d = B.cols();
  if (B.rows() != l) {
    throw ShapeError(fmt::format("factor has {} rows, storage expects {}", B.rows(), l));
  }
  if (storage.shards.size() != cluster.workers()) {
    throw ArgumentError("coded storage does not match the cluster size");
  }

  const auto inner = [h](std::span<const epc::CodedShard> s) { return epc::decode_inner(s, h); };

  // Steps 1-2: D~(x_w)^T f_R(B, x_w) and f_L(B, x_w)^T f_R(B, x_w).
  auto e_round = cluster.run_protocol_round(
      "E", cluster::stage_elements(1, l, d, h), epc::recovery_threshold(epc::TaskKind::Product, h),
      [&](std::size_t w, double x) { return matmul_tn(storage.shards[w], epc::encode_fR(B, h, x)); },
      [h](std::span<const epc::CodedShard> s) { return epc::decode_E(s, h); });
  auto f_round = cluster.run_protocol_round(
      "F", cluster::stage_elements(2, l, d, h), epc::recovery_threshold(epc::TaskKind::Inner, h),
      [&](std::size_t, double x) {
        return matmul_tn(epc::encode_fL(B, h, x), epc::encode_fR(B, h, x));
      },
      inner);
  const Matrix& E = e_round.value;

  // Steps 3-4: f_L(B, x_w)^T f_R(E, x_w), then G = (B^T E)^{-1} F at the master.
  auto be_round = cluster.run_protocol_round(
      "BtE", cluster::stage_elements(3, l, d, h), epc::recovery_threshold(epc::TaskKind::Inner, h),
      [&](std::size_t, double x) {
        return matmul_tn(epc::encode_fL(B, h, x), epc::encode_fR(E, h, x));
      },
      inner);
  Matrix G = matmul(inverse_or_degenerate(be_round.value, state.t, "B^T E"), f_round.value);

  // Steps 5-6: f_R(E, x_w) G = f_R(EG, x_w), decoded from any h responses.
  auto eg_round = cluster.run_protocol_round(
      "EG", cluster::stage_elements(4, l, d, h), epc::recovery_threshold(epc::TaskKind::Blocks, h),
      [&](std::size_t, double x) { return matmul(epc::encode_fR(E, h, x), G); },
      [h](std::span<const epc::CodedShard> s) {
        return epc::decode_blocks(s, h, epc::BlockOrder::Descending);
      });

  const double elapsed = e_round.trace.elapsed + f_round.trace.elapsed +
                         be_round.trace.elapsed + eg_round.trace.elapsed;
  return IterState{state.t + 1,           std::move(eg_round.value), std::move(e_round.value),
                   std::move(f_round.value), std::move(G),           elapsed};
}

IterState run_iteration(const IterState& state, const Matrix& D, cluster::Cluster& cluster,
                        std::size_t h) {
  return run_iteration(state, encode_storage(D, h, cluster.points()), cluster);
}

FactorizationResult post_compute(const Matrix& B_final, const Matrix& R,
                                 Orientation orientation, cluster::Cluster& cluster,
                                 std::size_t h, const epc::EpcParams& params) {
  const std::size_t l = B_final.rows();
  const std::size_t d = B_final.cols();
  if (h == 0 || l % h != 0) {
    throw PartitionError(fmt::format("cannot split {} rows into h={} blocks", l, h));
  }
  const auto inner = [h](std::span<const epc::CodedShard> s) { return epc::decode_inner(s, h); };

  auto f_round = cluster.run_protocol_round(
      "post-F", cluster::stage_elements(2, l, d, h),
      epc::recovery_threshold(epc::TaskKind::Inner, h),
      [&](std::size_t, double x) {
        return matmul_tn(epc::encode_fL(B_final, h, x), epc::encode_fR(B_final, h, x));
      },
      inner);
  const Matrix f_inv = inverse_or_degenerate(f_round.value, 0, "post-computation B^T B");

  auto h_round = cluster.run_protocol_round(
      "post-H", cluster::stage_elements(4, l, d, h),
      epc::recovery_threshold(epc::TaskKind::Blocks, h),
      [&](std::size_t, double x) { return matmul(epc::encode_fL(B_final, h, x), f_inv); },
      [h](std::span<const epc::CodedShard> s) {
        return epc::decode_blocks(s, h, epc::BlockOrder::Ascending);
      });
  const Matrix& H = h_round.value;

  // Other factor = A^T H with A = R^T (ColumnSide) or R (RowSide): the same
  // blocks of R as the pre-computation, transposed, so r and p swap roles.
  const Matrix A = orientation == Orientation::ColumnSide ? transpose(R) : R;
  if (A.rows() != l) {
    throw ShapeError(fmt::format("factor has {} rows, R side has {}", l, A.rows()));
  }
  const epc::EpcParams product{params.r, 1, h};
  if (A.cols() % product.p != 0) {
    throw PartitionError(fmt::format("{} columns not divisible by {}", A.cols(), product.p));
  }
  const std::uint64_t elements =
      static_cast<std::uint64_t>(A.cols() / product.p) * (l / h) * d;
  auto product_round = cluster.run_protocol_round(
      "post-product", elements, product.recovery_threshold(),
      [&](std::size_t, double x) {
        const auto [a, b] = epc::epc_encode_general(A, H, product, x);
        return matmul_tn(a, b);
      },
      [&](std::span<const epc::CodedShard> s) { return epc::decode_general(s, product); });

  auto result = assign_factors(orientation, B_final, std::move(product_round.value));
  result.loss_history.push_back(loss(R, result.U, result.V));
  result.simulated_time =
      f_round.trace.elapsed + h_round.trace.elapsed + product_round.trace.elapsed;
  return result;
}

FactorizationResult post_compute_central(const Matrix& B_final, const Matrix& R,
                                         Orientation orientation) {
  const Matrix H =
      matmul(B_final, inverse_or_degenerate(matmul_tn(B_final, B_final), 0, "B^T B"));
  Matrix other = orientation == Orientation::ColumnSide ? matmul(R, H) : matmul_tn(R, H);
  auto result = assign_factors(orientation, B_final, std::move(other));
  result.loss_history.push_back(loss(R, result.U, result.V));
  return result;
}

void check_feasibility(const Problem& problem, const cluster::Cluster& cluster, std::size_t h) {
  problem.validate();
  if (h == 0) throw FeasibilityError("h must be positive");
  const Orientation o = orientation_for(problem.R);
  const auto params = precompute_params(problem.R, o, h);
  const std::size_t workers = cluster.workers();
  const std::size_t missing = cluster.missing_per_round();
  const std::size_t available = missing >= workers ? 0 : workers - missing;
  const std::size_t k_iter = epc::recovery_threshold(epc::TaskKind::Iteration, h);
  const std::size_t k_pre = params.recovery_threshold();
  const std::size_t k_post = epc::EpcParams{params.r, 1, h}.recovery_threshold();
  const std::size_t needed = std::max({k_iter, k_pre, k_post});
  if (needed > available) {
    throw FeasibilityError(fmt::format(
        "h={} needs {} responses per round but only {} of W={} respond ({} stragglers)", h,
        needed, available, workers, missing));
  }
}

FactorizationResult factorize_coded(const Problem& problem, cluster::Cluster& cluster,
                                    std::size_t h) {
  check_feasibility(problem, cluster, h);
  const Orientation o = orientation_for(problem.R);
  const double start_time = cluster.total_elapsed();
  const auto params = precompute_params(problem.R, o, h);

  const Matrix D = precompute_D(problem.R, o, cluster, params);
  const auto storage = encode_storage(D, h, cluster.points());
  Matrix B0 = starting_factor(problem, D.rows());
  const std::size_t d = problem.d;
  IterState state{0, B0, B0, Matrix::identity(d), Matrix::identity(d), 0.0};

  std::vector<double> losses;
  std::vector<double> changes;
  while (state.t < problem.max_iterations) {
    IterState next = run_iteration(state, storage, cluster);
    const double change = relative_change(next.B, state.B);
    changes.push_back(change);
    state = std::move(next);
    if (problem.track_loss) {
      losses.push_back(post_compute_central(state.B, problem.R, o).final_loss());
    }
    if (change < problem.tol) break;
  }

  auto result = post_compute(state.B, problem.R, o, cluster, h, params);
  if (problem.track_loss) {
    losses.back() = result.final_loss();
    result.loss_history = std::move(losses);
  }
  result.iterations_run = state.t;
  result.change_history = std::move(changes);
  result.simulated_time = cluster.total_elapsed() - start_time;
  return result;
}

FactorizationResult factorize_central(const Problem& problem) {
  problem.validate();
  const Orientation o = orientation_for(problem.R);
  const Matrix D = gram_target(problem.R, o);
  Matrix B = starting_factor(problem, D.rows());

  std::vector<double> losses;
  std::vector<double> changes;
  std::size_t t = 0;
  while (t < problem.max_iterations) {
    Matrix next = direct_update(B, D, t);
    const double change = relative_change(next, B);
    changes.push_back(change);
    B = std::move(next);
    ++t;
    if (problem.track_loss) {
      losses.push_back(post_compute_central(B, problem.R, o).final_loss());
    }
    if (change < problem.tol) break;
  }
  auto result = post_compute_central(B, problem.R, o);
  if (problem.track_loss) result.loss_history = std::move(losses);
  result.iterations_run = t;
  result.change_history = std::move(changes);
  return result;
}

}  // namespace codedals::als
