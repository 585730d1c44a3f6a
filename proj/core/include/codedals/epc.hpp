#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "codedals/matrix.hpp"

namespace codedals::epc {

/// Entangled polynomial code parameters for computing A^T B with A split
/// into r x p blocks and B into r x q blocks.
struct EpcParams {
  std::size_t p = 1;
  std::size_t q = 1;
  std::size_t r = 1;

  /// rpq + r - 1
  std::size_t recovery_threshold() const noexcept { return r * p * q + r - 1; }
  /// Degree of the product polynomial, pqr + r - 2.
  std::size_t product_degree() const noexcept { return recovery_threshold() - 1; }

  friend bool operator==(const EpcParams&, const EpcParams&) = default;
};

/// Distinct evaluation points x_1..x_W in [-1, 1], one per worker.
class EvalPoints {
 public:
  explicit EvalPoints(std::vector<double> points);

  /// x_w = cos((2w - 1) pi / 2W), w = 1..W.
  static EvalPoints chebyshev(std::size_t workers);
  /// The same nodes, with node i given to the worker whose id is the i-th in
  /// bit-reversed order. Every prefix of worker ids then spans [-1, 1]
  /// evenly, which keeps lowest-id decode sets well conditioned.
  static EvalPoints chebyshev_interleaved(std::size_t workers);

  std::size_t size() const noexcept { return points_.size(); }
  double operator[](std::size_t w) const noexcept { return points_[w]; }
  std::span<const double> values() const noexcept { return points_; }

 private:
  std::vector<double> points_;
};

/// One worker's response: the evaluated product at its point.
struct CodedShard {
  std::size_t worker_id = 0;
  double point = 0.0;
  Matrix payload;
};

/// Polynomial with equal-shape matrix coefficients.
class BlockPoly {
 public:
  struct Term {
    std::size_t exponent;
    Matrix block;
  };

  BlockPoly(std::size_t degree, std::vector<Term> terms);

  std::size_t degree() const noexcept { return degree_; }
  std::span<const Term> terms() const noexcept { return terms_; }
  std::size_t block_rows() const noexcept { return terms_.front().block.rows(); }
  std::size_t block_cols() const noexcept { return terms_.front().block.cols(); }

  /// Coefficient at the exponent, or nullptr when the term is absent (zero).
  const Matrix* coefficient(std::size_t exponent) const noexcept;
  Matrix evaluate(double x) const;

 private:
  std::size_t degree_;
  std::vector<Term> terms_;
};

enum class TaskKind {
  Product,    // D~(x)^T f_R(B, x): decodes E = D^T B = DB
  Inner,      // f_L(A, x)^T f_R(C, x): decodes A^T C
  Blocks,     // f_R(M, x) or f_L(M, x): reassembles M
  Iteration,  // the whole round, max of the above
};

std::size_t recovery_threshold(TaskKind kind, std::size_t h);

/// Coefficient order of a single-matrix block polynomial.
enum class BlockOrder {
  Ascending,   // f_L: block j at exponent j
  Descending,  // f_R: block j at exponent h - 1 - j
};

struct DecodeOptions {
  /// Residual tolerance on held-out shards, scaled by max(1, max|payload|).
  double residual_tol = 1e-6;
  /// Largest accepted a-priori relative error: machine epsilon times the
  /// infinity norm of the inverse Vandermonde matrix.
  double max_error_bound = 1e-4;
};

// ---- encoding ---------------------------------------------------------------

/// Symmetry tolerance of encode_D relative to max(1, max|D|).
inline constexpr double kSymmetryTol = 1e-9;

/// sum_{j,i} D_{j,i} x^{j + ih}; D is symmetrised first (see kSymmetryTol).
Matrix encode_D(const Matrix& D, std::size_t h, double x);
std::vector<Matrix> encode_D(const Matrix& D, std::size_t h, const EvalPoints& points);

/// f_L(C, x) = C_0 + C_1 x + ... + C_{h-1} x^{h-1}
Matrix encode_fL(const Matrix& C, std::size_t h, double x);
/// f_R(C, x) = C_{h-1} + C_{h-2} x + ... + C_0 x^{h-1}
Matrix encode_fR(const Matrix& C, std::size_t h, double x);

/// (A~(x), B~(x)) with A~(x) = sum A_{j,i} x^{j+ir} and
/// B~(x) = sum B_{j,k} x^{r-1-j+krp}.
std::pair<Matrix, Matrix> epc_encode_general(const Matrix& A, const Matrix& B,
                                             const EpcParams& params, double x);

// ---- decoding ---------------------------------------------------------------
//
// Every decoder uses the first K shards in the order given and checks the
// remaining ones against the interpolated polynomial.

BlockPoly interpolate(std::span<const CodedShard> shards, std::size_t degree,
                      const DecodeOptions& opts = {});

/// E = D B from shards of D~(x_w)^T f_R(B, x_w); needs h^2 + h - 1 shards.
Matrix decode_E(std::span<const CodedShard> shards, std::size_t h,
                const DecodeOptions& opts = {});
/// A^T C from shards of f_L(A, x_w)^T f_R(C, x_w); needs 2h - 1 shards.
Matrix decode_inner(std::span<const CodedShard> shards, std::size_t h,
                    const DecodeOptions& opts = {});
/// M from shards of f_R(M, x_w) (Descending) or f_L(M, x_w) (Ascending);
/// needs h shards.
Matrix decode_blocks(std::span<const CodedShard> shards, std::size_t h,
                     BlockOrder order = BlockOrder::Descending, const DecodeOptions& opts = {});
/// A^T B from shards of A~(x_w)^T B~(x_w); needs rpq + r - 1 shards.
Matrix decode_general(std::span<const CodedShard> shards, const EpcParams& params,
                      const DecodeOptions& opts = {});

// ---- wire format ------------------------------------------------------------

/// u32 worker_id, f64 point, then the matrix in binary format.
void write_shard(std::ostream& out, const CodedShard& shard);
CodedShard read_shard(std::istream& in);

}  // namespace codedals::epc
