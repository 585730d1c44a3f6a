#include "codedals/epc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "codedals/error.hpp"
#include "codedals/matrix_io.hpp"

namespace codedals::epc {

namespace {

double ipow(double x, std::size_t e) noexcept {
  double r = 1.0;
  for (std::size_t i = 0; i < e; ++i) r *= x;
  return r;
}

void require_h(std::size_t h) {
  if (h == 0) throw CodecError("partition count h must be positive");
}

std::vector<Matrix> split_rows_checked(const Matrix& C, std::size_t h, const char* where) {
  require_h(h);
  if (C.rows() % h != 0) {
    throw CodecError(fmt::format("{}: {} rows not divisible by h={}", where, C.rows(), h));
  }
  return split_rows(C, h);
}

Matrix symmetrised(const Matrix& D) {
  if (D.rows() != D.cols()) {
    throw CodecError(fmt::format("encode_D: D must be square, got {}x{}", D.rows(), D.cols()));
  }
  const double skew = asymmetry(D);
  const double tol = kSymmetryTol * std::max(1.0, max_abs(D));
  if (skew > tol) {
    throw CodecError(
        fmt::format("encode_D: D asymmetric by {:.3e} (tolerance {:.3e})", skew, tol));
  }
  Matrix S = D;
  for (std::size_t i = 0; i < S.rows(); ++i) {
    for (std::size_t j = i + 1; j < S.cols(); ++j) {
      const double m = 0.5 * (D(i, j) + D(j, i));
      S(i, j) = m;
      S(j, i) = m;
    }
  }
  return S;
}

std::vector<std::vector<Matrix>> split_D(const Matrix& D, std::size_t h) {
  require_h(h);
  const Matrix S = symmetrised(D);
  if (S.rows() % h != 0) {
    throw CodecError(fmt::format("encode_D: {} not divisible by h={}", S.rows(), h));
  }
  return split_grid(S, h);
}

Matrix encode_grid(const std::vector<std::vector<Matrix>>& grid, std::size_t h, double x) {
  Matrix out(grid[0][0].rows(), grid[0][0].cols());
  for (std::size_t j = 0; j < h; ++j) {
    for (std::size_t i = 0; i < h; ++i) {
      out.axpy(ipow(x, j + i * h), grid[j][i]);
    }
  }
  return out;
}

/// Monomial-basis inverse Vandermonde for the given nodes: coefficient e of
/// the interpolant is sum_i weights[e][i] * y_i. Built from the Lagrange
/// basis polynomials expanded in extended precision.
std::vector<std::vector<double>> inverse_vandermonde(std::span<const double> nodes) {
  const std::size_t k = nodes.size();
  std::vector<std::vector<double>> weights(k, std::vector<double>(k, 0.0));
  std::vector<long double> basis(k);
  for (std::size_t i = 0; i < k; ++i) {
    std::fill(basis.begin(), basis.end(), 0.0L);
    basis[0] = 1.0L;
    std::size_t deg = 0;
    long double denom = 1.0L;
    const long double xi = nodes[i];
    for (std::size_t m = 0; m < k; ++m) {
      if (m == i) continue;
      const long double xm = nodes[m];
      // basis *= (x - xm)
      for (std::size_t e = deg + 1; e > 0; --e) {
        basis[e] = basis[e - 1] - xm * basis[e];
      }
      basis[0] = -xm * basis[0];
      ++deg;
      denom *= (xi - xm);
    }
    for (std::size_t e = 0; e < k; ++e) {
      weights[e][i] = static_cast<double>(basis[e] / denom);
    }
  }
  return weights;
}

void validate_shards(std::span<const CodedShard> shards, std::size_t needed) {
  if (shards.size() < needed) {
    throw InsufficientResponses(needed, shards.size());
  }
  const Matrix& first = shards.front().payload;
  std::vector<double> pts;
  pts.reserve(shards.size());
  for (const auto& s : shards) {
    if (!s.payload.same_shape(first)) {
      throw CodecError("shard payload shapes differ");
    }
    if (!std::isfinite(s.point)) {
      throw CodecError("non-finite evaluation point");
    }
    pts.push_back(s.point);
  }
  std::sort(pts.begin(), pts.end());
  if (std::adjacent_find(pts.begin(), pts.end()) != pts.end()) {
    throw CodecError("duplicate evaluation points among shards");
  }
}

/// Interpolates through the first degree+1 shards and returns the requested
/// coefficients. Extra shards are used only for the residual check.
std::vector<Matrix> decode_coefficients(std::span<const CodedShard> shards, std::size_t degree,
                                        std::span<const std::size_t> exponents,
                                        const DecodeOptions& opts) {
  const std::size_t k = degree + 1;
  validate_shards(shards, k);
  std::vector<double> nodes(k);
  for (std::size_t i = 0; i < k; ++i) nodes[i] = shards[i].point;
  const auto weights = inverse_vandermonde(nodes);
  double amplification = 0.0;
  for (const auto& row : weights) {
    double sum = 0.0;
    for (double w : row) sum += std::abs(w);
    amplification = std::max(amplification, sum);
  }
  const double bound = amplification * std::numeric_limits<double>::epsilon();
  if (bound > opts.max_error_bound) {
    throw NumericalDecodeError(
        fmt::format("degree-{} interpolation on these points is too ill-conditioned", degree),
        bound, opts.max_error_bound);
  }

  const Matrix& shape = shards.front().payload;
  auto coefficient = [&](std::size_t e) {
    Matrix c(shape.rows(), shape.cols());
    for (std::size_t i = 0; i < k; ++i) {
      c.axpy(weights[e][i], shards[i].payload);
    }
    return c;
  };

  std::vector<Matrix> out;
  out.reserve(exponents.size());
  for (std::size_t e : exponents) {
    if (e > degree) {
      throw CodecError(fmt::format("exponent {} above degree {}", e, degree));
    }
    out.push_back(coefficient(e));
  }

  if (shards.size() > k) {
    std::vector<Matrix> all;
    all.reserve(k);
    for (std::size_t e = 0; e < k; ++e) all.push_back(coefficient(e));
    for (std::size_t s = k; s < shards.size(); ++s) {
      // Horner evaluation of the full polynomial at the held-out point.
      Matrix value = all[degree];
      for (std::size_t e = degree; e > 0; --e) {
        value *= shards[s].point;
        value += all[e - 1];
      }
      const double residual = max_abs_diff(value, shards[s].payload);
      const double tol = opts.residual_tol * std::max(1.0, max_abs(shards[s].payload));
      if (residual > tol) {
        throw NumericalDecodeError(residual, tol);
      }
    }
  }
  return out;
}

}  // namespace

EvalPoints::EvalPoints(std::vector<double> points) : points_(std::move(points)) {
  if (points_.empty()) {
    throw CodecError("at least one evaluation point is required");
  }
  for (double x : points_) {
    if (!std::isfinite(x) || std::abs(x) > 1.0) {
      throw CodecError(fmt::format("evaluation point {} outside [-1, 1]", x));
    }
  }
  std::vector<double> sorted = points_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw CodecError("evaluation points must be pairwise distinct");
  }
}

EvalPoints EvalPoints::chebyshev(std::size_t workers) {
  if (workers == 0) {
    throw CodecError("worker count must be positive");
  }
  std::vector<double> pts(workers);
  for (std::size_t w = 1; w <= workers; ++w) {
    pts[w - 1] = std::cos(static_cast<double>(2 * w - 1) * std::numbers::pi /
                          static_cast<double>(2 * workers));
  }
  // cos(pi/2) is 6e-17 rather than 0 for odd W; keep it, it is still distinct.
  return EvalPoints(std::move(pts));
}

EvalPoints EvalPoints::chebyshev_interleaved(std::size_t workers) {
  const auto nodes = chebyshev(workers);
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < workers) ++bits;
  std::vector<double> pts;
  pts.reserve(workers);
  for (std::size_t v = 0; v < (std::size_t{1} << bits); ++v) {
    std::size_t rev = 0;
    for (std::size_t b = 0; b < bits; ++b) {
      if (v & (std::size_t{1} << b)) rev |= std::size_t{1} << (bits - 1 - b);
    }
    if (rev < workers) pts.push_back(nodes[rev]);
  }
  return EvalPoints(std::move(pts));
}

BlockPoly::BlockPoly(std::size_t degree, std::vector<Term> terms)
    : degree_(degree), terms_(std::move(terms)) {
  if (terms_.empty()) {
    throw CodecError("block polynomial needs at least one term");
  }
  std::vector<std::size_t> seen;
  for (const auto& t : terms_) {
    if (t.exponent > degree_) {
      throw CodecError(fmt::format("exponent {} exceeds degree {}", t.exponent, degree_));
    }
    if (!t.block.same_shape(terms_.front().block)) {
      throw CodecError("block polynomial terms differ in shape");
    }
    seen.push_back(t.exponent);
  }
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
    throw CodecError("block polynomial exponents must be unique");
  }
}

const Matrix* BlockPoly::coefficient(std::size_t exponent) const noexcept {
  for (const auto& t : terms_) {
    if (t.exponent == exponent) return &t.block;
  }
  return nullptr;
}

Matrix BlockPoly::evaluate(double x) const {
  Matrix out(block_rows(), block_cols());
  for (const auto& t : terms_) {
    out.axpy(ipow(x, t.exponent), t.block);
  }
  return out;
}

std::size_t recovery_threshold(TaskKind kind, std::size_t h) {
  require_h(h);
  switch (kind) {
    case TaskKind::Product:
    case TaskKind::Iteration:
      return h * h + h - 1;
    case TaskKind::Inner:
      return 2 * h - 1;
    case TaskKind::Blocks:
      return h;
  }
  return h * h + h - 1;
}

Matrix encode_D(const Matrix& D, std::size_t h, double x) {
  return encode_grid(split_D(D, h), h, x);
}

std::vector<Matrix> encode_D(const Matrix& D, std::size_t h, const EvalPoints& points) {
  const auto grid = split_D(D, h);
  std::vector<Matrix> out;
  out.reserve(points.size());
  for (double x : points.values()) out.push_back(encode_grid(grid, h, x));
  return out;
}

Matrix encode_fL(const Matrix& C, std::size_t h, double x) {
  const auto blocks = split_rows_checked(C, h, "encode_fL");
  Matrix out(blocks[0].rows(), blocks[0].cols());
  for (std::size_t j = 0; j < h; ++j) out.axpy(ipow(x, j), blocks[j]);
  return out;
}

Matrix encode_fR(const Matrix& C, std::size_t h, double x) {
  const auto blocks = split_rows_checked(C, h, "encode_fR");
  Matrix out(blocks[0].rows(), blocks[0].cols());
  for (std::size_t j = 0; j < h; ++j) out.axpy(ipow(x, h - 1 - j), blocks[j]);
  return out;
}

std::pair<Matrix, Matrix> epc_encode_general(const Matrix& A, const Matrix& B,
                                             const EpcParams& params, double x) {
  const auto [p, q, r] = params;
  if (p == 0 || q == 0 || r == 0) {
    throw CodecError("EPC parameters must be positive");
  }
  if (A.rows() != B.rows()) {
    throw CodecError(fmt::format("A^T B needs equal row counts, got {} and {}", A.rows(),
                                 B.rows()));
  }
  if (A.rows() % r != 0 || A.cols() % p != 0 || B.cols() % q != 0) {
    throw CodecError(fmt::format("cannot partition A {}x{} into {}x{} or B {}x{} into {}x{}",
                                 A.rows(), A.cols(), r, p, B.rows(), B.cols(), r, q));
  }
  const auto a_grid = split_grid(A, r, p);
  const auto b_grid = split_grid(B, r, q);
  Matrix a_enc(A.rows() / r, A.cols() / p);
  Matrix b_enc(B.rows() / r, B.cols() / q);
  for (std::size_t j = 0; j < r; ++j) {
    for (std::size_t i = 0; i < p; ++i) a_enc.axpy(ipow(x, j + i * r), a_grid[j][i]);
    for (std::size_t k = 0; k < q; ++k) b_enc.axpy(ipow(x, r - 1 - j + k * r * p), b_grid[j][k]);
  }
  return {std::move(a_enc), std::move(b_enc)};
}

BlockPoly interpolate(std::span<const CodedShard> shards, std::size_t degree,
                      const DecodeOptions& opts) {
  std::vector<std::size_t> exponents(degree + 1);
  for (std::size_t e = 0; e <= degree; ++e) exponents[e] = e;
  auto coeffs = decode_coefficients(shards, degree, exponents, opts);
  std::vector<BlockPoly::Term> terms;
  terms.reserve(coeffs.size());
  for (std::size_t e = 0; e <= degree; ++e) terms.push_back({e, std::move(coeffs[e])});
  return BlockPoly(degree, std::move(terms));
}

Matrix decode_E(std::span<const CodedShard> shards, std::size_t h, const DecodeOptions& opts) {
  require_h(h);
  const std::size_t degree = h * h + h - 2;
  std::vector<std::size_t> exponents(h);
  for (std::size_t i = 0; i < h; ++i) exponents[i] = h - 1 + i * h;
  const auto blocks = decode_coefficients(shards, degree, exponents, opts);
  return stack_rows(blocks);
}

Matrix decode_inner(std::span<const CodedShard> shards, std::size_t h,
                    const DecodeOptions& opts) {
  require_h(h);
  const std::size_t exponent = h - 1;
  auto out = decode_coefficients(shards, 2 * h - 2, std::span(&exponent, 1), opts);
  return std::move(out.front());
}

Matrix decode_blocks(std::span<const CodedShard> shards, std::size_t h, BlockOrder order,
                     const DecodeOptions& opts) {
  require_h(h);
  std::vector<std::size_t> exponents(h);
  for (std::size_t j = 0; j < h; ++j) {
    exponents[j] = order == BlockOrder::Ascending ? j : h - 1 - j;
  }
  const auto blocks = decode_coefficients(shards, h - 1, exponents, opts);
  return stack_rows(blocks);
}

Matrix decode_general(std::span<const CodedShard> shards, const EpcParams& params,
                      const DecodeOptions& opts) {
  const auto [p, q, r] = params;
  if (p == 0 || q == 0 || r == 0) {
    throw CodecError("EPC parameters must be positive");
  }
  std::vector<std::size_t> exponents;
  exponents.reserve(p * q);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t k = 0; k < q; ++k) exponents.push_back(r - 1 + i * r + k * r * p);
  }
  auto coeffs = decode_coefficients(shards, params.product_degree(), exponents, opts);
  std::vector<std::vector<Matrix>> grid(p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t k = 0; k < q; ++k) grid[i].push_back(std::move(coeffs[i * q + k]));
  }
  return assemble_grid(grid);
}

void write_shard(std::ostream& out, const CodedShard& shard) {
  if (shard.worker_id > 0xffffffffu) {
    throw IoError("worker id does not fit in u32");
  }
  write_u32_le(out, static_cast<std::uint32_t>(shard.worker_id));
  write_f64_le(out, shard.point);
  write_binary(out, shard.payload);
}

CodedShard read_shard(std::istream& in) {
  const auto id = read_u32_le(in);
  const double point = read_f64_le(in);
  return CodedShard{id, point, read_binary(in)};
}

}  // namespace codedals::epc
