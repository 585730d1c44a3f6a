#include "codedals/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include <fmt/format.h>

#include "codedals/error.hpp"

namespace codedals {

const char* to_string(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::Shape: return "shape";
    case ErrorCategory::Partition: return "partition";
    case ErrorCategory::Singularity: return "singularity";
    case ErrorCategory::Codec: return "codec";
    case ErrorCategory::InsufficientResponses: return "insufficient-responses";
    case ErrorCategory::NumericalDecode: return "numerical-decode";
    case ErrorCategory::Degeneracy: return "degeneracy";
    case ErrorCategory::Feasibility: return "feasibility";
    case ErrorCategory::Config: return "config";
    case ErrorCategory::Argument: return "argument";
    case ErrorCategory::Io: return "io";
  }
  return "unknown";
}

InsufficientResponses::InsufficientResponses(std::size_t needed, std::size_t got)
    : Error(ErrorCategory::InsufficientResponses,
            fmt::format("insufficient responses: needed {}, got {}", needed, got)),
      needed_(needed),
      got_(got) {}

NumericalDecodeError::NumericalDecodeError(double residual, double tolerance)
    : Error(ErrorCategory::NumericalDecode,
            fmt::format("decode residual {:.3e} exceeds tolerance {:.3e}", residual, tolerance)),
      residual_(residual) {}

NumericalDecodeError::NumericalDecodeError(const std::string& what, double bound,
                                           double tolerance)
    : Error(ErrorCategory::NumericalDecode,
            fmt::format("{}: error bound {:.3e} exceeds {:.3e}", what, bound, tolerance)),
      residual_(bound) {}

DegeneracyError::DegeneracyError(std::size_t iteration, const std::string& what)
    : Error(ErrorCategory::Degeneracy, fmt::format("iteration {}: {}", iteration, what)),
      iteration_(iteration) {}

namespace {

void require_finite(std::span<const double> data, const char* where) {
  for (double v : data) {
    if (!std::isfinite(v)) {
      throw ArgumentError(fmt::format("{}: non-finite entry", where));
    }
  }
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* where) {
  if (!a.same_shape(b)) {
    throw ShapeError(fmt::format("{}: {}x{} vs {}x{}", where, a.rows(), a.cols(), b.rows(),
                                 b.cols()));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
  if (rows == 0 || cols == 0) {
    throw ShapeError(fmt::format("matrix dimensions must be positive, got {}x{}", rows, cols));
  }
  data_.assign(rows * cols, 0.0);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows == 0 || cols == 0) {
    throw ShapeError(fmt::format("matrix dimensions must be positive, got {}x{}", rows, cols));
  }
  if (data_.size() != rows * cols) {
    throw ShapeError(
        fmt::format("matrix data length {} does not match {}x{}", data_.size(), rows, cols));
  }
  require_finite(data_, "Matrix");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  if (rows_ == 0 || cols_ == 0) {
    throw ShapeError("matrix literal must be non-empty");
  }
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) {
      throw ShapeError("ragged matrix literal");
    }
    data_.insert(data_.end(), r.begin(), r.end());
  }
  require_finite(data_, "Matrix");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    m(i, i) = 1.0;
  }
  return m;
}

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) {
    data_[i] += other.data_[i];
  }
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) {
    data_[i] -= other.data_[i];
  }
  return *this;
}

Matrix& Matrix::operator*=(double scalar) noexcept {
  for (double& v : data_) {
    v *= scalar;
  }
  return *this;
}

Matrix& Matrix::axpy(double scalar, const Matrix& other) {
  require_same_shape(*this, other, "axpy");
  for (std::size_t i = 0; i < data_.size(); ++i) {
    data_[i] += scalar * other.data_[i];
  }
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double scalar, Matrix a) { return a *= scalar; }

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError(fmt::format("matmul: {}x{} times {}x{}", a.rows(), a.cols(), b.rows(),
                                 b.cols()));
  }
  Matrix c(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* crow = &c(i, 0);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      const auto brow = b.row(k);
      for (std::size_t j = 0; j < n; ++j) {
        crow[j] += aik * brow[j];
      }
    }
  }
  require_finite(c.data(), "matmul");
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError(fmt::format("matmul_tn: ({}x{})^T times {}x{}", a.rows(), a.cols(),
                                 b.rows(), b.cols()));
  }
  Matrix c(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const auto arow = a.row(k);
    const auto brow = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = arow[i];
      double* crow = &c(i, 0);
      for (std::size_t j = 0; j < n; ++j) {
        crow[j] += aki * brow[j];
      }
    }
  }
  require_finite(c.data(), "matmul_tn");
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      t(j, i) = a(i, j);
    }
  }
  return t;
}

Matrix invert(const Matrix& a, double pivot_tol) {
  if (a.rows() != a.cols()) {
    throw ShapeError(fmt::format("invert: non-square {}x{}", a.rows(), a.cols()));
  }
  const std::size_t n = a.rows();
  const double scale = max_abs(a);
  const double threshold = pivot_tol * scale;
  Matrix work = a;
  Matrix inv = Matrix::identity(n);

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot_row = col;
    double best = std::abs(work(col, col));
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(work(r, col)) > best) {
        best = std::abs(work(r, col));
        pivot_row = r;
      }
    }
    if (!(best > threshold) || scale == 0.0) {
      throw SingularityError(col, fmt::format("invert: pivot {} magnitude {:.3e} below {:.3e}",
                                              col, best, threshold));
    }
    if (pivot_row != col) {
      for (std::size_t j = 0; j < n; ++j) {
        std::swap(work(col, j), work(pivot_row, j));
        std::swap(inv(col, j), inv(pivot_row, j));
      }
    }
    const double p = work(col, col);
    for (std::size_t j = 0; j < n; ++j) {
      work(col, j) /= p;
      inv(col, j) /= p;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) {
        continue;
      }
      const double f = work(r, col);
      if (f == 0.0) {
        continue;
      }
      for (std::size_t j = 0; j < n; ++j) {
        work(r, j) -= f * work(col, j);
        inv(r, j) -= f * inv(col, j);
      }
    }
  }
  require_finite(inv.data(), "invert");
  return inv;
}

double frobenius_sq(const Matrix& a) noexcept {
  double s = 0.0;
  for (double v : a.data()) {
    s += v * v;
  }
  return s;
}

double frobenius(const Matrix& a) noexcept { return std::sqrt(frobenius_sq(a)); }

double max_abs(const Matrix& a) noexcept {
  double m = 0.0;
  for (double v : a.data()) {
    m = std::max(m, std::abs(v));
  }
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  }
  return m;
}

double relative_error(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "relative_error");
  double num = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    num += d * d;
  }
  const double den = std::max(frobenius_sq(b), std::numeric_limits<double>::min());
  return std::sqrt(num / den);
}

double asymmetry(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw ShapeError(fmt::format("asymmetry: non-square {}x{}", a.rows(), a.cols()));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = i + 1; j < a.cols(); ++j) {
      m = std::max(m, std::abs(a(i, j) - a(j, i)));
    }
  }
  return m;
}

std::vector<Matrix> split_rows(const Matrix& a, std::size_t h) {
  auto grid = split_grid(a, h, 1);
  std::vector<Matrix> out;
  out.reserve(h);
  for (auto& row : grid) {
    out.push_back(std::move(row.front()));
  }
  return out;
}

std::vector<std::vector<Matrix>> split_grid(const Matrix& a, std::size_t h) {
  return split_grid(a, h, h);
}

std::vector<std::vector<Matrix>> split_grid(const Matrix& a, std::size_t row_blocks,
                                            std::size_t col_blocks) {
  if (row_blocks == 0 || col_blocks == 0) {
    throw PartitionError("block counts must be positive");
  }
  if (a.rows() % row_blocks != 0 || a.cols() % col_blocks != 0) {
    throw PartitionError(fmt::format("cannot split {}x{} into {}x{} equal blocks", a.rows(),
                                     a.cols(), row_blocks, col_blocks));
  }
  const std::size_t br = a.rows() / row_blocks;
  const std::size_t bc = a.cols() / col_blocks;
  std::vector<std::vector<Matrix>> grid(row_blocks);
  for (std::size_t j = 0; j < row_blocks; ++j) {
    grid[j].reserve(col_blocks);
    for (std::size_t i = 0; i < col_blocks; ++i) {
      Matrix block(br, bc);
      for (std::size_t r = 0; r < br; ++r) {
        const auto src = a.row(j * br + r).subspan(i * bc, bc);
        std::copy(src.begin(), src.end(), &block(r, 0));
      }
      grid[j].push_back(std::move(block));
    }
  }
  return grid;
}

Matrix stack_rows(std::span<const Matrix> blocks) {
  if (blocks.empty()) {
    throw ShapeError("stack_rows: no blocks");
  }
  std::size_t rows = 0;
  const std::size_t cols = blocks.front().cols();
  for (const auto& b : blocks) {
    if (b.cols() != cols) {
      throw ShapeError("stack_rows: column count mismatch");
    }
    rows += b.rows();
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  for (const auto& b : blocks) {
    data.insert(data.end(), b.data().begin(), b.data().end());
  }
  return Matrix(rows, cols, std::move(data));
}

Matrix assemble_grid(const std::vector<std::vector<Matrix>>& blocks) {
  if (blocks.empty() || blocks.front().empty()) {
    throw ShapeError("assemble_grid: no blocks");
  }
  const std::size_t br = blocks.front().front().rows();
  const std::size_t bc = blocks.front().front().cols();
  const std::size_t nc = blocks.front().size();
  Matrix out(br * blocks.size(), bc * nc);
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    if (blocks[j].size() != nc) {
      throw ShapeError("assemble_grid: ragged block grid");
    }
    for (std::size_t i = 0; i < nc; ++i) {
      const Matrix& b = blocks[j][i];
      if (b.rows() != br || b.cols() != bc) {
        throw ShapeError("assemble_grid: block shape mismatch");
      }
      for (std::size_t r = 0; r < br; ++r) {
        const auto src = b.row(r);
        std::copy(src.begin(), src.end(), &out(j * br + r, i * bc));
      }
    }
  }
  return out;
}

Matrix pad_to(const Matrix& a, std::size_t rows, std::size_t cols) {
  if (rows < a.rows() || cols < a.cols()) {
    throw ShapeError(fmt::format("pad_to: cannot shrink {}x{} to {}x{}", a.rows(), a.cols(),
                                 rows, cols));
  }
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto src = a.row(r);
    std::copy(src.begin(), src.end(), &out(r, 0));
  }
  return out;
}

Matrix crop(const Matrix& a, std::size_t rows, std::size_t cols) {
  if (rows > a.rows() || cols > a.cols() || rows == 0 || cols == 0) {
    throw ShapeError(fmt::format("crop: {}x{} window outside {}x{}", rows, cols, a.rows(),
                                 a.cols()));
  }
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto src = a.row(r).first(cols);
    std::copy(src.begin(), src.end(), &out(r, 0));
  }
  return out;
}

}  // namespace codedals
