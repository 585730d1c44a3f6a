#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace codedals {

/// Dense row-major matrix of doubles.
///
/// Every matrix has at least one row and one column and finite entries.
/// Constructors and the products/inverse below check both; a non-finite
/// entry raises ArgumentError.
class Matrix {
 public:
  /// Zero-filled rows x cols matrix.
  Matrix(std::size_t rows, std::size_t cols);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> row(std::size_t r) const noexcept {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }

  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double scalar) noexcept;

  /// this += scalar * other
  Matrix& axpy(double scalar, const Matrix& other);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double scalar, Matrix a);

Matrix matmul(const Matrix& a, const Matrix& b);
/// a^T * b without materialising the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

/// Partial-pivot Gauss-Jordan inverse. A pivot whose magnitude is at or below
/// pivot_tol * max|a_ij| raises SingularityError carrying the pivot column.
Matrix invert(const Matrix& a, double pivot_tol = 1e-12);

double frobenius_sq(const Matrix& a) noexcept;
double frobenius(const Matrix& a) noexcept;
double max_abs(const Matrix& a) noexcept;
double max_abs_diff(const Matrix& a, const Matrix& b);
/// ||a - b||_F / max(||b||_F, tiny)
double relative_error(const Matrix& a, const Matrix& b);
/// max |a_ij - a_ji| for square a.
double asymmetry(const Matrix& a);

/// Row-block split into h contiguous blocks; h must divide rows.
std::vector<Matrix> split_rows(const Matrix& a, std::size_t h);
/// h x h grid split, blocks[j][i] is row-block j, column-block i.
std::vector<std::vector<Matrix>> split_grid(const Matrix& a, std::size_t h);
/// General grid split into row_blocks x col_blocks.
std::vector<std::vector<Matrix>> split_grid(const Matrix& a, std::size_t row_blocks,
                                            std::size_t col_blocks);

Matrix stack_rows(std::span<const Matrix> blocks);
Matrix assemble_grid(const std::vector<std::vector<Matrix>>& blocks);

/// Copy of a with zero rows/columns appended up to the requested shape.
Matrix pad_to(const Matrix& a, std::size_t rows, std::size_t cols);
/// Top-left rows x cols window.
Matrix crop(const Matrix& a, std::size_t rows, std::size_t cols);

}  // namespace codedals
