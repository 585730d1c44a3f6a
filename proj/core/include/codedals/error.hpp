#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace codedals {

/// Broad failure classes. The CLI maps each one onto a process exit code.
enum class ErrorCategory {
  Shape,
  Partition,
  Singularity,
  Codec,
  InsufficientResponses,
  NumericalDecode,
  Degeneracy,
  Feasibility,
  Config,
  Argument,
  Io,
};

const char* to_string(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(ErrorCategory::Shape, what) {}
};

class PartitionError : public Error {
 public:
  explicit PartitionError(const std::string& what) : Error(ErrorCategory::Partition, what) {}
};

/// Raised by matrix inversion when a pivot falls below tolerance.
class SingularityError : public Error {
 public:
  SingularityError(std::size_t pivot, const std::string& what)
      : Error(ErrorCategory::Singularity, what), pivot_(pivot) {}

  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

class CodecError : public Error {
 public:
  explicit CodecError(const std::string& what) : Error(ErrorCategory::Codec, what) {}
};

/// Fewer worker responses than the recovery threshold of the decode.
class InsufficientResponses : public Error {
 public:
  InsufficientResponses(std::size_t needed, std::size_t got);

  std::size_t needed() const noexcept { return needed_; }
  std::size_t got() const noexcept { return got_; }

 private:
  std::size_t needed_;
  std::size_t got_;
};

/// Interpolation residual on a held-out shard exceeded tolerance.
class NumericalDecodeError : public Error {
 public:
  NumericalDecodeError(double residual, double tolerance);
  /// A decode refused before interpolating: `bound` is the a-priori error
  /// estimate that exceeded `tolerance`.
  NumericalDecodeError(const std::string& what, double bound, double tolerance);

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// A d x d system of the ALS update became singular.
class DegeneracyError : public Error {
 public:
  DegeneracyError(std::size_t iteration, const std::string& what);

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

class FeasibilityError : public Error {
 public:
  explicit FeasibilityError(const std::string& what) : Error(ErrorCategory::Feasibility, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::Config, what) {}
};

class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& what) : Error(ErrorCategory::Argument, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::Io, what) {}
};

}  // namespace codedals
