#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace sketchls {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand dimensions do not fit together.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A declarative description (sketch, problem, options, benchmark config)
/// violates its invariants.
class SpecError : public Error {
 public:
  using Error::Error;
};

/// A nonzero optimal residual was requested but no direction orthogonal to
/// range(A) exists (m == n).
class InfeasibleResidualError : public SpecError {
 public:
  using SpecError::SpecError;
};

/// A triangular factor is (numerically) singular. `column()` is the zero-based
/// index of the offending diagonal entry.
class SingularFactorError : public Error {
 public:
  SingularFactorError(const std::string& what, std::ptrdiff_t column)
      : Error(what), column_(column) {}

  std::ptrdiff_t column() const noexcept { return column_; }

 private:
  std::ptrdiff_t column_;
};

/// NaN or Inf appeared inside an iterative method.
class NumericalBreakdownError : public Error {
 public:
  using Error::Error;
};

/// A test-scale helper was asked to allocate beyond its guard.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// A metric is undefined for its input (e.g. relative error against zero).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

/// Reading or writing a file failed. The path is part of the message.
class FileError : public Error {
 public:
  FileError(const std::string& what, std::string path)
      : Error(what + ": " + path), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Malformed file content.
class ParseError : public FileError {
 public:
  using FileError::FileError;
};

}  // namespace sketchls
