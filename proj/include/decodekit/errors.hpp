#pragma once

#include <stdexcept>
#include <string>

namespace decodekit {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file could not be parsed. Carries the 1-based row/column of the
/// offending cell when one is known (0 otherwise).
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t row = 0, std::size_t column = 0)
      : Error(position_prefix(row, column) + what), row_(row), column_(column) {}

  /// Same position, message prefixed with `context` (typically a path).
  FormatError(const std::string& context, const FormatError& inner)
      : Error(context + ": " + inner.what()), row_(inner.row_), column_(inner.column_) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string position_prefix(std::size_t row, std::size_t column) {
    if (row == 0 && column == 0) return {};
    std::string s = "row " + std::to_string(row);
    if (column != 0) s += ", column " + std::to_string(column);
    return s + ": ";
  }

  std::size_t row_;
  std::size_t column_;
};

/// A value violates a documented invariant (duplicate id, non-finite cell, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Operand shapes are incompatible.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// The linear system could not be solved reliably.
class SolverError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace decodekit
