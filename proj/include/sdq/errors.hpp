// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sdq {

/// Operand shapes are incompatible for the requested operation.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A block holds more nonzeros than the N:M pattern admits.
class PatternViolation : public std::runtime_error {
 public:
  PatternViolation(const std::string& what, std::size_t row, std::size_t block)
      : std::runtime_error(what), row_(row), block_(block) {}
  std::size_t row() const noexcept { return row_; }
  std::size_t block() const noexcept { return block_; }

 private:
  std::size_t row_;
  std::size_t block_;
};

/// Malformed configuration name; `position()` is the 0-based offending offset.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Well-formed but internally inconsistent configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Container or manifest I/O failure.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sdq
