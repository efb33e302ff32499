//
// GCP - generalized canonical polyadic tensor decomposition
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gcp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Index outside the tensor's index set.
class RangeError : public Error {
public:
  using Error::Error;
};

/// Invalid mode number.
class ModeError : public Error {
public:
  using Error::Error;
};

/// Incompatible sizes, ranks or vector lengths.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// Data value outside the loss's data domain, or an unsupported loss for an
/// operation.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Model value below the loss's feasible lower bound.
class FeasibilityError : public Error {
public:
  using Error::Error;
};

/// Non-finite objective or gradient.
class NumericalError : public Error {
public:
  using Error::Error;
};

/// Dense size exceeds the configured element budget.
class CapacityError : public Error {
public:
  using Error::Error;
};

/// Not enough entries available to satisfy a sampling request.
class CountError : public Error {
public:
  using Error::Error;
};

/// Caller broke an API precondition (e.g. missing weights).
class ContractError : public Error {
public:
  using Error::Error;
};

class ParseError : public Error {
public:
  ParseError(const std::string &what, std::size_t line)
      : Error(line == 0 ? what
                        : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  /// 1-based line number, 0 when not tied to a line.
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

}  // namespace gcp
