#pragma once

#include <stdexcept>
#include <string>

namespace radks {

/// Raised when an iterative process stops without meeting its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by direct solvers on a zero (or numerically zero) pivot.
class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an object is in a state its consumer cannot accept,
/// e.g. an orbital that is not normalized.
class InvalidStateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Broken internal invariant.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace radks
