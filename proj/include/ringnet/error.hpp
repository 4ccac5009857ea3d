#pragma once

#include <stdexcept>
#include <string>

namespace ringnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes or parameter lengths do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A NaN or infinity appeared where only finite values are allowed.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Precondition on a value (not a shape) was violated.
class ValueError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A loaded object violates one or more of its invariants.
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace ringnet
