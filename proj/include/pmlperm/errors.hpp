#pragma once

#include <stdexcept>
#include <string>

namespace pmlperm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree (non-square input, mismatched domain sizes).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An exact routine was asked to run beyond its hard size guard.
class SizeLimitError : public Error {
 public:
  using Error::Error;
};

/// A precondition on the values of an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace pmlperm
