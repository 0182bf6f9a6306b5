#pragma once

#include <stdexcept>
#include <string>

namespace cht {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on arguments (shapes, ranges, feasibility) was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Reading or writing an external file failed or the file was malformed.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A quantity requested from a degenerate input is undefined (e.g. a ratio over an empty set).
class UndefinedResult : public Error {
 public:
  using Error::Error;
};

/// Training diverged (non-finite loss or activations).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace cht
