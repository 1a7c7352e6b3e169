#pragma once

#include <stdexcept>
#include <string>

namespace semcs {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied value violates an operation's precondition.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Missing weight files, unknown model ids, malformed config documents.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, solver failures.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// The spectral partition did not yield a usable foreground/background split.
class DegenerateMask : public Error {
 public:
  using Error::Error;
};

}  // namespace semcs
