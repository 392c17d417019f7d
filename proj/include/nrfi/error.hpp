#pragma once

#include <stdexcept>
#include <string>

namespace nrfi {

/// Base class for every error raised by the library. The message is meant to
/// be shown to a user as-is.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (CSV cells, dataset shapes).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A serialized model or config that fails to parse or validate.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Vector or matrix dimensions that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

}  // namespace nrfi
