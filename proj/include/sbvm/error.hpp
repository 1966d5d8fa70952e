#pragma once

#include <stdexcept>
#include <string>

namespace sbvm {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape disagreement between a network, a point, or a design matrix.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument or configuration value.
class ValueError : public Error {
 public:
  using Error::Error;
};

/// A linear-algebra routine failed; the message carries the diagnostic.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed file or document.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace sbvm
