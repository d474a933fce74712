#pragma once

#include <stdexcept>
#include <string>

namespace bunca {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or entity-count disagreement between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A forward value became NaN/Inf, or training diverged.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent dataset files.
class DataError : public Error {
 public:
  using Error::Error;
};

// Checkpoint container could not be decoded.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace bunca
