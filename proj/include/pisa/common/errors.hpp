#pragma once

#include <stdexcept>
#include <string>

namespace pisa {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible matrix/vector dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

// An operation was called in the wrong lifecycle state (no forward cache, frozen component, ...).
class StateError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed or degenerate input data.
class DataError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Metric undefined for the given sample (e.g. AUC with a single class).
class MetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace pisa
