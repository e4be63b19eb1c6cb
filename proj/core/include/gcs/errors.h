#pragma once

#include <stdexcept>
#include <string>

namespace gcs {

// Error categories. The CLI maps ConfigError -> 2, DataError -> 3,
// NumericError -> 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class InvalidSelectionError : public DataError {
 public:
  using DataError::DataError;
};

class UnknownDeviceError : public DataError {
 public:
  using DataError::DataError;
};

class InfeasibleError : public DataError {
 public:
  using DataError::DataError;
};

class EmptyShardError : public DataError {
 public:
  using DataError::DataError;
};

class ShapeError : public DataError {
 public:
  using DataError::DataError;
};

class StaleArtifactError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace gcs
