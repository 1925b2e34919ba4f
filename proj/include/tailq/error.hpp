#pragma once

#include <stdexcept>
#include <string>

namespace tailq {

// Bad or inconsistent input data (trace files, unit sets, empty stores).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A workload driver failed to deliver a sample (dead child, protocol
// violation, exhausted replay).
class DriverError : public DataError {
 public:
  using DataError::DataError;
};

// Invalid configuration values or unknown configuration keys.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tailq
