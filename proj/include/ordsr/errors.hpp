#pragma once

#include <stdexcept>
#include <string>

namespace ordsr {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Incompatible tensor or image shapes.
struct DimensionError : Error {
  using Error::Error;
};

// Out-of-range scalar argument (block size, threshold, scale, ...).
struct ParameterError : Error {
  using Error::Error;
};

// Invalid or inconsistent run configuration.
struct ConfigError : Error {
  using Error::Error;
};

// Unreadable or malformed input data.
struct DataError : Error {
  using Error::Error;
};

// NaN/Inf encountered during training or evaluation.
struct NumericalError : Error {
  using Error::Error;
};

// A cached forward trace that no longer matches the parameters.
struct ConsistencyError : Error {
  using Error::Error;
};

}  // namespace ordsr
