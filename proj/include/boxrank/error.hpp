// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace boxrank {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shapes or buffer lengths disagree.
struct DimensionError : Error {
  using Error::Error;
};

// Degenerate or out-of-range boxes, empty rois, bad image dims.
struct GeometryError : Error {
  using Error::Error;
};

// Inconsistent or out-of-range configuration values.
struct ConfigError : Error {
  using Error::Error;
};

// API called in the wrong order (e.g. backward before forward).
struct StateError : Error {
  using Error::Error;
};

// Malformed files, unknown ids, broken records.
struct DataError : Error {
  using Error::Error;
};

// Filesystem failures.
struct IoError : Error {
  using Error::Error;
};

// A sampling procedure exhausted its retry budget.
struct SamplingError : Error {
  using Error::Error;
};

// Labels outside the supported set.
struct LabelError : Error {
  using Error::Error;
};

// Training aborted (divergence guard, empty pools).
struct TrainingError : Error {
  using Error::Error;
};

// Non-finite values detected while checks are enabled.
struct NumericError : Error {
  using Error::Error;
};

template <typename... Args>
std::string msg(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

}  // namespace boxrank
