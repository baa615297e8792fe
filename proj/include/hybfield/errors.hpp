// Copyright 2026 The hybfield Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace hybfield {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Configuration and input files.
struct ConfigError : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};
struct MissingFieldError : Error {
  using Error::Error;
};
struct SingularMatrixError : Error {
  using Error::Error;
};
struct ImageError : Error {
  using Error::Error;
};

// Checkpoints.
struct CheckpointError : Error {
  using Error::Error;
};
struct CheckpointVersionError : CheckpointError {
  using CheckpointError::CheckpointError;
};
struct CheckpointDimensionError : CheckpointError {
  using CheckpointError::CheckpointError;
};
struct CheckpointTruncatedError : CheckpointError {
  using CheckpointError::CheckpointError;
};

// Raised when a gradient or loss stops being finite during training.
struct NonFiniteError : Error {
  using Error::Error;
};

}  // namespace hybfield
