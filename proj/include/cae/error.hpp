// Copyright 2026 The caecodec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cae {

enum class ErrorKind {
  kShapeMismatch,
  kInvalidArgument,
  kNonFinite,
  kCorruptStream,
  kUnsupportedVersion,
  kRateTooSmall,
  kIo,
  kEmptyDataset,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kShapeMismatch: return "shape mismatch";
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kNonFinite: return "non-finite value";
    case ErrorKind::kCorruptStream: return "corrupt stream";
    case ErrorKind::kUnsupportedVersion: return "unsupported version";
    case ErrorKind::kRateTooSmall: return "rate too small";
    case ErrorKind::kIo: return "i/o error";
    case ErrorKind::kEmptyDataset: return "empty dataset";
  }
  return "error";
}

// All library failures are reported through this exception. `kind()` is the
// machine-readable category; what() carries the human-readable context.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace cae
