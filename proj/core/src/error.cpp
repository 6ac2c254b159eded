// Copyright 2026 The ipccp Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ipccp/error.hpp"

namespace ipccp {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNotSymmetric: return "NotSymmetric";
    case ErrorCode::kNonConvergence: return "NonConvergence";
    case ErrorCode::kNotPsd: return "NotPSD";
    case ErrorCode::kZeroTrace: return "ZeroTrace";
    case ErrorCode::kDivergence: return "Divergence";
    case ErrorCode::kPreconditionViolated: return "PreconditionViolated";
    case ErrorCode::kBadDimension: return "BadDimension";
    case ErrorCode::kBadLength: return "BadLength";
    case ErrorCode::kConfigMismatch: return "ConfigMismatch";
    case ErrorCode::kTapeMismatch: return "TapeMismatch";
    case ErrorCode::kNumericalMismatch: return "NumericalMismatch";
    case ErrorCode::kFormat: return "FormatError";
    case ErrorCode::kIo: return "IoError";
  }
  return "Unknown";
}

}  // namespace ipccp
