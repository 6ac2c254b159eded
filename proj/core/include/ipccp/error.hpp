// Copyright 2026 The ipccp Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef IPCCP_ERROR_HPP_
#define IPCCP_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace ipccp {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kNotSymmetric,
  kNonConvergence,
  kNotPsd,
  kZeroTrace,
  kDivergence,
  kPreconditionViolated,
  kBadDimension,
  kBadLength,
  kConfigMismatch,
  kTapeMismatch,
  kNumericalMismatch,
  kFormat,
  kIo,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so that
/// callers (and the CLI exit-code mapping) can branch without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace ipccp

#endif  // IPCCP_ERROR_HPP_
