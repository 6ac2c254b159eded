// Copyright 2026 The ipccp Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef IPCCP_HARNESS_FEATURE_FILE_HPP_
#define IPCCP_HARNESS_FEATURE_FILE_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ipccp/matrix.hpp"

namespace ipccp::harness {

/// Binary descriptor file:
///
///   "SPF1" | d u32 | n u32 | tag u32 | payload
///
/// All integers little-endian. The tag is the element size in bytes (4 for
/// f32, 8 for f64); the payload is the d×n matrix in column-major order.
/// f32 payloads are widened to double on load.
enum class ElementType : std::uint32_t { kFloat32 = 4, kFloat64 = 8 };

inline constexpr std::size_t kFeatureHeaderBytes = 16;

std::vector<std::uint8_t> encode_features(const Matrix& x,
                                          ElementType type = ElementType::kFloat64);

/// Throws kFormat on bad magic, unknown tag, wrong payload length, zero
/// dimensions or non-finite values.
Matrix decode_features(std::span<const std::uint8_t> bytes);

/// Throws kIo when the file cannot be written.
void write_features(const std::filesystem::path& path, const Matrix& x,
                    ElementType type = ElementType::kFloat64);

/// Throws kIo when the file cannot be read, kFormat as decode_features.
Matrix read_features(const std::filesystem::path& path);

}  // namespace ipccp::harness

#endif  // IPCCP_HARNESS_FEATURE_FILE_HPP_
