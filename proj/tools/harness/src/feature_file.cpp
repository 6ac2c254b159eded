// Copyright 2026 The ipccp Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ipccp/harness/feature_file.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "ipccp/error.hpp"

namespace ipccp::harness {
namespace {

constexpr std::uint8_t kMagic[4] = {'S', 'P', 'F', '1'};

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(std::span<const std::uint8_t> in, std::size_t offset, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(in[offset + i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_features(const Matrix& x, ElementType type) {
  const auto elem = static_cast<std::uint32_t>(type);
  std::vector<std::uint8_t> out;
  out.reserve(kFeatureHeaderBytes + x.size() * elem);
  for (std::uint8_t b : kMagic) out.push_back(b);
  put_le(out, x.rows(), 4);
  put_le(out, x.cols(), 4);
  put_le(out, elem, 4);
  for (std::size_t j = 0; j < x.cols(); ++j) {
    for (std::size_t i = 0; i < x.rows(); ++i) {
      if (type == ElementType::kFloat32) {
        put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(x(i, j))), 4);
      } else {
        put_le(out, std::bit_cast<std::uint64_t>(x(i, j)), 8);
      }
    }
  }
  return out;
}

Matrix decode_features(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFeatureHeaderBytes || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw Error(ErrorCode::kFormat, "not a feature file (missing SPF1 header)");
  }
  const auto d = static_cast<std::size_t>(get_le(bytes, 4, 4));
  const auto n = static_cast<std::size_t>(get_le(bytes, 8, 4));
  const auto tag = static_cast<std::uint32_t>(get_le(bytes, 12, 4));
  if (tag != 4 && tag != 8) throw Error(ErrorCode::kFormat, "unknown element tag " + std::to_string(tag));
  if (d == 0 || n == 0) throw Error(ErrorCode::kFormat, "empty descriptor matrix");
  const std::size_t expected = kFeatureHeaderBytes + d * n * tag;
  if (bytes.size() != expected) {
    throw Error(ErrorCode::kFormat, "payload length mismatch: file has " +
                                        std::to_string(bytes.size()) + " bytes, header implies " +
                                        std::to_string(expected));
  }
  Matrix x(d, n);
  std::size_t offset = kFeatureHeaderBytes;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < d; ++i, offset += tag) {
      const double v =
          tag == 4 ? static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(get_le(bytes, offset, 4))))
                   : std::bit_cast<double>(get_le(bytes, offset, 8));
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kFormat, "non-finite value at (" + std::to_string(i) + ", " +
                                            std::to_string(j) + ")");
      }
      x(i, j) = v;
    }
  }
  return x;
}

void write_features(const std::filesystem::path& path, const Matrix& x, ElementType type) {
  const auto bytes = encode_features(x, type);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

Matrix read_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), {}};
  try {
    return decode_features(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

}  // namespace ipccp::harness
