// Copyright 2026 The mmimpute Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mmimpute {

using Vector = std::vector<float>;

// Feature-vector file layout (all little-endian):
//   bytes 0..3   magic, ASCII "MMPV"
//   bytes 4..7   uint32 dim
//   bytes 8..    dim x float32
// The double-precision variant uses magic "MMPD" and float64 elements; it is
// only used for checkpoint arrays so restored training is bit-identical.
inline constexpr char kPayloadMagic[4] = {'M', 'M', 'P', 'V'};
inline constexpr char kPayloadMagicF64[4] = {'M', 'M', 'P', 'D'};

std::string encode_payload(std::span<const float> values);
Vector decode_payload(std::string_view bytes);

std::string encode_payload_f64(std::span<const double> values);
std::vector<double> decode_payload_f64(std::string_view bytes);

// Decodes one array from the front of `bytes` and advances it past the array.
std::vector<double> consume_payload_f64(std::string_view& bytes);

Vector read_payload(const std::filesystem::path& path);
void write_payload(const std::filesystem::path& path, std::span<const float> values);

// Writes to a sibling temp file and renames, so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace mmimpute
