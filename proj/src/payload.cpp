// Copyright 2026 The mmimpute Authors
// SPDX-License-Identifier: Apache-2.0
#include "mmimpute/payload.hpp"

#include <atomic>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mmimpute/error.hpp"

namespace mmimpute {
namespace {

template <typename U>
void put_le(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
  }
}

template <typename U>
U get_le(const char* p) {
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    value |= static_cast<U>(static_cast<unsigned char>(p[i])) << (8 * i);
  }
  return value;
}

template <typename T, typename Bits>
std::string encode_impl(std::span<const T> values, const char (&magic)[4]) {
  std::string out;
  out.reserve(8 + values.size() * sizeof(T));
  out.append(magic, 4);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(values.size()));
  for (T v : values) put_le<Bits>(out, std::bit_cast<Bits>(v));
  return out;
}

template <typename T, typename Bits>
std::vector<T> decode_impl(std::string_view& bytes, const char (&magic)[4]) {
  if (bytes.size() < 8) throw ParseError("payload: truncated header");
  if (std::memcmp(bytes.data(), magic, 4) != 0) throw ParseError("payload: bad magic");
  const auto dim = get_le<std::uint32_t>(bytes.data() + 4);
  const std::size_t need = 8 + static_cast<std::size_t>(dim) * sizeof(T);
  if (bytes.size() < need) {
    throw ParseError("payload: expected " + std::to_string(dim) + " elements, file too short");
  }
  std::vector<T> values(dim);
  for (std::uint32_t i = 0; i < dim; ++i) {
    values[i] = std::bit_cast<T>(get_le<Bits>(bytes.data() + 8 + i * sizeof(T)));
  }
  bytes.remove_prefix(need);
  return values;
}

}  // namespace

std::string encode_payload(std::span<const float> values) {
  return encode_impl<float, std::uint32_t>(values, kPayloadMagic);
}

Vector decode_payload(std::string_view bytes) {
  auto values = decode_impl<float, std::uint32_t>(bytes, kPayloadMagic);
  if (!bytes.empty()) throw ParseError("payload: trailing bytes after vector");
  return values;
}

std::string encode_payload_f64(std::span<const double> values) {
  return encode_impl<double, std::uint64_t>(values, kPayloadMagicF64);
}

std::vector<double> decode_payload_f64(std::string_view bytes) {
  auto values = decode_impl<double, std::uint64_t>(bytes, kPayloadMagicF64);
  if (!bytes.empty()) throw ParseError("payload: trailing bytes after vector");
  return values;
}

std::vector<double> consume_payload_f64(std::string_view& bytes) {
  return decode_impl<double, std::uint64_t>(bytes, kPayloadMagicF64);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  static std::atomic<unsigned> counter{0};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp" + std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Vector read_payload(const std::filesystem::path& path) {
  try {
    return decode_payload(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_payload(const std::filesystem::path& path, std::span<const float> values) {
  write_file_atomic(path, encode_payload(values));
}

}  // namespace mmimpute
