// Copyright 2026 The mmimpute Authors
// SPDX-License-Identifier: Apache-2.0
#include "mmimpute/hash.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <stdexcept>

#include "mmimpute/rng.hpp"

namespace mmimpute {

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256: EVP_Digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string short_hash(std::string_view data, std::size_t chars) {
  return sha256_hex(data).substr(0, chars);
}

std::uint64_t hash_floats(std::span<const float> values) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ values.size();
  for (float v : values) {
    h ^= std::bit_cast<std::uint32_t>(v);
    h = mix64(h);
  }
  return h;
}

}  // namespace mmimpute
