// Copyright 2026 The mmimpute Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace mmimpute {

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

// First `chars` hex digits of the SHA-256; used for short content ids.
std::string short_hash(std::string_view data, std::size_t chars = 16);

// Fast non-cryptographic hash of a float vector's bytes (embedding cache key).
std::uint64_t hash_floats(std::span<const float> values);

}  // namespace mmimpute
