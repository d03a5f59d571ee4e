// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace oppai
{
using Bytes = std::vector<uint8_t>;

struct Hash256
{
    std::array<uint8_t, 32> bytes{};

    friend bool operator==(const Hash256&, const Hash256&) = default;
    friend auto operator<=>(const Hash256&, const Hash256&) = default;
};

Hash256 sha256(std::span<const uint8_t> data) noexcept;
Hash256 sha256(std::string_view data) noexcept;

/// SHA-256 of the 64-byte concatenation `left || right`.
Hash256 sha256_pair(const Hash256& left, const Hash256& right) noexcept;

std::string to_hex(std::span<const uint8_t> data);
inline std::string to_hex(const Hash256& h)
{
    return to_hex(std::span<const uint8_t>(h.bytes));
}

/// Throws Error(ParseError) on a malformed or wrong-length string.
Hash256 hash_from_hex(std::string_view hex);

inline void put_le64(Bytes& out, uint64_t v)
{
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}
}  // namespace oppai
