// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#include <oppai/error.hpp>
#include <oppai/hash.hpp>

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <cstring>

namespace oppai
{
std::string_view to_string(Errc code) noexcept
{
    switch (code)
    {
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::InferenceFault: return "InferenceFault";
    case Errc::UnsupportedLayer: return "UnsupportedLayer";
    case Errc::AlreadyHalted: return "AlreadyHalted";
    case Errc::StepBudgetExceeded: return "StepBudgetExceeded";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::InvalidPartition: return "InvalidPartition";
    case Errc::ShapeBreak: return "ShapeBreak";
    case Errc::ZeroTotal: return "ZeroTotal";
    case Errc::NoDisagreement: return "NoDisagreement";
    case Errc::NotYourTurn: return "NotYourTurn";
    case Errc::SessionClosed: return "SessionClosed";
    case Errc::PrematureArbitration: return "PrematureArbitration";
    case Errc::InsufficientFunds: return "InsufficientFunds";
    case Errc::InvalidTransition: return "InvalidTransition";
    case Errc::UnknownTask: return "UnknownTask";
    case Errc::ScenarioInvalid: return "ScenarioInvalid";
    case Errc::FullyPrivate: return "FullyPrivate";
    case Errc::CapExceeded: return "CapExceeded";
    case Errc::NotLinear: return "NotLinear";
    case Errc::ParseError: return "ParseError";
    case Errc::MonotonicityViolation: return "MonotonicityViolation";
    case Errc::Degenerate: return "Degenerate";
    case Errc::UnknownPrefix: return "UnknownPrefix";
    case Errc::NoFeasiblePrefix: return "NoFeasiblePrefix";
    case Errc::ChecksumMismatch: return "ChecksumMismatch";
    case Errc::InvariantBreach: return "InvariantBreach";
    }
    return "Unknown";
}

Hash256 sha256(std::span<const uint8_t> data) noexcept
{
    Hash256 h;
    SHA256(data.data(), data.size(), h.bytes.data());
    return h;
}

Hash256 sha256(std::string_view data) noexcept
{
    return sha256(std::span<const uint8_t>(
        reinterpret_cast<const uint8_t*>(data.data()), data.size()));
}

Hash256 sha256_pair(const Hash256& left, const Hash256& right) noexcept
{
    uint8_t buf[64];
    std::memcpy(buf, left.bytes.data(), 32);
    std::memcpy(buf + 32, right.bytes.data(), 32);
    Hash256 h;
    SHA256(buf, sizeof(buf), h.bytes.data());
    return h;
}

std::string to_hex(std::span<const uint8_t> data)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string s;
    s.reserve(data.size() * 2);
    for (const auto b : data)
    {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0xf]);
    }
    return s;
}

Hash256 hash_from_hex(std::string_view hex)
{
    if (hex.size() != 64)
        throw Error(Errc::ParseError, "hash hex must be 64 characters");
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9')
            return c - '0';
        if (c >= 'a' && c <= 'f')
            return c - 'a' + 10;
        if (c >= 'A' && c <= 'F')
            return c - 'A' + 10;
        throw Error(Errc::ParseError, "invalid hex digit");
    };
    Hash256 h;
    for (size_t i = 0; i < 32; ++i)
        h.bytes[i] = static_cast<uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
    return h;
}
}  // namespace oppai
