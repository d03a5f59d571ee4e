// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>

namespace oppai
{
/// xoshiro256** 1.0 (Blackman & Vigna). Seeded by running splitmix64 over the
/// 64-bit seed four times, as the reference implementation recommends.
class Xoshiro256
{
public:
    explicit constexpr Xoshiro256(std::array<uint64_t, 4> state) noexcept : s_(state) {}

    static constexpr Xoshiro256 seeded(uint64_t seed) noexcept
    {
        std::array<uint64_t, 4> st{};
        uint64_t x = seed;
        for (auto& word : st)
            word = splitmix64(x);
        return Xoshiro256(st);
    }

    static constexpr uint64_t splitmix64(uint64_t& x) noexcept
    {
        x += 0x9e3779b97f4a7c15ULL;
        uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    constexpr uint64_t next() noexcept
    {
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Unbiased draw in [0, n): values in the top partial block of the 2^64
    /// range (the last 2^64 mod n values) are rejected and redrawn.
    constexpr uint64_t below(uint64_t n) noexcept
    {
        const uint64_t rem = (0 - n) % n;  // 2^64 mod n
        if (rem == 0)
            return next() % n;
        const uint64_t accept_below = 0 - rem;
        for (;;)
        {
            const uint64_t u = next();
            if (u < accept_below)
                return u % n;
        }
    }

    /// Uniform integer in [lo, hi].
    constexpr int64_t uniform(int64_t lo, int64_t hi) noexcept
    {
        return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo) + 1));
    }

private:
    static constexpr uint64_t rotl(uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

    std::array<uint64_t, 4> s_;
};
}  // namespace oppai
