// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#include <oppai/error.hpp>
#include <oppai/hash.hpp>
#include <oppai/numerics.hpp>
#include <oppai/prng.hpp>

#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_int.hpp>

#include <limits>

using namespace oppai;

namespace
{
Fx raw(int64_t r)
{
    return Fx::from_raw(r);
}
}  // namespace

TEST(FxMul, ExactProduct)
{
    EXPECT_EQ(fx_mul(raw(131072), raw(196608)), raw(393216));
}

TEST(FxMul, FloorsTowardNegativeInfinity)
{
    EXPECT_EQ(fx_mul(raw(-3), raw(2)), raw(-1));
    EXPECT_EQ(fx_mul(raw(3), raw(2)), raw(0));
    EXPECT_EQ(fx_mul(raw(-65536), raw(1)), raw(-1));
}

TEST(FxMul, OverflowTraps)
{
    EXPECT_FALSE(fx_mul(raw(int64_t{1} << 62), raw(int64_t{1} << 20)).has_value());
    EXPECT_FALSE(fx_mul(raw(std::numeric_limits<int64_t>::min()), raw(-65536)).has_value());
    EXPECT_EQ(fx_mul(raw(std::numeric_limits<int64_t>::min()), raw(65536)), raw(std::numeric_limits<int64_t>::min()));
}

TEST(FxAdd, Examples)
{
    EXPECT_EQ(fx_add(raw(65536), raw(65536)), raw(131072));
    EXPECT_EQ(fx_add(raw(-77), raw(0)), raw(-77));
    EXPECT_FALSE(fx_add(raw(std::numeric_limits<int64_t>::max()), raw(1)).has_value());
    EXPECT_FALSE(fx_add(raw(std::numeric_limits<int64_t>::min()), raw(-1)).has_value());
}

TEST(FxMaxRelu, Examples)
{
    EXPECT_EQ(fx_max(raw(-5), raw(3)), raw(3));
    EXPECT_EQ(fx_relu(raw(-1)), raw(0));
    EXPECT_EQ(fx_relu(raw(7)), raw(7));
}

TEST(FxProperties, RandomPairs)
{
    using boost::multiprecision::int128_t;
    Xoshiro256 rng = Xoshiro256::seeded(7);
    for (int i = 0; i < 100000; ++i)
    {
        // Mix full-range and small operands so both trap and non-trap paths run.
        const int shift_a = static_cast<int>(rng.below(63)), shift_b = static_cast<int>(rng.below(63));
        const Fx a = raw(static_cast<int64_t>(rng.next()) >> shift_a);
        const Fx b = raw(static_cast<int64_t>(rng.next()) >> shift_b);
        const auto m1 = fx_mul(a, b), m2 = fx_mul(a, b);
        ASSERT_EQ(m1, m2);
        const int128_t exact = int128_t(a.raw) * int128_t(b.raw);
        if (m1)
        {
            // floor: m * 2^16 <= a*b < (m + 1) * 2^16
            ASSERT_LE(int128_t(m1->raw) * kScale, exact);
            ASSERT_GT((int128_t(m1->raw) + 1) * kScale, exact);
        }
        else
        {
            const int128_t q = exact >= 0 ? exact / kScale : -((-exact + kScale - 1) / kScale);
            ASSERT_TRUE(q > std::numeric_limits<int64_t>::max() || q < std::numeric_limits<int64_t>::min());
        }
        ASSERT_EQ(fx_mul(a, raw(kScale)), a);
        ASSERT_EQ(fx_add(a, b), fx_add(b, a));
        const Fx c = raw(static_cast<int64_t>(rng.next()) >> 3);
        const Fx as = raw(a.raw >> 3), bs = raw(b.raw >> 3);
        ASSERT_EQ(fx_add(*fx_add(as, bs), c), fx_add(as, *fx_add(bs, c)));
    }
}

TEST(FixedTensor, JsonRoundTrip)
{
    const std::vector<int64_t> raws{1, -2, 3, 65536, 0, -65536};
    const auto t = FixedTensor::from_raw({2, 3}, raws);
    EXPECT_EQ(tensor_from_json(to_json(t)), t);
    EXPECT_EQ(canonical_dump(to_json(t)), R"({"data":[1,-2,3,65536,0,-65536],"shape":[2,3]})");
}

TEST(FixedTensor, RejectsLengthMismatch)
{
    const auto j = nlohmann::json::parse(R"({"shape":[2,2],"data":[1,2,3]})");
    try
    {
        tensor_from_json(j);
        FAIL();
    }
    catch (const Error& e)
    {
        EXPECT_EQ(e.code(), Errc::ParseError);
    }
}

TEST(Xoshiro, ReferenceVector)
{
    Xoshiro256 r({1, 2, 3, 4});
    const uint64_t want[] = {11520ULL, 0ULL, 1509978240ULL, 1215971899390074240ULL, 1216172134540287360ULL,
        607988272756665600ULL};
    for (uint64_t w : want)
        EXPECT_EQ(r.next(), w);
}

TEST(Xoshiro, SplitmixSeeding)
{
    uint64_t x = 0;
    EXPECT_EQ(Xoshiro256::splitmix64(x), 0xe220a8397b1dcdafULL);
    Xoshiro256 r = Xoshiro256::seeded(0);
    EXPECT_EQ(r.next(), 11091344671253066420ULL);
    EXPECT_EQ(r.next(), 13793997310169335082ULL);
    EXPECT_EQ(r.next(), 1900383378846508768ULL);
}

TEST(Xoshiro, BelowStaysInRange)
{
    Xoshiro256 r = Xoshiro256::seeded(3);
    for (uint64_t n : {1ULL, 2ULL, 3ULL, 131073ULL, (1ULL << 63) + 1})
        for (int i = 0; i < 1000; ++i)
            ASSERT_LT(r.below(n), n);
}

TEST(Hash, KnownDigests)
{
    EXPECT_EQ(to_hex(sha256(std::string_view(""))), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(to_hex(sha256(std::string_view("abc"))), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    const Hash256 h = sha256(std::string_view("abc"));
    EXPECT_EQ(hash_from_hex(to_hex(h)), h);
}
