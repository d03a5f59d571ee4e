// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#include "testkit.hpp"

#include <oppai/econ.hpp>
#include <oppai/error.hpp>

#include <gtest/gtest.h>

namespace oppai
{
namespace
{
template <class F>
void expect_errc(Errc code, F&& f)
{
    try
    {
        f();
        ADD_FAILURE() << "expected " << to_string(code);
    }
    catch (const Error& e)
    {
        EXPECT_EQ(e.code(), code) << e.what();
    }
}

Rational q(int64_t n, int64_t d = 1)
{
    return Rational(n, d);
}

ModelSpec dense_segment(size_t k, size_t m, uint64_t seed)
{
    return generate_weights(ModelSpec{{k}, {LayerSpec::dense(m)}}, seed);
}

TEST(Econ, AttackCostExamples)
{
    EXPECT_EQ(attack_cost({2, 10, 100, q(1, 2)}), 1000);
    EXPECT_EQ(attack_cost({7, 3, 11, 1}), 0);
    EXPECT_TRUE(attack_cost_warning({7, 3, 11, 1}));
    EXPECT_FALSE(attack_cost_warning({7, 3, 11, q(1, 2)}));
    const Rational x = parameter_count(figure1_skeleton());
    EXPECT_EQ(attack_cost({1, 1, x, 0}), 34826);
}

TEST(Econ, ValidateRejectsOutOfRange)
{
    expect_errc(Errc::InvalidTransition, [] { validate(EconParams{-1, 1, 1, 0}); });
    expect_errc(Errc::InvalidTransition, [] { validate(EconParams{1, 0, 1, 0}); });
    expect_errc(Errc::InvalidTransition, [] { validate(EconParams{1, 1, 0, 0}); });
    expect_errc(Errc::InvalidTransition, [] { validate(EconParams{1, 1, 1, q(5, 4)}); });
    expect_errc(Errc::InvalidTransition, [] { validate(EconParams{1, 1, 1, q(-1, 4)}); });
    validate(EconParams{0, 1, 1, 1});
}

TEST(Econ, PriceExamples)
{
    EXPECT_EQ(price_for_constant_cost(1000, 10, 100, 0), 1);
    EXPECT_EQ(price_for_constant_cost(1000, 10, 100, q(1, 2)), 2);
    EXPECT_EQ(price_for_constant_cost(1000, 10, 100, q(3, 4)), 4);
    expect_errc(Errc::FullyPrivate, [] { price_for_constant_cost(1000, 10, 100, 1); });
    expect_errc(Errc::InvalidTransition, [] { price_for_constant_cost(0, 10, 100, 0); });
}

TEST(Econ, ExtractionThreshold)
{
    EXPECT_EQ(extraction_threshold({1, 10, 100, q(1, 2)}), 500);
    EXPECT_EQ(extraction_threshold({1, 1, 10, q(1, 3)}), 7);
    EXPECT_EQ(extraction_threshold({1, 1, 10, 1}), 0);
}

TEST(Econ, CapAllowsUpToLimit)
{
    QueryLedger ledger;
    const InferenceCap cap{5};
    for (int i = 0; i < 5; ++i)
        EXPECT_EQ(enforce_cap(cap, ledger, "a"), CapDecision::Allow);
    EXPECT_EQ(enforce_cap(cap, ledger, "a"), CapDecision::Deny);
    EXPECT_EQ(ledger.count("a"), 5u);
    EXPECT_EQ(enforce_cap(cap, ledger, "b"), CapDecision::Allow);

    QueryLedger none;
    for (int i = 0; i < 3; ++i)
        EXPECT_EQ(enforce_cap(InferenceCap{0}, none, "a"), CapDecision::Deny);
    EXPECT_EQ(none.count("a"), 0u);
}

TEST(Econ, PolicyPrice)
{
    EXPECT_EQ(policy_price(InferenceCap{3}, 5, 10, 100, q(1, 2)), 5);
    EXPECT_EQ(policy_price(PricedPrivacy{1000}, 5, 10, 100, q(1, 2)), 2);
    expect_errc(Errc::FullyPrivate, [] { policy_price(PricedPrivacy{1000}, 5, 10, 100, 1); });
}

TEST(Econ, ExtractsSmallDenseExactly)
{
    const auto seg = dense_segment(4, 2, 9);
    const auto e = extract_linear_segment(make_oracle(seg));
    EXPECT_EQ(e.queries, 5u);
    EXPECT_EQ(e.kernel, *seg.layers[0].kernel);
    EXPECT_EQ(e.bias, *seg.layers[0].bias);
}

TEST(Econ, OracleHidesWeights)
{
    const auto o = make_oracle(dense_segment(4, 2, 9));
    EXPECT_FALSE(o.structure.layers[0].kernel);
    EXPECT_FALSE(o.structure.layers[0].bias);
}

TEST(Econ, QueryCountGrowsLinearly)
{
    for (size_t k : {2u, 4u, 8u, 16u, 32u})
    {
        const auto seg = dense_segment(k, 3, k);
        const auto e = extract_linear_segment(make_oracle(seg));
        EXPECT_EQ(e.queries, k + 1) << k;
        EXPECT_EQ(e.kernel, *seg.layers[0].kernel) << k;
        EXPECT_EQ(e.bias, *seg.layers[0].bias) << k;

        // The recovered layer reproduces the oracle on fresh inputs.
        Xoshiro256 rng = Xoshiro256::seeded(k);
        ModelSpec rebuilt = seg;
        rebuilt.layers[0].kernel = e.kernel;
        rebuilt.layers[0].bias = e.bias;
        const auto oracle = make_oracle(seg);
        for (int i = 0; i < 5; ++i)
        {
            const auto in = testkit::random_input(rng, Shape{k});
            EXPECT_EQ(infer(rebuilt, in), oracle.query(in));
        }
    }
}

TEST(Econ, CapOneShortStopsExtraction)
{
    for (size_t k : {2u, 4u, 8u, 16u, 32u})
    {
        QueryLedger ledger;
        const InferenceCap cap{k};
        expect_errc(Errc::CapExceeded,
            [&] { extract_linear_segment(make_oracle(dense_segment(k, 2, 1)), &cap, &ledger); });
        EXPECT_EQ(ledger.count("attacker"), k);

        QueryLedger enough;
        const InferenceCap exact{k + 1};
        EXPECT_EQ(extract_linear_segment(make_oracle(dense_segment(k, 2, 1)), &exact, &enough).queries, k + 1);
    }
}

// With n = 1 query per parameter row and the whole segment exposed, the
// threshold is k + 1 and a cap one below it must stop the attack.
TEST(Econ, ThresholdCapStopsExtraction)
{
    const size_t k = 6;
    const auto seg = dense_segment(k, 2, 4);
    const Rational n = q(static_cast<int64_t>(k + 1), static_cast<int64_t>(parameter_count(seg)));
    const EconParams params{1, n, static_cast<int64_t>(parameter_count(seg)), 0};
    const Rational thr = extraction_threshold(params);
    ASSERT_EQ(thr, static_cast<int64_t>(k + 1));
    const InferenceCap cap{static_cast<uint64_t>(thr) - 1};
    QueryLedger ledger;
    expect_errc(Errc::CapExceeded, [&] { extract_linear_segment(make_oracle(seg), &cap, &ledger); });
}

TEST(Econ, NonLinearSegmentsRefused)
{
    const auto relu = generate_weights(ModelSpec{{4}, {LayerSpec::dense(2, Activation::Relu)}}, 1);
    expect_errc(Errc::NotLinear, [&] { extract_linear_segment(make_oracle(relu)); });
    const auto two = generate_weights(ModelSpec{{4}, {LayerSpec::dense(3), LayerSpec::dense(2)}}, 1);
    expect_errc(Errc::NotLinear, [&] { extract_linear_segment(make_oracle(two)); });
    expect_errc(Errc::NotLinear, [&] {
        extract_linear_segment(make_oracle(generate_weights(
            ModelSpec{{6, 6, 1}, {LayerSpec::conv2d(2, 3, 3)}}, 1)));
    });
}

TEST(Econ, LinearityProperties)
{
    Xoshiro256 rng = Xoshiro256::seeded(2026);
    auto pick = [&](int64_t lo, int64_t hi) { return lo + static_cast<int64_t>(rng.next() % uint64_t(hi - lo + 1)); };
    for (int i = 0; i < 500; ++i)
    {
        const Rational c = q(pick(0, 50), pick(1, 9));
        const Rational n = q(pick(1, 50), pick(1, 9));
        const Rational x = q(pick(1, 100000), 1);
        const Rational p = q(pick(0, 16), 16);
        const Rational k = q(pick(1, 9), pick(1, 9));
        const EconParams base{c, n, x, p};
        const Rational a = attack_cost(base);
        EXPECT_EQ(a, c * n * (1 - p) * x);
        EXPECT_EQ(attack_cost({c * k, n, x, p}), a * k);
        EXPECT_EQ(attack_cost({c, n * k, x, p}), a * k);
        EXPECT_EQ(attack_cost({c, n, x * k, p}), a * k);
        // affine in p: equal steps in p give equal drops
        if (p <= q(14, 16))
        {
            const Rational d1 = a - attack_cost({c, n, x, p + q(1, 16)});
            const Rational d2 = attack_cost({c, n, x, p + q(1, 16)}) - attack_cost({c, n, x, p + q(2, 16)});
            EXPECT_EQ(d1, d2);
            EXPECT_GE(d1, 0);
        }
    }
}

TEST(Econ, PriceRoundTripIsExact)
{
    for (const Rational& p : {q(0), q(1, 4), q(1, 2), q(3, 4), q(99, 100), q(1, 3)})
    {
        for (const Rational& t : {q(1), q(1000), q(7, 3), q(123456789)})
        {
            for (const Rational& x : {q(1), q(34826), q(859520964)})
            {
                const Rational n = q(3, 7);
                const Rational c = price_for_constant_cost(t, n, x, p);
                EXPECT_EQ(attack_cost({c, n, x, p}), t);
            }
        }
    }
}

TEST(Econ, ParamsJsonIsExact)
{
    const auto j = to_json(EconParams{q(1, 3), 10, 100, q(3, 4)});
    EXPECT_EQ(j["c"], "1/3");
    EXPECT_EQ(j["p"], "3/4");
}
}  // namespace
}  // namespace oppai
