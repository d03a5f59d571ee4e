// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#include <oppai/econ.hpp>
#include <oppai/error.hpp>
#include <oppai/fpvm.hpp>

namespace oppai
{
void validate(const EconParams& e)
{
    if (e.c < 0 || e.inferences_per_unit <= 0 || e.x <= 0 || e.p < 0 || e.p > 1)
        throw Error(Errc::InvalidTransition, "need c >= 0, n > 0, x > 0 and 0 <= p <= 1");
}

Rational attack_cost(const EconParams& e)
{
    validate(e);
    return e.c * e.inferences_per_unit * (1 - e.p) * e.x;
}

std::optional<std::string> attack_cost_warning(const EconParams& e)
{
    if (e.p == 1)
        return std::string("p = 1: no segment is exposed, so there is nothing to extract and the cost degenerates to 0");
    return std::nullopt;
}

Rational price_for_constant_cost(const Rational& target, const Rational& n, const Rational& x, const Rational& p)
{
    if (p == 1)
        throw Error(Errc::FullyPrivate, "pricing is undefined when nothing is exposed");
    EconParams probe{0, n, x, p};
    validate(probe);
    if (target <= 0)
        throw Error(Errc::InvalidTransition, "target attack cost must be positive");
    return target / (n * (1 - p) * x);
}

Rational extraction_threshold(const EconParams& e)
{
    validate(e);
    const Rational q = e.inferences_per_unit * (1 - e.p) * e.x;
    using boost::multiprecision::cpp_int;
    const cpp_int num = boost::multiprecision::numerator(q), den = boost::multiprecision::denominator(q);
    return Rational(cpp_int((num + den - 1) / den));
}

uint64_t QueryLedger::count(const std::string& r) const
{
    const auto it = counts_.find(r);
    return it == counts_.end() ? 0 : it->second;
}

void QueryLedger::record(const std::string& r)
{
    ++counts_[r];
}

CapDecision enforce_cap(const InferenceCap& cap, QueryLedger& ledger, const std::string& r)
{
    if (ledger.count(r) + 1 > cap.max_queries)
        return CapDecision::Deny;
    ledger.record(r);
    return CapDecision::Allow;
}

Rational policy_price(const SafeguardPolicy& policy, const Rational& base_price, const Rational& n, const Rational& x,
    const Rational& p)
{
    if (const auto* priced = std::get_if<PricedPrivacy>(&policy))
        return price_for_constant_cost(priced->target_attack_cost, n, x, p);
    return base_price;
}

SegmentOracle make_oracle(const ModelSpec& segment)
{
    auto program = std::make_shared<const Program>(compile(segment));
    ModelSpec structure = segment;
    for (auto& l : structure.layers)
    {
        l.kernel.reset();
        l.bias.reset();
    }
    return SegmentOracle{std::move(structure),
        [program](const FixedTensor& x) { return run(*program, x, 1u << 20).output; }};
}

Extraction extract_linear_segment(const SegmentOracle& oracle, const InferenceCap* cap, QueryLedger* ledger,
    const std::string& requester)
{
    const ModelSpec& s = oracle.structure;
    if (s.layers.size() != 1 || s.layers[0].kind != LayerKind::Dense || s.layers[0].activation != Activation::None
        || s.input_shape.size() != 1)
        throw Error(Errc::NotLinear, "extraction needs a single Dense layer without activation");
    const size_t k = s.input_shape[0], m = s.layers[0].units;

    QueryLedger local;
    QueryLedger& book = ledger ? *ledger : local;
    Extraction ex;
    auto ask = [&](const FixedTensor& x) {
        if (cap && enforce_cap(*cap, book, requester) == CapDecision::Deny)
            throw Error(Errc::CapExceeded, "query " + std::to_string(ex.queries + 1) + " denied by the inference cap");
        ++ex.queries;
        const auto y = oracle.query(x);
        if (y.shape() != Shape{m})
            throw Error(Errc::NotLinear, "oracle output shape differs from the declared structure");
        return y;
    };

    ex.bias = ask(FixedTensor(Shape{k}));
    ex.kernel = FixedTensor(Shape{k, m});
    for (size_t i = 0; i < k; ++i)
    {
        FixedTensor e(Shape{k});
        e[i] = Fx::from_int(1);
        const auto y = ask(e);
        for (size_t u = 0; u < m; ++u)
            ex.kernel[i * m + u] = Fx{y[u].raw - ex.bias[u].raw};
    }
    return ex;
}

nlohmann::json to_json(const EconParams& p)
{
    return {{"c", p.c.str()}, {"n_per_unit", p.inferences_per_unit.str()}, {"x", p.x.str()}, {"p", p.p.str()}};
}
}  // namespace oppai
