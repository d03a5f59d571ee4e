// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <oppai/model.hpp>
#include <oppai/partition.hpp>

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>

namespace oppai
{
/// attack cost = c * n * (1 - p) * x, with n the inferences needed per unit
/// of model size and x the model size under some SizeMetric.
struct EconParams
{
    Rational c = 0;
    Rational inferences_per_unit = 1;
    Rational x = 1;
    Rational p = 0;
};

/// Throws InvalidTransition unless c >= 0, n > 0, x > 0 and 0 <= p <= 1.
void validate(const EconParams& params);

Rational attack_cost(const EconParams& params);

/// Set when the result is degenerate (p = 1: nothing is exposed to extract).
std::optional<std::string> attack_cost_warning(const EconParams& params);

/// c such that attack_cost is exactly `target`. Throws FullyPrivate at p = 1.
Rational price_for_constant_cost(const Rational& target, const Rational& inferences_per_unit, const Rational& x,
    const Rational& p);

/// Queries a requester must not reach: ceil(n * (1 - p) * x).
Rational extraction_threshold(const EconParams& params);

struct InferenceCap
{
    uint64_t max_queries = 0;
};

/// Prices c so that extracting the exposed part costs `target_attack_cost`.
struct PricedPrivacy
{
    Rational target_attack_cost = 1;
};

using SafeguardPolicy = std::variant<InferenceCap, PricedPrivacy>;

enum class CapDecision
{
    Allow,
    Deny,
};

/// Per-requester query counts.
class QueryLedger
{
public:
    uint64_t count(const std::string& requester) const;
    void record(const std::string& requester);

private:
    std::map<std::string, uint64_t> counts_;
};

/// Allows and records the query unless it would take the requester past the cap.
CapDecision enforce_cap(const InferenceCap& cap, QueryLedger& ledger, const std::string& requester);

/// Price per inference under a policy: the PricedPrivacy price, or `base_price`
/// under a cap. Throws FullyPrivate.
Rational policy_price(const SafeguardPolicy& policy, const Rational& base_price, const Rational& inferences_per_unit,
    const Rational& x, const Rational& p);

/// Black-box access to an exposed segment, plus the public structure the
/// attacker knows (architecture without weights).
struct SegmentOracle
{
    ModelSpec structure;
    std::function<FixedTensor(const FixedTensor&)> query;
};

/// Oracle answering with FPVM execution of a compiled segment.
SegmentOracle make_oracle(const ModelSpec& segment);

struct Extraction
{
    FixedTensor kernel;  // (k, m)
    FixedTensor bias;    // (m)
    uint64_t queries = 0;
};

/// Recovers a single affine Dense layer from k + 1 chosen queries: the zero
/// vector gives the bias, each basis vector e_i (value 1.0) gives kernel row i.
/// With a cap, every query passes enforce_cap first. Throws NotLinear or
/// CapExceeded.
Extraction extract_linear_segment(const SegmentOracle& oracle, const InferenceCap* cap = nullptr,
    QueryLedger* ledger = nullptr, const std::string& requester = "attacker");

nlohmann::json to_json(const EconParams& p);
}  // namespace oppai
