// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <oppai/chain.hpp>

#include <optional>
#include <string>
#include <vector>

namespace oppai
{
enum class ProverBehavior
{
    Honest,
    WrongOutput,   // claims the first zk output plus one raw, with a matching digest
    WrongWeights,  // proves with weights other than the published commitment
};

enum class ChallengerBehavior
{
    HonestVigilant,
    Absent,
    Frivolous,  // disputes every result with a made-up final root
};

struct SubmitterBehavior
{
    bool corrupt = false;
    size_t pair = 1;   // f_i^o, 1-based
    uint64_t step = 1; // 1-based trace step whose result is misreported

    friend bool operator==(const SubmitterBehavior&, const SubmitterBehavior&) = default;
};

std::string_view to_string(ProverBehavior b) noexcept;
std::string_view to_string(ChallengerBehavior b) noexcept;

struct Scenario
{
    std::string name;
    ModelSpec model;
    PartitionSpec partition;
    std::optional<SizeMetric> metric;
    FixedTensor input;
    ProverBehavior prover = ProverBehavior::Honest;
    SubmitterBehavior submitter;
    std::vector<ChallengerBehavior> challengers;
    bool recommit = false;               // an honest second submitter re-commits voided results
    bool prover_is_submitter = false;
    ChainConfig chain;
    int64_t initial_balance = 100000;
    uint64_t seed = 0;
    bool include_wall_clock = false;
};

/// Scenario JSON:
///   {"name", "model": <model JSON> | {"builtin": "figure1"} | {"builtin": "dense", "inputs": k, "units": m},
///    "weights_seed", "partition": <partition JSON> | "zk_prefix": k,
///    "metric": "parameters" | "instructions" | <metric JSON>,
///    "input": <tensor JSON> | "figure1_image" (default: seeded uniform),
///    "prover": "honest" | "wrong_output" | "wrong_weights",
///    "submitter": "honest" | {"corrupt_at": {"segment": i, "step": k}},
///    "challengers": ["honest_vigilant" | "absent" | "frivolous", ...],
///    "recommit", "prover_is_submitter", "chain": <chain config>, "initial_balance", "seed",
///    "include_wall_clock"}
/// Throws ScenarioInvalid (or ParseError for malformed nested values).
Scenario scenario_from_json(const nlohmann::json& j);

struct DisputeTranscript
{
    uint64_t id = 0;
    size_t segment = 0;
    std::string challenger;
    uint64_t rounds = 0;
    uint64_t expected_rounds = 0;  // ceil(log2(boundary))
    std::string winner;
    std::string reason;
    std::string stage_reached;
    uint64_t arbitration_steps = 0;
    std::vector<nlohmann::json> moves;
};

struct PartyEconomics
{
    int64_t gas = 0;
    int64_t bonds_lost = 0;
    int64_t bonds_won = 0;
    int64_t balance_start = 0;
    int64_t balance_end = 0;
};

struct ScenarioReport
{
    std::string name;
    std::string task;
    std::vector<std::pair<Tag, SegmentStatus>> segments;
    std::vector<std::string> zk_verdicts;
    std::optional<FixedTensor> final_output;  // when every op segment finalized
    FixedTensor reference_output;             // monolithic infer
    bool output_matches_reference = false;
    std::map<std::string, PartyEconomics> parties;
    std::vector<DisputeTranscript> disputes;
    std::optional<std::string> p;  // zk proportion as a fraction, when a metric is given
    double p_value = 0;
    size_t pair_count = 0;
    uint64_t final_height = 0;
    int64_t total_gas = 0;
    std::string log_jsonl;
    Hash256 log_digest;
    std::optional<double> wall_clock_s;

    bool all_finalized() const;
};

nlohmann::json to_json(const ScenarioReport& r);

/// The chain and the private-channel material a report was built from.
struct ScenarioRun
{
    ScenarioReport report;
    std::unique_ptr<Chain> chain;
    PartitionedModel partitioned;
    std::vector<ZkProof> proofs;  // private channel, never on chain
};

ScenarioRun execute_scenario(const Scenario& s);
ScenarioReport run_scenario(const Scenario& s);

/// One report per value, with `parameter` (a top-level scenario JSON key)
/// overwritten by each value in turn.
struct Sweep
{
    std::string parameter;
    std::vector<nlohmann::json> values;
};

std::vector<ScenarioReport> run_matrix(const nlohmann::json& base, const Sweep& sweep);

/// Privacy-boundary scan: offsets in the public log where an 8-byte window
/// of any zk segment's serialized weights occurs. Windows that also occur in
/// the published statements are not counted.
std::vector<size_t> privacy_scan(const ScenarioRun& run);
}  // namespace oppai
