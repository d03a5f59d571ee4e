// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <oppai/dispute.hpp>
#include <oppai/partition.hpp>
#include <oppai/zkbackend.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace oppai
{
inline constexpr std::string_view kBurnAccount = "burn";

struct GasTable
{
    int64_t publish = 100;
    int64_t zk_verify = 500;
    int64_t commit = 50;
    int64_t challenge = 50;
    int64_t bisect_move = 20;
    int64_t arbitration = 200;
    int64_t finalize = 10;

    friend bool operator==(const GasTable&, const GasTable&) = default;
};

struct ChainConfig
{
    GasTable gas;
    int64_t submitter_bond = 1000;
    int64_t challenger_bond = 1000;
    uint64_t challenge_period = 20;
    uint64_t move_deadline = kDefaultMoveDeadline;

    friend bool operator==(const ChainConfig&, const ChainConfig&) = default;
};

nlohmann::json to_json(const ChainConfig& c);
/// Missing keys keep their defaults.
ChainConfig chain_config_from_json(const nlohmann::json& j);

enum class SegmentStatus
{
    Pending,
    ZkVerified,
    Rejected,
    Committed,
    Challenged,
    Finalized,
    Voided,
};

std::string_view to_string(SegmentStatus s) noexcept;

/// What a task publishes. zk segments carry their structure with weights
/// stripped; op segments carry the full public program.
struct PublishedSegment
{
    Tag tag = Tag::Op;
    Hash256 program_hash;
    Hash256 weight_commitment;
    ModelSpec model;
    std::shared_ptr<const Program> program;
};

std::vector<PublishedSegment> public_view(const PartitionedModel& pm);

struct SegmentRecord
{
    PublishedSegment published;
    SegmentStatus status = SegmentStatus::Pending;
    std::optional<ZkStatement> statement;  // zk: the accepted or rejected statement
    std::optional<SubmitterClaim> claim;   // op: the live commitment
    std::string committer;
    uint64_t commit_block = 0;
    std::optional<uint64_t> dispute;
};

struct TaskRecord
{
    std::string id;
    std::string publisher;
    FixedTensor input;
    uint64_t challenge_period = 0;
    std::vector<SegmentRecord> segments;  // f1z, f1o, ...
    bool halted = false;                  // a zk proof was rejected
};

struct BondKey
{
    std::string party;
    std::string task;
    size_t segment = 0;

    friend auto operator<=>(const BondKey&, const BondKey&) = default;
};

struct Slash
{
    std::string from;
    std::string to;
    int64_t amount = 0;
};

struct Effects
{
    std::vector<std::pair<std::string, int64_t>> balances;
    std::vector<std::pair<std::string, int64_t>> gas;  // also in balances, via the burn account
    std::vector<Slash> slashes;                         // also in bonds and balances
    std::vector<std::pair<BondKey, int64_t>> bonds;
    std::vector<std::pair<size_t, SegmentStatus>> statuses;
    std::optional<uint64_t> dispute_id;
    std::optional<nlohmann::json> dispute;  // session summary after the change
    uint64_t height = 0;
};

struct Event
{
    uint64_t seq = 0;
    uint64_t height = 0;
    std::string kind;
    std::string task;
    nlohmann::json body;
    Effects effects;
};

nlohmann::json to_json(const Event& e);
Event event_from_json(const nlohmann::json& j);

// Transactions. Every one names its sender, who pays its gas.
struct PublishTask
{
    std::string sender;
    FixedTensor input;
    std::vector<PublishedSegment> segments;
};
struct PostZkProof
{
    std::string sender;
    std::string task;
    size_t segment = 0;
    ZkStatement statement;
    ZkProof proof;
};
struct CommitResult
{
    std::string sender;
    std::string task;
    size_t segment = 0;
    SubmitterClaim claim;
};
struct OpenChallenge
{
    std::string sender;
    std::string task;
    size_t segment = 0;
    ChallengerClaim claim;
};
struct PostBoundaryRoot
{
    Hash256 root;
};
struct PostMidRoot
{
    Hash256 root;
};
struct Respond
{
    bool agrees = false;
};
struct SubmitWitness
{
    VmState witness;
};
using DisputeAction = std::variant<PostBoundaryRoot, PostMidRoot, Respond, SubmitWitness>;
struct DisputeMove
{
    std::string sender;
    uint64_t dispute = 0;
    DisputeAction action;
};
struct Finalize
{
    std::string sender;
    std::string task;
    size_t segment = 0;
};

using Transaction = std::variant<PublishTask, PostZkProof, CommitResult, OpenChallenge, DisputeMove, Finalize>;

struct Receipt
{
    uint64_t event_seq = 0;
    int64_t gas = 0;
    std::string task;
    std::optional<uint64_t> dispute;
};

struct LogFilter
{
    std::optional<std::string> task;
    std::optional<std::string> kind;
    bool include_blocks = true;
};

/// Ledger state that the event log alone determines.
struct LedgerView
{
    uint64_t height = 0;
    std::map<std::string, int64_t> balances;
    std::map<BondKey, int64_t> bonds;
    std::map<std::pair<std::string, size_t>, SegmentStatus> statuses;
    std::map<uint64_t, nlohmann::json> disputes;

    friend bool operator==(const LedgerView&, const LedgerView&) = default;
};

/// Event-sourced reconstruction of the ledger from genesis balances.
LedgerView replay(const std::map<std::string, int64_t>& genesis, const std::vector<Event>& log);

/// Single sequential chain. A transaction either applies completely and
/// emits exactly one event, or throws and changes nothing.
class Chain
{
public:
    Chain(ChainConfig config, std::map<std::string, int64_t> genesis, std::shared_ptr<ZkVerifier> verifier);

    Receipt submit_tx(const Transaction& tx);

    /// height += k, one block at a time: due timeouts fire first, then
    /// eligible segments finalize (the committer pays the finalize gas).
    void advance_blocks(uint64_t k);

    std::vector<Event> read_log(const LogFilter& filter = {}) const;
    std::string log_jsonl(const LogFilter& filter = {}) const;

    uint64_t height() const noexcept { return height_; }
    const ChainConfig& config() const noexcept { return config_; }
    int64_t balance(const std::string& party) const;
    int64_t bond(const BondKey& key) const;
    int64_t total_supply() const;
    const TaskRecord& task(const std::string& id) const;
    const DisputeSession& dispute(uint64_t id) const;
    /// (task, segment) a dispute is about.
    const std::pair<std::string, size_t>& dispute_target(uint64_t id) const { return dispute_segment_.at(id); }
    const std::map<uint64_t, DisputeSession>& disputes() const noexcept { return disputes_; }
    const std::map<std::string, int64_t>& genesis() const noexcept { return genesis_; }
    LedgerView view() const;

    /// Whether the segment could finalize now if asked.
    bool finalizable(const std::string& task, size_t segment) const;

private:
    Receipt apply(const PublishTask& tx);
    Receipt apply(const PostZkProof& tx);
    Receipt apply(const CommitResult& tx);
    Receipt apply(const OpenChallenge& tx);
    Receipt apply(const DisputeMove& tx);
    Receipt apply(const Finalize& tx);

    TaskRecord& task_mut(const std::string& id);
    void require_funds(const std::string& party, int64_t amount) const;
    void charge(Effects& fx, const std::string& party, int64_t amount);
    void move_balance(Effects& fx, const std::string& party, int64_t delta);
    void move_bond(Effects& fx, const BondKey& key, int64_t delta);
    void set_status(Effects& fx, TaskRecord& t, size_t segment, SegmentStatus s);
    uint64_t emit(std::string kind, std::string task, nlohmann::json body, Effects fx);
    void settle_dispute(Effects& fx, uint64_t id);
    void finalize_segment(Effects& fx, TaskRecord& t, size_t segment, const std::string& payer);
    void tick();

    ChainConfig config_;
    std::map<std::string, int64_t> genesis_;
    std::shared_ptr<ZkVerifier> verifier_;
    uint64_t height_ = 0;
    std::map<std::string, int64_t> balances_;
    std::map<BondKey, int64_t> bonds_;
    std::map<std::string, TaskRecord> tasks_;
    std::map<uint64_t, DisputeSession> disputes_;
    std::map<uint64_t, std::pair<std::string, size_t>> dispute_segment_;
    std::map<uint64_t, std::string> challengers_;
    std::vector<Event> log_;
    uint64_t next_task_ = 1;
    uint64_t next_dispute_ = 1;
};
}  // namespace oppai
