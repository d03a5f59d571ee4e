// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <oppai/hash.hpp>
#include <oppai/merkle.hpp>
#include <oppai/numerics.hpp>
#include <oppai/program.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <vector>

namespace oppai
{
enum class Trap : uint8_t
{
    None = 0,
    Overflow = 1,
    PcOutOfRange = 2,
};

struct VmState
{
    uint64_t pc = 0;
    bool halted = false;
    Trap fault = Trap::None;
    Memory memory;

    friend bool operator==(const VmState&, const VmState&) = default;
};

/// SHA-256(LE64(pc) || byte(halted) || byte(fault) || memory root).
Hash256 root(const VmState& state);

nlohmann::json to_json(const VmState& state);
VmState state_from_json(const nlohmann::json& j);

/// Input words and the weight image placed at their regions, pc = 0.
VmState initial_state(const Program& program, const FixedTensor& input);

FixedTensor read_output(const Program& program, const VmState& state);

/// Addresses touched by one step, for locality checks.
struct AccessLog
{
    std::vector<uint32_t> reads;
    std::vector<uint32_t> writes;
};

/// Executes instructions[state.pc] in place. A trap sets `fault` and halts.
/// Throws AlreadyHalted.
void step_in_place(const Program& program, VmState& state, AccessLog* log = nullptr);

/// Pure form of step_in_place.
VmState step(const Program& program, const VmState& state);

/// Arbitration transition: one step, except that a halted state maps to itself.
VmState advance(const Program& program, const VmState& state);

/// Adds `delta` raw to the destination word of the instruction executed at
/// 1-based step `step` (the output region's first word for HALT). Models a
/// submitter that misreports one step and then continues honestly.
struct Corruption
{
    uint64_t step = 1;
    int64_t delta = 1;
};

inline constexpr uint64_t kDefaultStepBudget = 100'000'000;

struct TraceCheckpoints
{
    uint64_t interval = 1;
    uint64_t total_steps = 0;
    std::map<uint64_t, Hash256> roots;  // at 0, k, 2k, ..., total_steps

    friend bool operator==(const TraceCheckpoints&, const TraceCheckpoints&) = default;
};

nlohmann::json to_json(const TraceCheckpoints& c);
TraceCheckpoints checkpoints_from_json(const nlohmann::json& j);

struct RunOptions
{
    uint64_t checkpoint_interval = 1;
    uint64_t step_budget = kDefaultStepBudget;
    std::optional<Corruption> corruption;
};

struct Execution
{
    VmState final_state;
    TraceCheckpoints checkpoints;
};

/// Runs to halt (clean or trapped). Throws StepBudgetExceeded.
Execution execute(const Program& program, const FixedTensor& input, const RunOptions& options = {});

struct RunResult
{
    FixedTensor output;
    TraceCheckpoints checkpoints;
};

/// execute() that insists on a clean halt; a trap is InferenceFault.
RunResult run(const Program& program, const FixedTensor& input, uint64_t checkpoint_interval);

/// State after exactly i steps, by replay from the initial state; the root
/// is checked against the nearest committed checkpoint at or below i.
/// Throws IndexOutOfRange or InvariantBreach.
VmState state_at(const Program& program, const TraceCheckpoints& checkpoints, const FixedTensor& input, uint64_t i);

/// A party's view of one execution: answers root/state queries at any step by
/// replaying from retained snapshots.
class TraceReplayer
{
public:
    TraceReplayer(std::shared_ptr<const Program> program, FixedTensor input,
        std::optional<Corruption> corruption = std::nullopt, uint64_t step_budget = kDefaultStepBudget);

    uint64_t total_steps() const noexcept { return total_steps_; }
    const VmState& final_state() const noexcept { return final_; }
    Hash256 final_root() const { return final_root_; }

    /// Clamped: queries past the end answer the final state.
    VmState state_at(uint64_t i) const;
    Hash256 root_at(uint64_t i) const;

    const Program& program() const noexcept { return *program_; }
    const FixedTensor& input() const noexcept { return input_; }

private:
    std::shared_ptr<const Program> program_;
    FixedTensor input_;
    std::optional<Corruption> corruption_;
    uint64_t total_steps_ = 0;
    uint64_t snapshot_interval_ = 1;
    std::vector<VmState> snapshots_;  // snapshots_[j] is the state after j*interval steps
    VmState final_;
    Hash256 final_root_;
};
}  // namespace oppai
