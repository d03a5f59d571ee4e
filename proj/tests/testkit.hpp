// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

// Shared fixtures for the unit tests and the acceptance runner.

#pragma once

#include <oppai/dispute.hpp>
#include <oppai/model.hpp>
#include <oppai/partition.hpp>
#include <oppai/prng.hpp>
#include <oppai/workflow.hpp>

#include <filesystem>
#include <memory>
#include <string>

namespace oppai::testkit
{
std::filesystem::path data_dir();
std::filesystem::path scenario_dir();
std::filesystem::path golden_dir();

std::string read_file(const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

inline const char* const kScenarioNames[] = {"honest", "corrupt_submitter", "wrong_weights", "frivolous", "absent"};

/// Single-path model with 1..max_layers layers and seeded weights. Image
/// inputs go through Conv/Pool/ReLU before an optional Flatten and Dense
/// tail; vector inputs get Dense/ReLU layers.
ModelSpec random_model(Xoshiro256& rng, size_t max_layers = 8);

/// Per-layer random tags, with identity cuts sprinkled in.
PartitionSpec random_partition(Xoshiro256& rng, size_t layer_count);

FixedTensor random_input(Xoshiro256& rng, const Shape& shape);

/// T-step program over a one-word input: T-1 accumulating ADDs then HALT.
std::shared_ptr<const Program> add_chain(uint64_t steps);

/// Input for add_chain programs.
FixedTensor chain_input();

uint64_t ceil_log2(uint64_t n);

struct GameResult
{
    Party winner = Party::Submitter;
    uint64_t rounds = 0;
    uint64_t boundary = 0;
    uint64_t arbitration_steps = 0;
    std::string reason;
};

/// Opens a dispute between two traces of `program`-shaped executions and
/// plays it out. `style` steers the challenger.
GameResult play_game(const Program& program, const TraceReplayer& submitter, const TraceReplayer& challenger,
    ChallengerStyle style = ChallengerStyle::Honest);
}  // namespace oppai::testkit
