// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <oppai/fpvm.hpp>
#include <oppai/model.hpp>

#include <boost/multiprecision/cpp_int.hpp>

#include <memory>
#include <string_view>
#include <vector>

namespace oppai
{
using Rational = boost::multiprecision::cpp_rational;

enum class Tag
{
    Zk,
    Op,
};

std::string_view to_string(Tag tag) noexcept;

/// Layers [first, first + count). count = 0 is an explicit identity segment.
struct Cut
{
    size_t first = 0;
    size_t count = 0;
    Tag tag = Tag::Zk;

    size_t end() const noexcept { return first + count; }

    friend bool operator==(const Cut&, const Cut&) = default;
};

struct PartitionSpec
{
    std::vector<Cut> cuts;

    friend bool operator==(const PartitionSpec&, const PartitionSpec&) = default;
};

/// zk = layers [0, k), op = the rest.
PartitionSpec prefix_partition(size_t layer_count, size_t k);

/// Throws InvalidPartition unless the cuts are contiguous, in order and
/// cover [0, layer_count).
void validate(const PartitionSpec& spec, size_t layer_count);

/// Merges same-tag neighbours and pads with identity segments so the result
/// reads z, o, z, o, ... and ends on o.
PartitionSpec normalize(const PartitionSpec& spec, size_t layer_count);

size_t pair_count(const PartitionSpec& spec, size_t layer_count);

struct Segment
{
    Tag tag = Tag::Zk;
    size_t pair = 0;  // i of f_i
    size_t first_layer = 0;
    ModelSpec model;
    std::shared_ptr<const Program> program;
    Hash256 weight_commitment;
};

struct PartitionedModel
{
    std::vector<Segment> segments;  // f1z, f1o, f2z, ...
    size_t pair_count = 0;
};

/// SHA-256 over the canonical weights JSON of a segment model.
Hash256 weight_commitment(const ModelSpec& segment_model);

/// Throws InvalidPartition or ShapeBreak.
PartitionedModel split(const ModelSpec& model, const PartitionSpec& spec);

/// Runs segments in order on the FPVM, feeding each output forward.
FixedTensor run_segments(const PartitionedModel& pm, const FixedTensor& input);

enum class MetricKind
{
    Constraints,
    Rows,
    Instructions,
    Parameters,
};

std::string_view to_string(MetricKind kind) noexcept;

struct SizeMetric
{
    MetricKind kind = MetricKind::Parameters;
    std::vector<uint64_t> values;  // per layer

    uint64_t total() const noexcept;

    friend bool operator==(const SizeMetric&, const SizeMetric&) = default;
};

SizeMetric parameter_metric(const ModelSpec& model);
/// Instructions each layer contributes to compile(model), excluding the epilogue.
SizeMetric instruction_metric(const ModelSpec& model);

/// Throws ZeroTotal, or InvalidPartition if the metric does not cover the layers.
Rational zk_proportion(const PartitionSpec& spec, const SizeMetric& metric);

nlohmann::json to_json(const PartitionSpec& spec);
PartitionSpec partition_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SizeMetric& metric);
SizeMetric metric_from_json(const nlohmann::json& j);
}  // namespace oppai
