// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <oppai/econ.hpp>
#include <oppai/partition.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace oppai
{
enum class Framework
{
    Circom,
    Ezkl,
};

std::string_view to_string(Framework f) noexcept;
Framework framework_from_string(std::string_view s);  // throws ParseError

struct FrameworkCost
{
    uint64_t size = 0;  // cumulative constraints (circom) or rows (ezkl)
    Rational time_s;
    uint64_t mem_kb = 0;
};

/// One prefix-model measurement: the model from the first layer up to this one.
struct BenchRow
{
    std::string layer;
    FrameworkCost circom;
    FrameworkCost ezkl;
    uint64_t native_time_ns = 0;

    const FrameworkCost& cost(Framework f) const noexcept { return f == Framework::Circom ? circom : ezkl; }
};

/// "mm:ss.xx" to seconds, exactly. Throws ParseError.
Rational parse_duration(std::string_view text);

/// Parses CSV text. Throws ParseError or MonotonicityViolation.
std::vector<BenchRow> ingest_table1(std::string_view csv);

/// Reads `path`, verifying it against `path.sha256` (sha256sum format).
/// Throws ChecksumMismatch, or ParseError if either file is unreadable.
std::string read_checked(const std::filesystem::path& path);

std::vector<BenchRow> load_table1(const std::filesystem::path& path);

struct Point
{
    Rational x;
    Rational y;
};

struct LinearFit
{
    Rational slope;
    Rational intercept;
    Rational x_min;
    Rational x_max;
    size_t n = 0;
    Rational sse;

    Rational predict(const Rational& x) const { return slope * x + intercept; }
};

/// Exact ordinary least squares with intercept. Throws Degenerate.
LinearFit fit_linear(const std::vector<Point>& points);

Rational sum_squared_residuals(const std::vector<Point>& points, const Rational& slope, const Rational& intercept);

struct FrameworkFits
{
    LinearFit time_s;
    LinearFit mem_kb;
};

FrameworkFits fit_framework(const std::vector<BenchRow>& rows, Framework f);

struct ExtrapolationTarget
{
    std::string name;
    std::string input_shape;
    uint64_t params = 0;
    std::optional<uint64_t> rows;
    Rational reported_memory_tb;
    Rational reported_time_h;
    std::optional<uint64_t> reported_rows;  // when rows were derived rather than given
};

std::vector<ExtrapolationTarget> ingest_table2(std::string_view csv);
std::vector<ExtrapolationTarget> load_table2(const std::filesystem::path& path);

/// Mean rows/params over targets whose rows are given. Throws Degenerate if none.
Rational mean_rows_per_param(const std::vector<ExtrapolationTarget>& targets);

struct Prediction
{
    std::string name;
    Rational rows;
    bool rows_derived = false;
    Rational time_h;
    Rational memory_tb;
};

inline const Rational kKbPerTb{1000000000};

Prediction extrapolate(const LinearFit& time_s, const LinearFit& mem_kb, const ExtrapolationTarget& target,
    const Rational& mean_ratio);

std::vector<Prediction> extrapolate_all(const FrameworkFits& fits, const std::vector<ExtrapolationTarget>& targets);

struct FractionReport
{
    size_t prefix_rows = 0;  // 1 = first row only
    std::string layer;
    Rational p;
    Rational time_fraction;
    Rational memory_fraction;
    uint64_t opml_native_time_ns = 0;
};

/// Prefix of the first `prefix_rows` rows in zk, the remainder native.
/// Throws UnknownPrefix outside 1..rows.size().
FractionReport fraction_report(const std::vector<BenchRow>& rows, Framework f, size_t prefix_rows);

std::vector<FractionReport> fraction_series(const std::vector<BenchRow>& rows, Framework f);

std::string fraction_csv(const std::vector<FractionReport>& series);

/// Per-layer metric of the six-layer reference CNN (Flatten contributes 0)
/// from the cumulative column.
SizeMetric table_metric(const std::vector<BenchRow>& rows, Framework f);

struct PlanRequest
{
    SizeMetric metric;
    Framework framework = Framework::Ezkl;
    std::optional<uint64_t> budget_bytes;  // none = unbounded
    std::optional<Rational> target_cost;
    Rational price = 1;                     // c
    Rational inferences_per_unit = 1;       // n
};

struct PlanCandidate
{
    size_t zk_layers = 0;
    Rational p;
    uint64_t cumulative_size = 0;
    Rational time_s;
    Rational mem_kb;
    bool measured = false;  // taken from a matching table row rather than the fit
    Rational attack_cost;
    std::optional<Rational> price_for_target;
    bool feasible = false;
};

struct PlanReport
{
    std::vector<PlanCandidate> candidates;
    size_t recommended = 0;  // index into candidates
};

Framework framework_for(MetricKind kind);

/// Every non-empty layer-boundary prefix as zk candidate; recommends the
/// largest p whose memory fits. Throws NoFeasiblePrefix, ZeroTotal.
PlanReport plan(const std::vector<BenchRow>& rows, const PlanRequest& request);

double to_double(const Rational& r);

nlohmann::json to_json(const LinearFit& fit);
nlohmann::json to_json(const FractionReport& r);
nlohmann::json to_json(const PlanReport& r);

/// Fraction series for `f` plus the Table 2 reproduction (EZKL fits) with
/// relative deltas against the reported values.
nlohmann::json bench_report(const std::vector<BenchRow>& rows, const std::vector<ExtrapolationTarget>& targets,
    Framework f);
}  // namespace oppai
