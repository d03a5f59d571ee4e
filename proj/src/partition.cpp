// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#include <oppai/error.hpp>
#include <oppai/partition.hpp>

namespace oppai
{
std::string_view to_string(Tag tag) noexcept
{
    return tag == Tag::Zk ? "zk" : "op";
}

std::string_view to_string(MetricKind kind) noexcept
{
    switch (kind)
    {
    case MetricKind::Constraints: return "constraints";
    case MetricKind::Rows: return "rows";
    case MetricKind::Instructions: return "instructions";
    case MetricKind::Parameters: return "parameters";
    }
    return "unknown";
}

PartitionSpec prefix_partition(size_t layer_count, size_t k)
{
    if (k > layer_count)
        throw Error(Errc::InvalidPartition, "prefix longer than the model");
    return PartitionSpec{{Cut{0, k, Tag::Zk}, Cut{k, layer_count - k, Tag::Op}}};
}

void validate(const PartitionSpec& spec, size_t layer_count)
{
    size_t cursor = 0;
    for (size_t i = 0; i < spec.cuts.size(); ++i)
    {
        const Cut& c = spec.cuts[i];
        if (c.count == 0)
            continue;
        if (c.first < cursor)
            throw Error(Errc::InvalidPartition, "cut " + std::to_string(i) + " overlaps or is out of order");
        if (c.first > cursor)
            throw Error(Errc::InvalidPartition, "gap before layer " + std::to_string(c.first));
        cursor = c.end();
    }
    if (cursor != layer_count)
        throw Error(Errc::InvalidPartition,
            "cuts cover " + std::to_string(cursor) + " of " + std::to_string(layer_count) + " layers");
}

PartitionSpec normalize(const PartitionSpec& spec, size_t layer_count)
{
    validate(spec, layer_count);
    std::vector<Cut> merged;
    for (const Cut& c : spec.cuts)
    {
        if (c.count == 0)
            continue;
        if (!merged.empty() && merged.back().tag == c.tag)
            merged.back().count += c.count;
        else
            merged.push_back(c);
    }
    PartitionSpec out;
    size_t cursor = 0;
    Tag want = Tag::Zk;
    for (const Cut& c : merged)
    {
        if (c.tag != want)
            out.cuts.push_back(Cut{cursor, 0, want});
        out.cuts.push_back(c);
        cursor = c.end();
        want = c.tag == Tag::Zk ? Tag::Op : Tag::Zk;
    }
    if (out.cuts.empty())
        out.cuts.push_back(Cut{0, 0, Tag::Zk});
    if (out.cuts.back().tag == Tag::Zk)
        out.cuts.push_back(Cut{cursor, 0, Tag::Op});
    return out;
}

size_t pair_count(const PartitionSpec& spec, size_t layer_count)
{
    return normalize(spec, layer_count).cuts.size() / 2;
}

Hash256 weight_commitment(const ModelSpec& segment_model)
{
    return sha256(canonical_dump(weights_to_json(segment_model)));
}

PartitionedModel split(const ModelSpec& model, const PartitionSpec& spec)
{
    try
    {
        validate(model);
    }
    catch (const Error& e)
    {
        if (e.code() != Errc::ShapeMismatch)
            throw;
        throw Error(Errc::ShapeBreak, e.what());
    }
    const auto norm = normalize(spec, model.layers.size());
    const auto shapes = infer_shapes(model);
    PartitionedModel pm;
    pm.pair_count = norm.cuts.size() / 2;
    for (size_t i = 0; i < norm.cuts.size(); ++i)
    {
        const Cut& c = norm.cuts[i];
        Segment seg;
        seg.tag = c.tag;
        seg.pair = i / 2 + 1;
        seg.first_layer = c.first;
        seg.model.input_shape = shapes[c.first];
        seg.model.layers.assign(model.layers.begin() + c.first, model.layers.begin() + c.end());
        try
        {
            seg.program = std::make_shared<const Program>(compile(seg.model));
        }
        catch (const Error& e)
        {
            if (e.code() != Errc::ShapeMismatch)
                throw;
            throw Error(Errc::ShapeBreak, "segment " + std::to_string(i) + ": " + e.what());
        }
        if (!pm.segments.empty() && pm.segments.back().program->output_shape != seg.program->input_shape)
            throw Error(Errc::ShapeBreak, "segment " + std::to_string(i) + " input differs from predecessor output");
        seg.weight_commitment = weight_commitment(seg.model);
        pm.segments.push_back(std::move(seg));
    }
    return pm;
}

FixedTensor run_segments(const PartitionedModel& pm, const FixedTensor& input)
{
    FixedTensor x = input;
    for (const auto& seg : pm.segments)
        x = run(*seg.program, x, 1u << 20).output;
    return x;
}

uint64_t SizeMetric::total() const noexcept
{
    uint64_t t = 0;
    for (const auto v : values)
        t += v;
    return t;
}

SizeMetric parameter_metric(const ModelSpec& model)
{
    const auto shapes = infer_shapes(model);
    SizeMetric m{MetricKind::Parameters, {}};
    for (size_t i = 0; i < model.layers.size(); ++i)
        m.values.push_back(parameter_count(model.layers[i], shapes[i]));
    return m;
}

SizeMetric instruction_metric(const ModelSpec& model)
{
    const auto shapes = infer_shapes(model);
    SizeMetric m{MetricKind::Instructions, {}};
    for (size_t i = 0; i < model.layers.size(); ++i)
    {
        ModelSpec one{shapes[i], {model.layers[i]}};
        auto& l = one.layers[0];
        if (l.has_weights() && (!l.kernel || !l.bias))
        {
            const auto [ks, bs] = weight_shapes(l, shapes[i]);
            l.kernel = FixedTensor(ks);
            l.bias = FixedTensor(bs);
        }
        const auto code = compile(one).code.size();
        m.values.push_back(code - shape_size(shapes[i + 1]) - 1);
    }
    return m;
}

Rational zk_proportion(const PartitionSpec& spec, const SizeMetric& metric)
{
    validate(spec, metric.values.size());
    const uint64_t total = metric.total();
    if (total == 0)
        throw Error(Errc::ZeroTotal, "metric total is zero");
    uint64_t zk = 0;
    for (const Cut& c : spec.cuts)
    {
        if (c.tag != Tag::Zk)
            continue;
        for (size_t i = c.first; i < c.end(); ++i)
            zk += metric.values[i];
    }
    return Rational(zk) / Rational(total);
}

nlohmann::json to_json(const PartitionSpec& spec)
{
    nlohmann::json cuts = nlohmann::json::array();
    for (const Cut& c : spec.cuts)
    {
        nlohmann::json layers = nlohmann::json::array();
        if (c.count > 0)
            layers = {c.first, c.end() - 1};
        cuts.push_back({{"layers", layers}, {"tag", to_string(c.tag)}});
    }
    return {{"cuts", cuts}};
}

PartitionSpec partition_from_json(const nlohmann::json& j)
{
    try
    {
        PartitionSpec spec;
        size_t cursor = 0;
        for (const auto& c : j.at("cuts"))
        {
            const auto tag = c.at("tag").get<std::string>();
            if (tag != "zk" && tag != "op")
                throw Error(Errc::ParseError, "tag must be zk or op, got " + tag);
            Cut cut{cursor, 0, tag == "zk" ? Tag::Zk : Tag::Op};
            const auto& layers = c.at("layers");
            if (layers.size() == 2)
            {
                const auto a = layers[0].get<size_t>(), b = layers[1].get<size_t>();
                if (b < a)
                    throw Error(Errc::InvalidPartition, "layer range is reversed");
                cut.first = a;
                cut.count = b - a + 1;
                cursor = b + 1;
            }
            else if (!layers.empty())
                throw Error(Errc::ParseError, "layers must be [first, last] or []");
            spec.cuts.push_back(cut);
        }
        return spec;
    }
    catch (const nlohmann::json::exception& e)
    {
        throw Error(Errc::ParseError, std::string("partition: ") + e.what());
    }
}

nlohmann::json to_json(const SizeMetric& m)
{
    return {{"kind", to_string(m.kind)}, {"values", m.values}};
}

SizeMetric metric_from_json(const nlohmann::json& j)
{
    try
    {
        SizeMetric m;
        const auto kind = j.at("kind").get<std::string>();
        bool found = false;
        for (const auto k : {MetricKind::Constraints, MetricKind::Rows, MetricKind::Instructions, MetricKind::Parameters})
        {
            if (to_string(k) == kind)
            {
                m.kind = k;
                found = true;
            }
        }
        if (!found)
            throw Error(Errc::ParseError, "unknown metric kind " + kind);
        m.values = j.at("values").get<std::vector<uint64_t>>();
        return m;
    }
    catch (const nlohmann::json::exception& e)
    {
        throw Error(Errc::ParseError, std::string("metric: ") + e.what());
    }
}
}  // namespace oppai
