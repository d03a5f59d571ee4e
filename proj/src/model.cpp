// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#include <oppai/error.hpp>
#include <oppai/model.hpp>
#include <oppai/prng.hpp>

#include <algorithm>

namespace oppai
{
std::string_view to_string(LayerKind kind) noexcept
{
    switch (kind)
    {
    case LayerKind::Conv2D: return "Conv2D";
    case LayerKind::MaxPool2D: return "MaxPool2D";
    case LayerKind::ReLU: return "ReLU";
    case LayerKind::Flatten: return "Flatten";
    case LayerKind::Dense: return "Dense";
    }
    return "Unknown";
}

std::string_view to_string(Opcode op) noexcept
{
    switch (op)
    {
    case Opcode::LoadI: return "LOADI";
    case Opcode::Mac: return "MAC";
    case Opcode::Add: return "ADD";
    case Opcode::Max: return "MAX";
    case Opcode::Relu: return "RELU";
    case Opcode::Move: return "MOVE";
    case Opcode::Halt: return "HALT";
    }
    return "?";
}

LayerSpec LayerSpec::conv2d(size_t filters, size_t kh, size_t kw, size_t stride, Activation act)
{
    LayerSpec l;
    l.kind = LayerKind::Conv2D;
    l.filters = filters;
    l.kernel_h = kh;
    l.kernel_w = kw;
    l.stride = stride;
    l.activation = act;
    return l;
}

LayerSpec LayerSpec::max_pool(size_t ph, size_t pw, size_t stride)
{
    LayerSpec l;
    l.kind = LayerKind::MaxPool2D;
    l.pool_h = ph;
    l.pool_w = pw;
    l.stride = stride == 0 ? ph : stride;
    return l;
}

LayerSpec LayerSpec::relu()
{
    return LayerSpec{};
}

LayerSpec LayerSpec::flatten()
{
    LayerSpec l;
    l.kind = LayerKind::Flatten;
    return l;
}

LayerSpec LayerSpec::dense(size_t units, Activation act)
{
    LayerSpec l;
    l.kind = LayerKind::Dense;
    l.units = units;
    l.activation = act;
    return l;
}

namespace
{
[[noreturn]] void shape_error(const LayerSpec& layer, const std::string& why)
{
    throw Error(Errc::ShapeMismatch, std::string(to_string(layer.kind)) + ": " + why);
}

size_t window_out(size_t in, size_t window, size_t stride)
{
    return (in - window) / stride + 1;
}
}  // namespace

Shape output_shape(const LayerSpec& layer, const Shape& in)
{
    switch (layer.kind)
    {
    case LayerKind::Conv2D:
        if (in.size() != 3)
            shape_error(layer, "expects an (H, W, C) input");
        if (layer.filters == 0 || layer.kernel_h == 0 || layer.kernel_w == 0 || layer.stride == 0)
            shape_error(layer, "filters, kernel and stride must be positive");
        if (in[0] < layer.kernel_h || in[1] < layer.kernel_w)
            shape_error(layer, "kernel larger than input");
        return {window_out(in[0], layer.kernel_h, layer.stride),
            window_out(in[1], layer.kernel_w, layer.stride), layer.filters};
    case LayerKind::MaxPool2D:
        if (in.size() != 3)
            shape_error(layer, "expects an (H, W, C) input");
        if (layer.pool_h == 0 || layer.pool_w == 0 || layer.stride == 0)
            shape_error(layer, "pool and stride must be positive");
        if (in[0] < layer.pool_h || in[1] < layer.pool_w)
            shape_error(layer, "pool window larger than input");
        return {window_out(in[0], layer.pool_h, layer.stride), window_out(in[1], layer.pool_w, layer.stride),
            in[2]};
    case LayerKind::ReLU:
        return in;
    case LayerKind::Flatten:
        return {shape_size(in)};
    case LayerKind::Dense:
        if (in.size() != 1)
            shape_error(layer, "expects a rank-1 input");
        if (layer.units == 0)
            shape_error(layer, "units must be positive");
        return {layer.units};
    }
    shape_error(layer, "unknown kind");
}

std::vector<Shape> infer_shapes(const ModelSpec& model)
{
    if (model.input_shape.empty() || model.input_shape.size() > 4)
        throw Error(Errc::ShapeMismatch, "input shape must have rank 1..4");
    std::vector<Shape> shapes{model.input_shape};
    for (const auto& layer : model.layers)
        shapes.push_back(output_shape(layer, shapes.back()));
    return shapes;
}

std::pair<Shape, Shape> weight_shapes(const LayerSpec& layer, const Shape& in)
{
    if (layer.kind == LayerKind::Conv2D)
        return {{layer.kernel_h, layer.kernel_w, in.at(2), layer.filters}, {layer.filters}};
    if (layer.kind == LayerKind::Dense)
        return {{in.at(0), layer.units}, {layer.units}};
    return {};
}

void validate(const ModelSpec& model)
{
    const auto shapes = infer_shapes(model);
    for (size_t i = 0; i < model.layers.size(); ++i)
    {
        const auto& layer = model.layers[i];
        if (!layer.has_weights())
            continue;
        if (!layer.kernel || !layer.bias)
            shape_error(layer, "missing weights in layer " + std::to_string(i));
        const auto [ks, bs] = weight_shapes(layer, shapes[i]);
        if (layer.kernel->shape() != ks || layer.bias->shape() != bs)
            shape_error(layer, "weight shape inconsistent with input in layer " + std::to_string(i));
    }
}

size_t parameter_count(const LayerSpec& layer, const Shape& input)
{
    if (!layer.has_weights())
        return 0;
    const auto [ks, bs] = weight_shapes(layer, input);
    return shape_size(ks) + shape_size(bs);
}

size_t parameter_count(const ModelSpec& model)
{
    const auto shapes = infer_shapes(model);
    size_t total = 0;
    for (size_t i = 0; i < model.layers.size(); ++i)
        total += parameter_count(model.layers[i], shapes[i]);
    return total;
}

namespace
{
Fx checked_mul(Fx a, Fx b)
{
    const auto r = fx_mul(a, b);
    if (!r)
        throw Error(Errc::InferenceFault, "overflow trap in multiply");
    return *r;
}

Fx checked_add(Fx a, Fx b)
{
    const auto r = fx_add(a, b);
    if (!r)
        throw Error(Errc::InferenceFault, "overflow trap in add");
    return *r;
}

Fx activate(Activation act, Fx v)
{
    return act == Activation::Relu ? fx_relu(v) : v;
}
}  // namespace

FixedTensor apply_layer(const LayerSpec& layer, const FixedTensor& input)
{
    const Shape& in = input.shape();
    FixedTensor out(output_shape(layer, in));
    switch (layer.kind)
    {
    case LayerKind::Conv2D: {
        const size_t W = in[1], C = in[2];
        const size_t OH = out.shape()[0], OW = out.shape()[1], F = layer.filters;
        const auto& k = *layer.kernel;
        const auto& b = *layer.bias;
        for (size_t oh = 0; oh < OH; ++oh)
            for (size_t ow = 0; ow < OW; ++ow)
                for (size_t f = 0; f < F; ++f)
                {
                    Fx acc{};
                    for (size_t i = 0; i < layer.kernel_h; ++i)
                        for (size_t j = 0; j < layer.kernel_w; ++j)
                            for (size_t c = 0; c < C; ++c)
                            {
                                const size_t x = ((oh * layer.stride + i) * W + (ow * layer.stride + j)) * C + c;
                                const size_t w = ((i * layer.kernel_w + j) * C + c) * F + f;
                                acc = checked_add(acc, checked_mul(input[x], k[w]));
                            }
                    acc = checked_add(acc, b[f]);
                    out[(oh * OW + ow) * F + f] = activate(layer.activation, acc);
                }
        break;
    }
    case LayerKind::MaxPool2D: {
        const size_t W = in[1], C = in[2];
        const size_t OH = out.shape()[0], OW = out.shape()[1];
        for (size_t oh = 0; oh < OH; ++oh)
            for (size_t ow = 0; ow < OW; ++ow)
                for (size_t c = 0; c < C; ++c)
                {
                    Fx best = input[((oh * layer.stride) * W + ow * layer.stride) * C + c];
                    for (size_t i = 0; i < layer.pool_h; ++i)
                        for (size_t j = 0; j < layer.pool_w; ++j)
                            best = fx_max(best, input[((oh * layer.stride + i) * W + (ow * layer.stride + j)) * C + c]);
                    out[(oh * OW + ow) * C + c] = best;
                }
        break;
    }
    case LayerKind::ReLU:
        for (size_t i = 0; i < input.size(); ++i)
            out[i] = fx_relu(input[i]);
        break;
    case LayerKind::Flatten:
        for (size_t i = 0; i < input.size(); ++i)
            out[i] = input[i];
        break;
    case LayerKind::Dense: {
        const size_t K = in[0], U = layer.units;
        const auto& k = *layer.kernel;
        const auto& b = *layer.bias;
        for (size_t u = 0; u < U; ++u)
        {
            Fx acc{};
            for (size_t i = 0; i < K; ++i)
                acc = checked_add(acc, checked_mul(input[i], k[i * U + u]));
            acc = checked_add(acc, b[u]);
            out[u] = activate(layer.activation, acc);
        }
        break;
    }
    }
    return out;
}

FixedTensor infer(const ModelSpec& model, const FixedTensor& input)
{
    validate(model);
    if (input.shape() != model.input_shape)
        throw Error(Errc::ShapeMismatch, "input shape differs from model input shape");
    FixedTensor x = input;
    for (const auto& layer : model.layers)
        x = apply_layer(layer, x);
    return x;
}

ModelSpec generate_weights(ModelSpec model, uint64_t seed)
{
    auto rng = Xoshiro256::seeded(seed);
    const auto shapes = infer_shapes(model);
    auto draw = [&rng](const Shape& shape) {
        std::vector<Fx> data(shape_size(shape));
        for (auto& v : data)
            v = Fx{rng.uniform(-kScale, kScale)};
        return FixedTensor(shape, std::move(data));
    };
    for (size_t i = 0; i < model.layers.size(); ++i)
    {
        auto& layer = model.layers[i];
        if (!layer.has_weights())
            continue;
        const auto [ks, bs] = weight_shapes(layer, shapes[i]);
        layer.kernel = draw(ks);
        layer.bias = draw(bs);
    }
    return model;
}

std::vector<Fx> weight_image(const ModelSpec& model)
{
    std::vector<Fx> image;
    for (const auto& layer : model.layers)
    {
        if (!layer.has_weights())
            continue;
        const auto k = layer.kernel->data();
        const auto b = layer.bias->data();
        image.insert(image.end(), k.begin(), k.end());
        image.insert(image.end(), b.begin(), b.end());
    }
    return image;
}

// Emission rules (memory is word-addressed, all buffers row-major):
//   layout: input | weights | per-layer buffers | output
//   Conv2D/Dense: per output element, one MAC per kernel tap into a fresh
//     accumulator word, then ADD acc <- acc + bias; with relu activation a
//     RELU into a separate activation buffer.
//   MaxPool2D: a window of n > 1 taps is a chain of n-1 MAX into fresh
//     temporaries, the last one writing the output word; n = 1 is a MOVE.
//   ReLU: one RELU per element into a new buffer. Flatten: no code (alias).
//   Epilogue: one MOVE per output element into the output region, then HALT.
//   The empty model is [HALT] with the output region aliasing the input.
// Apart from accumulators no word is written twice, so a perturbation of any
// step's result stays visible in the final memory commitment.
namespace
{
class Emitter
{
public:
    explicit Emitter(uint64_t next_free) : next_(next_free) {}

    uint32_t alloc(size_t words)
    {
        const uint64_t base = next_;
        next_ += words;
        if (next_ > kAddressSpace)
            throw Error(Errc::UnsupportedLayer, "program memory exceeds the 2^24-word address space");
        return static_cast<uint32_t>(base);
    }

    void emit(Opcode op, uint32_t dst, uint32_t a = 0, uint32_t b = 0)
    {
        code.push_back(Instruction{op, dst, a, b, 0});
    }

    std::vector<Instruction> code;

private:
    uint64_t next_;
};

uint32_t lower_layer(Emitter& em, const LayerSpec& layer, const Shape& in, const Shape& out,
    uint32_t in_base, uint32_t& weight_cursor)
{
    const size_t out_size = shape_size(out);
    switch (layer.kind)
    {
    case LayerKind::Conv2D:
    case LayerKind::Dense: {
        const auto [ks, bs] = weight_shapes(layer, in);
        const uint32_t kernel = weight_cursor;
        const uint32_t bias = kernel + static_cast<uint32_t>(shape_size(ks));
        weight_cursor = bias + static_cast<uint32_t>(shape_size(bs));
        const uint32_t acc = em.alloc(out_size);
        if (layer.kind == LayerKind::Dense)
        {
            const size_t K = in[0], U = layer.units;
            for (size_t u = 0; u < U; ++u)
            {
                for (size_t i = 0; i < K; ++i)
                    em.emit(Opcode::Mac, acc + u, in_base + i, kernel + i * U + u);
                em.emit(Opcode::Add, acc + u, acc + u, bias + u);
            }
        }
        else
        {
            const size_t W = in[1], C = in[2];
            const size_t OH = out[0], OW = out[1], F = layer.filters;
            for (size_t oh = 0; oh < OH; ++oh)
                for (size_t ow = 0; ow < OW; ++ow)
                    for (size_t f = 0; f < F; ++f)
                    {
                        const uint32_t dst = acc + (oh * OW + ow) * F + f;
                        for (size_t i = 0; i < layer.kernel_h; ++i)
                            for (size_t j = 0; j < layer.kernel_w; ++j)
                                for (size_t c = 0; c < C; ++c)
                                {
                                    const size_t x = ((oh * layer.stride + i) * W + (ow * layer.stride + j)) * C + c;
                                    const size_t w = ((i * layer.kernel_w + j) * C + c) * F + f;
                                    em.emit(Opcode::Mac, dst, in_base + x, kernel + w);
                                }
                        em.emit(Opcode::Add, dst, dst, bias + f);
                    }
        }
        if (layer.activation != Activation::Relu)
            return acc;
        const uint32_t act = em.alloc(out_size);
        for (size_t i = 0; i < out_size; ++i)
            em.emit(Opcode::Relu, act + i, acc + i);
        return act;
    }
    case LayerKind::MaxPool2D: {
        const size_t W = in[1], C = in[2];
        const size_t OH = out[0], OW = out[1];
        const size_t taps = layer.pool_h * layer.pool_w;
        const uint32_t dst = em.alloc(out_size);
        std::vector<uint32_t> window(taps);
        for (size_t oh = 0; oh < OH; ++oh)
            for (size_t ow = 0; ow < OW; ++ow)
                for (size_t c = 0; c < C; ++c)
                {
                    size_t n = 0;
                    for (size_t i = 0; i < layer.pool_h; ++i)
                        for (size_t j = 0; j < layer.pool_w; ++j)
                            window[n++] = in_base + ((oh * layer.stride + i) * W + (ow * layer.stride + j)) * C + c;
                    const uint32_t o = dst + (oh * OW + ow) * C + c;
                    if (taps == 1)
                    {
                        em.emit(Opcode::Move, o, window[0]);
                        continue;
                    }
                    uint32_t running = window[0];
                    for (size_t t = 1; t < taps; ++t)
                    {
                        const uint32_t target = t + 1 == taps ? o : em.alloc(1);
                        em.emit(Opcode::Max, target, running, window[t]);
                        running = target;
                    }
                }
        return dst;
    }
    case LayerKind::ReLU: {
        const uint32_t dst = em.alloc(out_size);
        for (size_t i = 0; i < out_size; ++i)
            em.emit(Opcode::Relu, dst + i, in_base + i);
        return dst;
    }
    case LayerKind::Flatten:
        return in_base;
    }
    throw Error(Errc::UnsupportedLayer, std::string(to_string(layer.kind)));
}
}  // namespace

Program compile(const ModelSpec& model)
{
    validate(model);
    const auto shapes = infer_shapes(model);
    Program p;
    p.input_shape = model.input_shape;
    p.output_shape = shapes.back();
    p.weight_image = weight_image(model);

    const uint64_t in_size = shape_size(model.input_shape);
    if (in_size + p.weight_image.size() > kAddressSpace)
        throw Error(Errc::UnsupportedLayer, "program memory exceeds the 2^24-word address space");
    p.input = Region{0, static_cast<uint32_t>(in_size)};
    p.weights = Region{static_cast<uint32_t>(in_size), static_cast<uint32_t>(p.weight_image.size())};

    if (model.layers.empty())
    {
        p.output = p.input;
        p.code.push_back(Instruction{Opcode::Halt});
        return p;
    }

    Emitter em(p.weights.end());
    uint32_t cursor = p.weights.base;
    uint32_t current = p.input.base;
    for (size_t i = 0; i < model.layers.size(); ++i)
        current = lower_layer(em, model.layers[i], shapes[i], shapes[i + 1], current, cursor);

    const size_t out_size = shape_size(p.output_shape);
    const uint32_t out = em.alloc(out_size);
    for (size_t i = 0; i < out_size; ++i)
        em.emit(Opcode::Move, out + i, current + i);
    em.emit(Opcode::Halt, 0);
    p.output = Region{out, static_cast<uint32_t>(out_size)};
    p.code = std::move(em.code);
    return p;
}

Hash256 program_hash(const Program& p)
{
    Bytes buf;
    buf.reserve(64 + p.code.size() * 21);
    auto put_shape = [&buf](const Shape& s) {
        put_le64(buf, s.size());
        for (const auto d : s)
            put_le64(buf, d);
    };
    for (const auto& r : {p.input, p.output, p.weights})
    {
        put_le64(buf, r.base);
        put_le64(buf, r.size);
    }
    put_shape(p.input_shape);
    put_shape(p.output_shape);
    put_le64(buf, p.code.size());
    for (const auto& ins : p.code)
    {
        buf.push_back(static_cast<uint8_t>(ins.op));
        for (const uint32_t v : {ins.dst, ins.a, ins.b})
            for (int i = 0; i < 4; ++i)
                buf.push_back(static_cast<uint8_t>(v >> (8 * i)));
        put_le64(buf, static_cast<uint64_t>(ins.imm));
    }
    return sha256(buf);
}

void validate(const Program& p)
{
    for (const auto& r : {p.input, p.output, p.weights})
    {
        if (r.end() > kAddressSpace)
            throw Error(Errc::InvariantBreach, "region outside address space");
    }
    if (p.weight_image.size() != p.weights.size)
        throw Error(Errc::InvariantBreach, "weight image does not fill the weight region");
    if (p.input.size != shape_size(p.input_shape) || p.output.size != shape_size(p.output_shape))
        throw Error(Errc::InvariantBreach, "I/O region sizes disagree with shapes");
    for (const auto& ins : p.code)
    {
        if (ins.dst >= kAddressSpace || ins.a >= kAddressSpace || ins.b >= kAddressSpace)
            throw Error(Errc::InvariantBreach, "operand address outside address space");
    }
    if (p.code.empty())
        throw Error(Errc::InvariantBreach, "empty program");
}

// ---------------------------------------------------------------------------
// JSON

namespace
{
LayerKind kind_from_string(const std::string& s)
{
    for (const auto k : {LayerKind::Conv2D, LayerKind::MaxPool2D, LayerKind::ReLU, LayerKind::Flatten, LayerKind::Dense})
    {
        if (to_string(k) == s)
            return k;
    }
    throw Error(Errc::UnsupportedLayer, "unknown layer kind '" + s + "'");
}

Activation activation_from(const nlohmann::json& j)
{
    const auto s = j.value("activation", std::string("none"));
    if (s == "relu")
        return Activation::Relu;
    if (s == "none" || s == "linear")
        return Activation::None;
    throw Error(Errc::ParseError, "unknown activation '" + s + "'");
}
}  // namespace

nlohmann::json to_json(const ModelSpec& model)
{
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : model.layers)
    {
        nlohmann::json j{{"kind", to_string(l.kind)}};
        switch (l.kind)
        {
        case LayerKind::Conv2D:
            j["filters"] = l.filters;
            j["kernel"] = {l.kernel_h, l.kernel_w};
            j["stride"] = l.stride;
            break;
        case LayerKind::MaxPool2D:
            j["pool"] = {l.pool_h, l.pool_w};
            j["stride"] = l.stride;
            break;
        case LayerKind::Dense:
            j["units"] = l.units;
            break;
        default:
            break;
        }
        if (l.has_weights())
        {
            j["activation"] = l.activation == Activation::Relu ? "relu" : "none";
            if (l.kernel)
                j["weights"] = to_json(*l.kernel);
            if (l.bias)
                j["bias"] = to_json(*l.bias);
        }
        layers.push_back(std::move(j));
    }
    return {{"input_shape", model.input_shape}, {"layers", std::move(layers)}};
}

ModelSpec model_from_json(const nlohmann::json& j)
{
    try
    {
        ModelSpec m;
        m.input_shape = j.at("input_shape").get<Shape>();
        for (const auto& lj : j.at("layers"))
        {
            const auto kind_name = lj.at("kind").get<std::string>();
            if (kind_name == "Dropout")
                continue;
            LayerSpec l;
            l.kind = kind_from_string(kind_name);
            switch (l.kind)
            {
            case LayerKind::Conv2D: {
                const auto k = lj.at("kernel").get<std::vector<size_t>>();
                if (k.size() != 2)
                    throw Error(Errc::ParseError, "Conv2D kernel must be [h, w]");
                l = LayerSpec::conv2d(lj.at("filters").get<size_t>(), k[0], k[1], lj.value("stride", size_t{1}),
                    activation_from(lj));
                break;
            }
            case LayerKind::MaxPool2D: {
                const auto p = lj.at("pool").get<std::vector<size_t>>();
                if (p.size() != 2)
                    throw Error(Errc::ParseError, "MaxPool2D pool must be [h, w]");
                l = LayerSpec::max_pool(p[0], p[1], lj.value("stride", size_t{0}));
                break;
            }
            case LayerKind::Dense:
                l = LayerSpec::dense(lj.at("units").get<size_t>(), activation_from(lj));
                break;
            default:
                break;
            }
            if (lj.contains("weights"))
                l.kernel = tensor_from_json(lj.at("weights"));
            if (lj.contains("bias"))
                l.bias = tensor_from_json(lj.at("bias"));
            m.layers.push_back(std::move(l));
        }
        return m;
    }
    catch (const nlohmann::json::exception& e)
    {
        throw Error(Errc::ParseError, std::string("model: ") + e.what());
    }
}

nlohmann::json weights_to_json(const ModelSpec& model)
{
    nlohmann::json out = nlohmann::json::array();
    for (size_t i = 0; i < model.layers.size(); ++i)
    {
        const auto& l = model.layers[i];
        if (!l.has_weights())
            continue;
        if (!l.kernel || !l.bias)
            throw Error(Errc::ShapeMismatch, "layer " + std::to_string(i) + " has no weights");
        out.push_back({{"layer", i}, {"kernel", to_json(*l.kernel)}, {"bias", to_json(*l.bias)}});
    }
    return out;
}

ModelSpec apply_weights_json(ModelSpec skeleton, const nlohmann::json& weights)
{
    try
    {
        if (!weights.is_array())
            throw Error(Errc::ParseError, "weights must be an array");
        size_t expected = 0;
        for (size_t i = 0; i < skeleton.layers.size(); ++i)
        {
            if (skeleton.layers[i].has_weights())
                ++expected;
        }
        if (weights.size() != expected)
            throw Error(Errc::ParseError, "weight entry count differs from weight-bearing layers");
        size_t e = 0;
        for (size_t i = 0; i < skeleton.layers.size(); ++i)
        {
            auto& l = skeleton.layers[i];
            if (!l.has_weights())
                continue;
            const auto& w = weights.at(e++);
            if (w.at("layer").get<size_t>() != i)
                throw Error(Errc::ParseError, "weight entry for wrong layer");
            l.kernel = tensor_from_json(w.at("kernel"));
            l.bias = tensor_from_json(w.at("bias"));
        }
        validate(skeleton);
        return skeleton;
    }
    catch (const nlohmann::json::exception& ex)
    {
        throw Error(Errc::ParseError, std::string("weights: ") + ex.what());
    }
    catch (const Error& ex)
    {
        if (ex.code() == Errc::ParseError)
            throw;
        throw Error(Errc::ParseError, ex.what());
    }
}

Hash256 model_hash(const ModelSpec& model)
{
    return sha256(canonical_dump(to_json(model)));
}

ModelSpec figure1_skeleton()
{
    ModelSpec m;
    m.input_shape = {28, 28, 1};
    m.layers = {
        LayerSpec::conv2d(32, 3, 3, 1, Activation::Relu),
        LayerSpec::max_pool(2, 2),
        LayerSpec::conv2d(64, 3, 3, 1, Activation::Relu),
        LayerSpec::max_pool(2, 2),
        LayerSpec::flatten(),
        LayerSpec::dense(10),
    };
    return m;
}

FixedTensor figure1_test_image()
{
    FixedTensor img({28, 28, 1});
    for (size_t r = 0; r < 28; ++r)
        for (size_t c = 0; c < 28; ++c)
            img[r * 28 + c] = Fx{static_cast<int64_t>(((r * 7 + c * 13) % 256) << 8)};
    return img;
}
}  // namespace oppai
