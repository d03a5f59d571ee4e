// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <oppai/hash.hpp>
#include <oppai/numerics.hpp>
#include <oppai/program.hpp>

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace oppai
{
enum class LayerKind
{
    Conv2D,
    MaxPool2D,
    ReLU,
    Flatten,
    Dense,
};

enum class Activation
{
    None,
    Relu,
};

std::string_view to_string(LayerKind kind) noexcept;

/// Hyperparameters are only meaningful for the kinds that use them. Conv2D
/// expects an (H, W, C) input and kernel shape (kh, kw, C, filters); Dense
/// expects a rank-1 input and kernel shape (inputs, units). Padding is valid.
struct LayerSpec
{
    LayerKind kind = LayerKind::ReLU;
    size_t filters = 0;
    size_t kernel_h = 0;
    size_t kernel_w = 0;
    size_t stride = 1;
    size_t pool_h = 0;
    size_t pool_w = 0;
    size_t units = 0;
    Activation activation = Activation::None;
    std::optional<FixedTensor> kernel;
    std::optional<FixedTensor> bias;

    static LayerSpec conv2d(size_t filters, size_t kh, size_t kw, size_t stride = 1,
        Activation act = Activation::None);
    static LayerSpec max_pool(size_t ph, size_t pw, size_t stride = 0);
    static LayerSpec relu();
    static LayerSpec flatten();
    static LayerSpec dense(size_t units, Activation act = Activation::None);

    bool has_weights() const noexcept { return kind == LayerKind::Conv2D || kind == LayerKind::Dense; }

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct ModelSpec
{
    Shape input_shape;
    std::vector<LayerSpec> layers;

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Output shape of one layer, or Error(ShapeMismatch).
Shape output_shape(const LayerSpec& layer, const Shape& input);

/// Shapes at every layer boundary: element 0 is the input, element i+1 the
/// output of layer i.
std::vector<Shape> infer_shapes(const ModelSpec& model);

/// Expected (kernel, bias) shapes of a weight-bearing layer for a given input.
std::pair<Shape, Shape> weight_shapes(const LayerSpec& layer, const Shape& input);

/// Shape inference plus weight-shape agreement. Throws ShapeMismatch.
void validate(const ModelSpec& model);

size_t parameter_count(const LayerSpec& layer, const Shape& input);
size_t parameter_count(const ModelSpec& model);

/// Reference (non-VM) forward pass. Overflow surfaces as InferenceFault.
FixedTensor infer(const ModelSpec& model, const FixedTensor& input);
FixedTensor apply_layer(const LayerSpec& layer, const FixedTensor& input);

/// Fills every Conv2D/Dense kernel and bias with raws uniform in
/// [-2^16, 2^16] from xoshiro256**(seed), layer by layer, kernel then bias,
/// row-major. Existing weights are overwritten.
ModelSpec generate_weights(ModelSpec skeleton, uint64_t seed);

/// Flat weight image in the same order used by generate_weights and compile.
std::vector<Fx> weight_image(const ModelSpec& model);

/// Lowers the model to scalar FPVM instructions. See model.cpp for the
/// emission rules; instruction count is a pure function of the model.
Program compile(const ModelSpec& model);

nlohmann::json to_json(const ModelSpec& model);
/// Layers of kind "Dropout" are accepted and dropped (identity at inference).
ModelSpec model_from_json(const nlohmann::json& j);

/// Weight-bearing layers only: [{"bias":..,"kernel":..,"layer":i}, ...].
nlohmann::json weights_to_json(const ModelSpec& model);
/// Inverse of weights_to_json against a skeleton; throws ParseError.
ModelSpec apply_weights_json(ModelSpec skeleton, const nlohmann::json& weights);

/// SHA-256 of the canonical model JSON.
Hash256 model_hash(const ModelSpec& model);

/// The simple MNIST convnet without dropout and softmax: Conv 32@3x3 relu,
/// MaxPool 2x2, Conv 64@3x3 relu, MaxPool 2x2, Flatten, Dense 10.
ModelSpec figure1_skeleton();

/// Deterministic 28x28x1 stand-in for an MNIST digit: raw(r, c) = ((7r + 13c) mod 256) << 8.
FixedTensor figure1_test_image();
}  // namespace oppai
