// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

namespace oppai
{
/// Fractional bits of every fixed-point scalar. Protocol-wide constant.
inline constexpr int kFracBits = 16;
inline constexpr int64_t kScale = int64_t{1} << kFracBits;

/// Q47.16 scalar. The value is raw / 2^16.
struct Fx
{
    int64_t raw = 0;

    static constexpr Fx from_raw(int64_t r) noexcept { return Fx{r}; }
    static constexpr Fx from_int(int64_t v) noexcept { return Fx{v * kScale}; }

    double to_double() const noexcept { return static_cast<double>(raw) / kScale; }

    friend constexpr bool operator==(Fx, Fx) = default;
    friend constexpr auto operator<=>(Fx, Fx) = default;
};

// Checked primitives. An empty optional is the Overflow trap.

/// floor(a*b / 2^16) with a 128-bit intermediate.
std::optional<Fx> fx_mul(Fx a, Fx b) noexcept;
std::optional<Fx> fx_add(Fx a, Fx b) noexcept;

constexpr Fx fx_max(Fx a, Fx b) noexcept
{
    return a.raw >= b.raw ? a : b;
}

constexpr Fx fx_relu(Fx a) noexcept
{
    return a.raw > 0 ? a : Fx{0};
}

using Shape = std::vector<size_t>;

size_t shape_size(const Shape& shape) noexcept;

/// Row-major tensor of Fx, rank 0..4. Rank 0 is only used for the empty
/// tensor placeholder (no data).
class FixedTensor
{
public:
    FixedTensor() = default;
    FixedTensor(Shape shape, std::vector<Fx> data);
    explicit FixedTensor(Shape shape);  // zero-filled

    static FixedTensor from_raw(Shape shape, std::span<const int64_t> raws);

    const Shape& shape() const noexcept { return shape_; }
    size_t size() const noexcept { return data_.size(); }
    size_t rank() const noexcept { return shape_.size(); }

    std::span<const Fx> data() const noexcept { return data_; }
    std::span<Fx> data() noexcept { return data_; }

    Fx operator[](size_t i) const { return data_[i]; }
    Fx& operator[](size_t i) { return data_[i]; }

    std::vector<int64_t> raws() const;

    friend bool operator==(const FixedTensor&, const FixedTensor&) = default;

private:
    Shape shape_;
    std::vector<Fx> data_;
};

nlohmann::json to_json(const FixedTensor& t);
/// Throws Error(ParseError) on a malformed object or data/shape length mismatch.
FixedTensor tensor_from_json(const nlohmann::json& j);

/// Canonical encoding: sorted keys and no whitespace.
std::string canonical_dump(const nlohmann::json& j);
}  // namespace oppai
