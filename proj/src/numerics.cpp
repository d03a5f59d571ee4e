// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#include <oppai/error.hpp>
#include <oppai/numerics.hpp>

#include <limits>
#include <numeric>

namespace oppai
{
std::optional<Fx> fx_mul(Fx a, Fx b) noexcept
{
    const __int128 product = static_cast<__int128>(a.raw) * b.raw;
    // Arithmetic shift of a signed value floors toward negative infinity.
    const __int128 scaled = product >> kFracBits;
    if (scaled > std::numeric_limits<int64_t>::max() || scaled < std::numeric_limits<int64_t>::min())
        return std::nullopt;
    return Fx{static_cast<int64_t>(scaled)};
}

std::optional<Fx> fx_add(Fx a, Fx b) noexcept
{
    int64_t sum = 0;
    if (__builtin_add_overflow(a.raw, b.raw, &sum))
        return std::nullopt;
    return Fx{sum};
}

size_t shape_size(const Shape& shape) noexcept
{
    if (shape.empty())
        return 0;
    return std::accumulate(shape.begin(), shape.end(), size_t{1}, std::multiplies<>());
}

namespace
{
void check_shape(const Shape& shape)
{
    if (shape.size() > 4)
        throw Error(Errc::ShapeMismatch, "tensor rank above 4");
    for (const auto d : shape)
    {
        if (d == 0)
            throw Error(Errc::ShapeMismatch, "tensor dimensions must be positive");
    }
}
}  // namespace

FixedTensor::FixedTensor(Shape shape, std::vector<Fx> data)
  : shape_(std::move(shape)), data_(std::move(data))
{
    check_shape(shape_);
    if (data_.size() != shape_size(shape_))
        throw Error(Errc::ShapeMismatch, "tensor data length does not match shape");
}

FixedTensor::FixedTensor(Shape shape) : shape_(std::move(shape))
{
    check_shape(shape_);
    data_.assign(shape_size(shape_), Fx{});
}

FixedTensor FixedTensor::from_raw(Shape shape, std::span<const int64_t> raws)
{
    std::vector<Fx> data;
    data.reserve(raws.size());
    for (const auto r : raws)
        data.push_back(Fx{r});
    return FixedTensor(std::move(shape), std::move(data));
}

std::vector<int64_t> FixedTensor::raws() const
{
    std::vector<int64_t> out;
    out.reserve(data_.size());
    for (const auto v : data_)
        out.push_back(v.raw);
    return out;
}

nlohmann::json to_json(const FixedTensor& t)
{
    return {{"shape", t.shape()}, {"data", t.raws()}};
}

FixedTensor tensor_from_json(const nlohmann::json& j)
{
    try
    {
        auto shape = j.at("shape").get<Shape>();
        auto raws = j.at("data").get<std::vector<int64_t>>();
        return FixedTensor::from_raw(std::move(shape), raws);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw Error(Errc::ParseError, std::string("tensor: ") + e.what());
    }
    catch (const Error& e)
    {
        throw Error(Errc::ParseError, e.what());
    }
}

std::string canonical_dump(const nlohmann::json& j)
{
    // nlohmann::json keeps object keys in a std::map, so dump() is sorted.
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
}
}  // namespace oppai
