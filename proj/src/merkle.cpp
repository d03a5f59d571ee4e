// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#include <oppai/error.hpp>
#include <oppai/merkle.hpp>

#include <algorithm>

namespace oppai
{
namespace
{
std::array<Hash256, kAddressBits + 1> make_defaults() noexcept
{
    std::array<Hash256, kAddressBits + 1> d{};
    for (int l = 0; l < kAddressBits; ++l)
        d[l + 1] = sha256_pair(d[l], d[l]);
    return d;
}

const std::array<Hash256, kAddressBits + 1> kDefaults = make_defaults();
}  // namespace

const Hash256& default_hash(int level) noexcept
{
    return kDefaults[level];
}

Hash256 leaf_hash(uint64_t address, int64_t raw) noexcept
{
    uint8_t buf[16];
    for (int i = 0; i < 8; ++i)
    {
        buf[i] = static_cast<uint8_t>(address >> (8 * i));
        buf[8 + i] = static_cast<uint8_t>(static_cast<uint64_t>(raw) >> (8 * i));
    }
    return sha256(std::span<const uint8_t>(buf, sizeof(buf)));
}

Hash256 fold_sparse(std::vector<std::pair<uint64_t, Hash256>> nodes, int from_level, int to_level)
{
    for (int level = from_level; level < to_level; ++level)
    {
        std::vector<std::pair<uint64_t, Hash256>> parents;
        parents.reserve(nodes.size() / 2 + 1);
        for (size_t i = 0; i < nodes.size();)
        {
            const uint64_t idx = nodes[i].first;
            const uint64_t parent = idx >> 1;
            if ((idx & 1) == 0)
            {
                const bool has_right = i + 1 < nodes.size() && nodes[i + 1].first == idx + 1;
                parents.emplace_back(parent,
                    sha256_pair(nodes[i].second, has_right ? nodes[i + 1].second : kDefaults[level]));
                i += has_right ? 2 : 1;
            }
            else
            {
                parents.emplace_back(parent, sha256_pair(kDefaults[level], nodes[i].second));
                i += 1;
            }
        }
        nodes = std::move(parents);
    }
    if (nodes.empty())
        return kDefaults[to_level];
    return nodes.front().second;
}

void Memory::store(uint32_t address, Fx value)
{
    if (address >= kAddressSpace)
        throw Error(Errc::IndexOutOfRange, "address outside the 2^24-word space");
    const auto page_index = address >> kPageBits;
    if (slots_.empty())
    {
        if (value.raw == 0)
            return;
        slots_.assign(kPageCount, -1);
    }
    auto slot = slots_[page_index];
    if (slot < 0)
    {
        if (value.raw == 0)
            return;
        // Keep pages_ ordered by page index so iteration is address-ordered.
        const auto pos = std::lower_bound(pages_.begin(), pages_.end(), page_index,
            [](const Page& p, uint32_t idx) { return p.index < idx; });
        const auto at = static_cast<size_t>(pos - pages_.begin());
        Page fresh;
        fresh.index = page_index;
        pages_.insert(pos, std::move(fresh));
        for (size_t i = at; i < pages_.size(); ++i)
            slots_[pages_[i].index] = static_cast<int32_t>(i);
        slot = static_cast<int32_t>(at);
    }
    auto& page = pages_[slot];
    auto& word = page.words[address & (kPageWords - 1)];
    if (word == value.raw)
        return;
    if (word == 0)
        ++page.nonzero;
    else if (value.raw == 0)
        --page.nonzero;
    word = value.raw;
    page.root_valid = false;
}

size_t Memory::populated() const noexcept
{
    size_t n = 0;
    for (const auto& p : pages_)
        n += p.nonzero;
    return n;
}

std::vector<std::pair<uint32_t, int64_t>> Memory::words() const
{
    std::vector<std::pair<uint32_t, int64_t>> out;
    for (const auto& p : pages_)
    {
        if (p.nonzero == 0)
            continue;
        const uint32_t base = p.index << kPageBits;
        for (uint32_t i = 0; i < kPageWords; ++i)
        {
            if (p.words[i] != 0)
                out.emplace_back(base + i, p.words[i]);
        }
    }
    return out;
}

Hash256 Memory::page_root(const Page& page)
{
    std::vector<std::pair<uint64_t, Hash256>> leaves;
    leaves.reserve(page.nonzero);
    const uint64_t base = uint64_t{page.index} << kPageBits;
    for (uint32_t i = 0; i < kPageWords; ++i)
    {
        if (page.words[i] != 0)
            leaves.emplace_back(base + i, leaf_hash(base + i, page.words[i]));
    }
    return fold_sparse(std::move(leaves), 0, kPageBits);
}

Hash256 Memory::root() const
{
    std::vector<std::pair<uint64_t, Hash256>> nodes;
    nodes.reserve(pages_.size());
    for (const auto& p : pages_)
    {
        if (p.nonzero == 0)
            continue;
        nodes.emplace_back(p.index, p.root_valid ? p.root : page_root(p));
    }
    return fold_sparse(std::move(nodes), kPageBits, kAddressBits);
}

void Memory::refresh()
{
    for (auto& p : pages_)
    {
        if (!p.root_valid && p.nonzero != 0)
        {
            p.root = page_root(p);
            p.root_valid = true;
        }
    }
}
}  // namespace oppai
