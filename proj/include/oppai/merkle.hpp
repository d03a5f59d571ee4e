// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <oppai/hash.hpp>
#include <oppai/numerics.hpp>
#include <oppai/program.hpp>

#include <cstdint>
#include <utility>
#include <vector>

namespace oppai
{
/// Sparse Merkle tree of depth 24 over word addresses.
///   default(0)   = 32 zero bytes
///   default(l+1) = SHA-256(default(l) || default(l))
///   leaf         = SHA-256(LE64(address) || LE64(raw))   for raw != 0
///   internal     = SHA-256(left || right)
/// A zero word is indistinguishable from an absent one.
const Hash256& default_hash(int level) noexcept;
Hash256 leaf_hash(uint64_t address, int64_t raw) noexcept;

/// Folds nodes at `from_level` (sorted by index, all non-default) up to
/// `to_level` and returns the single remaining node.
Hash256 fold_sparse(std::vector<std::pair<uint64_t, Hash256>> nodes, int from_level, int to_level);

/// Word-addressable memory over the 2^24 space, stored as 1024-word pages
/// that carry a cached subtree root. `root()` never mutates; stale pages are
/// hashed on the fly. `refresh()` brings the caches up to date.
class Memory
{
public:
    static constexpr int kPageBits = 10;
    static constexpr uint32_t kPageWords = 1u << kPageBits;
    static constexpr uint32_t kPageCount = static_cast<uint32_t>(kAddressSpace >> kPageBits);

    Fx load(uint32_t address) const noexcept
    {
        const auto page = address >> kPageBits;
        if (slots_.empty() || slots_[page] < 0)
            return Fx{};
        return Fx{pages_[slots_[page]].words[address & (kPageWords - 1)]};
    }

    void store(uint32_t address, Fx value);

    /// Number of nonzero words.
    size_t populated() const noexcept;

    /// Nonzero words in address order.
    std::vector<std::pair<uint32_t, int64_t>> words() const;

    Hash256 root() const;
    void refresh();

    friend bool operator==(const Memory& a, const Memory& b) { return a.words() == b.words(); }

private:
    struct Page
    {
        uint32_t index = 0;
        uint32_t nonzero = 0;
        bool root_valid = false;
        Hash256 root;
        std::vector<int64_t> words = std::vector<int64_t>(kPageWords, 0);
    };

    static Hash256 page_root(const Page& page);

    std::vector<int32_t> slots_;  // page index -> position in pages_, or -1
    std::vector<Page> pages_;
};
}  // namespace oppai
