// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <oppai/hash.hpp>
#include <oppai/numerics.hpp>

#include <cstdint>
#include <string_view>
#include <vector>

namespace oppai
{
inline constexpr int kAddressBits = 24;
inline constexpr uint64_t kAddressSpace = uint64_t{1} << kAddressBits;

/// One scalar primitive per instruction.
///   LoadI dst, imm      mem[dst] = imm
///   Mac   dst, a, b     mem[dst] = mem[dst] + mem[a] * mem[b]
///   Add   dst, a, b     mem[dst] = mem[a] + mem[b]
///   Max   dst, a, b     mem[dst] = max(mem[a], mem[b])
///   Relu  dst, a        mem[dst] = max(mem[a], 0)
///   Move  dst, a        mem[dst] = mem[a]
///   Halt                halted = true, pc unchanged
enum class Opcode : uint8_t
{
    LoadI = 0,
    Mac = 1,
    Add = 2,
    Max = 3,
    Relu = 4,
    Move = 5,
    Halt = 6,
};

std::string_view to_string(Opcode op) noexcept;

struct Instruction
{
    Opcode op = Opcode::Halt;
    uint32_t dst = 0;
    uint32_t a = 0;
    uint32_t b = 0;
    int64_t imm = 0;

    friend bool operator==(const Instruction&, const Instruction&) = default;
};

struct Region
{
    uint32_t base = 0;
    uint32_t size = 0;

    uint64_t end() const noexcept { return uint64_t{base} + size; }
    bool contains(uint64_t addr) const noexcept { return addr >= base && addr < end(); }

    friend bool operator==(const Region&, const Region&) = default;
};

/// A compiled single-step instruction stream plus its memory layout. The
/// weight image is the content of `weights` at step 0; it is excluded from
/// `program_hash` so the same public structure can be bound to private weights.
struct Program
{
    std::vector<Instruction> code;
    Region input;
    Region output;
    Region weights;
    Shape input_shape;
    Shape output_shape;
    std::vector<Fx> weight_image;

    friend bool operator==(const Program&, const Program&) = default;
};

/// SHA-256 over the program structure: code, regions and I/O shapes.
Hash256 program_hash(const Program& program);

/// Throws Error(InvariantBreach) if any operand address lies outside the
/// 2^24-word space or the weight image does not fill its region.
void validate(const Program& program);
}  // namespace oppai
