// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#include "testkit.hpp"

#include <oppai/error.hpp>
#include <oppai/fpvm.hpp>
#include <oppai/merkle.hpp>

#include <gtest/gtest.h>

#include <algorithm>

using namespace oppai;

namespace
{
VmState make_state(uint64_t pc, bool halted, Trap fault, std::vector<std::pair<uint32_t, int64_t>> words)
{
    VmState s;
    s.pc = pc;
    s.halted = halted;
    s.fault = fault;
    for (auto [a, v] : words)
        s.memory.store(a, Fx{v});
    return s;
}

Program tiny(std::vector<Instruction> code)
{
    Program p;
    p.input = {0, 2};
    p.output = {2, 1};
    p.weights = {3, 0};
    p.input_shape = {2};
    p.output_shape = {1};
    p.code = std::move(code);
    return p;
}

ModelSpec dense(size_t inputs, size_t units, uint64_t seed)
{
    ModelSpec m;
    m.input_shape = {inputs};
    m.layers.push_back(LayerSpec::dense(units));
    return generate_weights(m, seed);
}

template <class F>
Errc code_of(F&& f)
{
    try
    {
        f();
    }
    catch (const Error& e)
    {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return Errc::InvariantBreach;
}
}  // namespace

// Digests frozen from tests/oracles/state_root_oracle.py.
TEST(StateRoot, GoldenDigests)
{
    EXPECT_EQ(to_hex(default_hash(24)), "31206fa80a50bb6abe29085058f16212212a60eec8f049fecb92d8c8e0a84bc0");
    EXPECT_EQ(to_hex(root(VmState{})), "45ff8873a9d278e3391bf331867518a92a9cdff14211fc0b1a25e56a9534361d");
    EXPECT_EQ(to_hex(root(make_state(3, false, Trap::None, {{0, 65536}, {5, -2}}))),
        "5c43f573151d166b23dbda5ab1325588f21925695eef688e94315f5cb701b9ec");
    EXPECT_EQ(to_hex(root(make_state(7, true, Trap::None, {{1023, 1}, {1024, 2}, {(1u << 24) - 1, -65536}}))),
        "35d72bb5cdf8a42efeecf1b4c595eb35c2425c7b7a52a4f177c491bc6602fe24");
    EXPECT_EQ(to_hex(root(make_state(2, true, Trap::Overflow, {{10, 131072}}))),
        "f85dd574c126730a2bc531209ab038e1329d1cb670758f7599752fd316bad21b");
}

TEST(StateRoot, ZeroWordEqualsAbsent)
{
    VmState a = make_state(0, false, Trap::None, {{4, 9}});
    a.memory.store(4, Fx{0});
    EXPECT_EQ(root(a), root(VmState{}));
}

TEST(StateRoot, JsonRoundTrip)
{
    const VmState s = make_state(11, true, Trap::Overflow, {{0, 1}, {4096, -7}, {99999, 65536}});
    const VmState back = state_from_json(to_json(s));
    EXPECT_EQ(back, s);
    EXPECT_EQ(root(back), root(s));
}

TEST(StateRoot, DiffersOnSingleWordMutation)
{
    Xoshiro256 rng = Xoshiro256::seeded(5);
    const VmState base = make_state(1, false, Trap::None, {{0, 10}, {77, -3}, {5000, 8}});
    const Hash256 r0 = root(base);
    for (int i = 0; i < 200; ++i)
    {
        VmState s = base;
        const auto addr = static_cast<uint32_t>(rng.below(kAddressSpace));
        s.memory.store(addr, Fx{s.memory.load(addr).raw + 1 + static_cast<int64_t>(rng.below(1000))});
        ASSERT_NE(root(s), r0);
    }
}

TEST(CommitmentBinding, TenThousandMutations)
{
    Xoshiro256 rng = Xoshiro256::seeded(17);
    const auto m = dense(4, 3, 2);
    const Program p = compile(m);
    VmState s = initial_state(p, testkit::random_input(rng, m.input_shape));
    for (int i = 0; i < 6; ++i)
        step_in_place(p, s);
    const Hash256 r0 = root(s);
    const auto words = s.memory.words();
    for (int i = 0; i < 10000; ++i)
    {
        VmState t = s;
        switch (rng.below(4))
        {
        case 0: {
            const auto [addr, v] = words[rng.below(words.size())];
            t.memory.store(addr, Fx{v ^ static_cast<int64_t>(1 + rng.below(1u << 20))});
            break;
        }
        case 1:
            t.pc += 1 + rng.below(100);
            break;
        case 2:
            t.halted = !t.halted;
            break;
        default:
            t.fault = t.fault == Trap::None ? Trap::Overflow : Trap::None;
            break;
        }
        ASSERT_NE(root(t), r0) << "mutation " << i;
    }
}

TEST(Step, HaltOnly)
{
    const Program p = tiny({{Opcode::Halt, 0, 0, 0, 0}});
    const VmState s = step(p, VmState{});
    EXPECT_EQ(s.pc, 0u);
    EXPECT_TRUE(s.halted);
    EXPECT_EQ(code_of([&] { step(p, s); }), Errc::AlreadyHalted);
}

TEST(Step, AddAdvancesPc)
{
    const Program p = tiny({{Opcode::Add, 2, 0, 1, 0}, {Opcode::Halt, 0, 0, 0, 0}});
    const VmState s0 = make_state(0, false, Trap::None, {{0, 65536}, {1, 65536}});
    const VmState s1 = step(p, s0);
    EXPECT_EQ(s1.memory.load(2).raw, 131072);
    EXPECT_EQ(s1.pc, 1u);
    EXPECT_FALSE(s1.halted);
    EXPECT_EQ(s0.memory.load(2).raw, 0);  // input untouched
}

TEST(Step, MacOverflowTraps)
{
    const Program p = tiny({{Opcode::Mac, 2, 0, 1, 0}, {Opcode::Halt, 0, 0, 0, 0}});
    const VmState s = step(p, make_state(0, false, Trap::None, {{0, int64_t{1} << 62}, {1, int64_t{1} << 20}}));
    EXPECT_EQ(s.fault, Trap::Overflow);
    EXPECT_TRUE(s.halted);
}

TEST(Step, LocalityOfAccesses)
{
    Xoshiro256 rng = Xoshiro256::seeded(23);
    for (int trial = 0; trial < 10; ++trial)
    {
        const ModelSpec m = testkit::random_model(rng, 4);
        const Program p = compile(m);
        VmState s = initial_state(p, testkit::random_input(rng, m.input_shape));
        while (!s.halted)
        {
            const Instruction ins = p.code[s.pc];
            const auto before = s.memory.words();
            AccessLog log;
            step_in_place(p, s, &log);
            const std::vector<uint32_t> named{ins.dst, ins.a, ins.b};
            for (auto a : log.reads)
                ASSERT_NE(std::find(named.begin(), named.end(), a), named.end());
            for (auto a : log.writes)
                ASSERT_EQ(a, ins.dst);
            // Nothing outside the write set changed.
            const auto after = s.memory.words();
            std::vector<uint32_t> changed;
            std::map<uint32_t, int64_t> b(before.begin(), before.end()), c(after.begin(), after.end());
            for (auto& [addr, v] : b)
                if (!c.count(addr) || c[addr] != v)
                    changed.push_back(addr);
            for (auto& [addr, v] : c)
                if (!b.count(addr))
                    changed.push_back(addr);
            for (auto addr : changed)
                ASSERT_EQ(addr, ins.dst);
        }
    }
}

TEST(Run, IdentityProgram)
{
    ModelSpec m;
    m.input_shape = {3};
    const Program p = compile(m);
    const FixedTensor x(Shape{3}, {Fx{1}, Fx{-2}, Fx{3}});
    const RunResult r = run(p, x, 1);
    EXPECT_EQ(r.checkpoints.total_steps, 1u);
    EXPECT_EQ(r.output, x);
}

TEST(Run, DenseOneByTwoTakesFiveSteps)
{
    ModelSpec m;
    m.input_shape = {2};
    m.layers.push_back(LayerSpec::dense(1));
    m = generate_weights(m, 8);
    EXPECT_EQ(run(compile(m), FixedTensor(Shape{2}), 1).checkpoints.total_steps, 5u);
}

TEST(Run, CheckpointIntervalIndependence)
{
    Xoshiro256 rng = Xoshiro256::seeded(31);
    const ModelSpec m = dense(31, 31, 4);
    const Program p = compile(m);
    const FixedTensor x = testkit::random_input(rng, m.input_shape);
    const RunResult base = run(p, x, 1);
    ASSERT_EQ(base.checkpoints.roots.size(), base.checkpoints.total_steps + 1);
    for (uint64_t k : {7u, 64u, 4096u})
    {
        const RunResult r = run(p, x, k);
        EXPECT_EQ(r.output, base.output);
        EXPECT_EQ(r.checkpoints.total_steps, base.checkpoints.total_steps);
        ASSERT_TRUE(r.checkpoints.roots.count(0) && r.checkpoints.roots.count(r.checkpoints.total_steps));
        for (const auto& [i, h] : r.checkpoints.roots)
            EXPECT_EQ(h, base.checkpoints.roots.at(i)) << "k=" << k << " i=" << i;
    }
}

TEST(Run, TrapIsInferenceFault)
{
    const Program p = tiny({{Opcode::Mac, 2, 0, 1, 0}, {Opcode::Halt, 0, 0, 0, 0}});
    const FixedTensor x(Shape{2}, {Fx{int64_t{1} << 62}, Fx{int64_t{1} << 20}});
    EXPECT_EQ(code_of([&] { run(p, x, 1); }), Errc::InferenceFault);
    // execute() keeps the trapped state as a final, committable state.
    const Execution e = execute(p, x);
    EXPECT_EQ(e.final_state.fault, Trap::Overflow);
    EXPECT_EQ(e.checkpoints.total_steps, 1u);
}

TEST(Run, StepBudget)
{
    const auto p = testkit::add_chain(100);
    RunOptions o;
    o.step_budget = 50;
    EXPECT_EQ(code_of([&] { execute(*p, testkit::chain_input(), o); }), Errc::StepBudgetExceeded);
}

TEST(Checkpoints, JsonRoundTrip)
{
    const auto p = testkit::add_chain(40);
    const RunResult r = run(*p, testkit::chain_input(), 8);
    EXPECT_EQ(checkpoints_from_json(to_json(r.checkpoints)), r.checkpoints);
}

TEST(StateAt, EndpointsAndRandomIndices)
{
    Xoshiro256 rng = Xoshiro256::seeded(41);
    const ModelSpec m = dense(31, 31, 6);
    const Program p = compile(m);
    const FixedTensor x = testkit::random_input(rng, m.input_shape);
    const RunResult r = run(p, x, 16);
    const uint64_t T = r.checkpoints.total_steps;
    ASSERT_GE(T, 1000u);

    EXPECT_EQ(state_at(p, r.checkpoints, x, 0), initial_state(p, x));
    const VmState last = state_at(p, r.checkpoints, x, T);
    EXPECT_TRUE(last.halted);
    EXPECT_EQ(read_output(p, last), r.output);
    EXPECT_EQ(code_of([&] { state_at(p, r.checkpoints, x, T + 1); }), Errc::IndexOutOfRange);

    // Brute-force oracle: every root along a from-scratch replay.
    std::vector<Hash256> all{root(initial_state(p, x))};
    VmState s = initial_state(p, x);
    while (!s.halted)
    {
        step_in_place(p, s);
        all.push_back(root(s));
    }
    const TraceReplayer replayer(std::make_shared<const Program>(p), x);
    for (int i = 0; i < 60; ++i)
    {
        const uint64_t idx = rng.below(T + 1);
        const Hash256 a = root(state_at(p, r.checkpoints, x, idx));
        EXPECT_EQ(a, all[idx]);
        EXPECT_EQ(root(state_at(p, r.checkpoints, x, idx)), a);  // replay determinism
        EXPECT_EQ(replayer.root_at(idx), all[idx]);
    }
    EXPECT_EQ(replayer.total_steps(), T);
    EXPECT_EQ(replayer.final_root(), all.back());
}

TEST(StateAt, TamperedCheckpointIsInvariantBreach)
{
    const auto p = testkit::add_chain(20);
    RunResult r = run(*p, testkit::chain_input(), 4);
    r.checkpoints.roots[8].bytes[0] ^= 1;
    EXPECT_EQ(code_of([&] { state_at(*p, r.checkpoints, testkit::chain_input(), 8); }), Errc::InvariantBreach);
}

TEST(Advance, HaltedIsAbsorbing)
{
    const auto p = testkit::add_chain(3);
    const VmState end = execute(*p, testkit::chain_input()).final_state;
    EXPECT_EQ(advance(*p, end), end);
}

TEST(Corruption, ShiftsOneWordThenContinues)
{
    const auto p = std::shared_ptr<const Program>(testkit::add_chain(10));
    const TraceReplayer honest(p, testkit::chain_input());
    const TraceReplayer bad(p, testkit::chain_input(), Corruption{4, 1});
    for (uint64_t i = 0; i < 4; ++i)
        EXPECT_EQ(honest.root_at(i), bad.root_at(i));
    for (uint64_t i = 4; i <= 10; ++i)
        EXPECT_NE(honest.root_at(i), bad.root_at(i));
    EXPECT_EQ(bad.total_steps(), honest.total_steps());
}
