// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#include <oppai/error.hpp>
#include <oppai/fpvm.hpp>

#include <algorithm>

namespace oppai
{
Hash256 root(const VmState& s)
{
    Bytes buf;
    buf.reserve(8 + 2 + 32);
    put_le64(buf, s.pc);
    buf.push_back(s.halted ? 1 : 0);
    buf.push_back(static_cast<uint8_t>(s.fault));
    const auto mem = s.memory.root();
    buf.insert(buf.end(), mem.bytes.begin(), mem.bytes.end());
    return sha256(buf);
}

nlohmann::json to_json(const VmState& s)
{
    nlohmann::json words = nlohmann::json::array();
    for (const auto& [addr, raw] : s.memory.words())
        words.push_back({addr, raw});
    return {{"pc", s.pc}, {"halted", s.halted}, {"fault", static_cast<int>(s.fault)}, {"memory", words}};
}

VmState state_from_json(const nlohmann::json& j)
{
    try
    {
        VmState s;
        s.pc = j.at("pc").get<uint64_t>();
        s.halted = j.at("halted").get<bool>();
        const auto fault = j.at("fault").get<int>();
        if (fault < 0 || fault > static_cast<int>(Trap::PcOutOfRange))
            throw Error(Errc::ParseError, "unknown fault code");
        s.fault = static_cast<Trap>(fault);
        for (const auto& w : j.at("memory"))
        {
            const auto addr = w.at(0).get<uint64_t>();
            if (addr >= kAddressSpace)
                throw Error(Errc::ParseError, "address outside the 2^24-word space");
            s.memory.store(static_cast<uint32_t>(addr), Fx{w.at(1).get<int64_t>()});
        }
        return s;
    }
    catch (const nlohmann::json::exception& e)
    {
        throw Error(Errc::ParseError, std::string("vm state: ") + e.what());
    }
}

VmState initial_state(const Program& p, const FixedTensor& input)
{
    if (input.shape() != p.input_shape)
        throw Error(Errc::ShapeMismatch, "input shape differs from program input shape");
    VmState s;
    for (size_t i = 0; i < input.size(); ++i)
        s.memory.store(p.input.base + static_cast<uint32_t>(i), input[i]);
    for (size_t i = 0; i < p.weight_image.size(); ++i)
        s.memory.store(p.weights.base + static_cast<uint32_t>(i), p.weight_image[i]);
    s.memory.refresh();
    return s;
}

FixedTensor read_output(const Program& p, const VmState& s)
{
    std::vector<Fx> data(p.output.size);
    for (uint32_t i = 0; i < p.output.size; ++i)
        data[i] = s.memory.load(p.output.base + i);
    return FixedTensor(p.output_shape, std::move(data));
}

namespace
{
void trap(VmState& s, Trap t)
{
    s.fault = t;
    s.halted = true;
}

void apply_corruption(const Program& p, VmState& s, const Instruction& ins, int64_t delta)
{
    const uint32_t target = ins.op == Opcode::Halt ? p.output.base : ins.dst;
    s.memory.store(target, Fx{static_cast<int64_t>(static_cast<uint64_t>(s.memory.load(target).raw) + delta)});
}
}  // namespace

void step_in_place(const Program& p, VmState& s, AccessLog* log)
{
    if (s.halted)
        throw Error(Errc::AlreadyHalted, "step on a halted state");
    if (s.pc >= p.code.size())
    {
        trap(s, Trap::PcOutOfRange);
        return;
    }
    const Instruction& ins = p.code[s.pc];
    auto rd = [&](uint32_t addr) {
        if (log)
            log->reads.push_back(addr);
        return s.memory.load(addr);
    };
    auto wr = [&](uint32_t addr, Fx v) {
        if (log)
            log->writes.push_back(addr);
        s.memory.store(addr, v);
    };
    std::optional<Fx> result;
    switch (ins.op)
    {
    case Opcode::LoadI:
        wr(ins.dst, Fx{ins.imm});
        break;
    case Opcode::Mac: {
        const Fx acc = rd(ins.dst);
        const auto prod = fx_mul(rd(ins.a), rd(ins.b));
        result = prod ? fx_add(acc, *prod) : std::nullopt;
        if (!result)
            return trap(s, Trap::Overflow);
        wr(ins.dst, *result);
        break;
    }
    case Opcode::Add:
        result = fx_add(rd(ins.a), rd(ins.b));
        if (!result)
            return trap(s, Trap::Overflow);
        wr(ins.dst, *result);
        break;
    case Opcode::Max:
        wr(ins.dst, fx_max(rd(ins.a), rd(ins.b)));
        break;
    case Opcode::Relu:
        wr(ins.dst, fx_relu(rd(ins.a)));
        break;
    case Opcode::Move:
        wr(ins.dst, rd(ins.a));
        break;
    case Opcode::Halt:
        s.halted = true;
        return;
    }
    ++s.pc;
}

VmState step(const Program& p, const VmState& s)
{
    VmState next = s;
    step_in_place(p, next);
    return next;
}

VmState advance(const Program& p, const VmState& s)
{
    return s.halted ? s : step(p, s);
}

nlohmann::json to_json(const TraceCheckpoints& c)
{
    nlohmann::json roots = nlohmann::json::object();
    for (const auto& [i, r] : c.roots)
        roots[std::to_string(i)] = to_hex(r);
    return {{"interval", c.interval}, {"total_steps", c.total_steps}, {"roots", roots}};
}

TraceCheckpoints checkpoints_from_json(const nlohmann::json& j)
{
    try
    {
        TraceCheckpoints c;
        c.interval = j.at("interval").get<uint64_t>();
        c.total_steps = j.at("total_steps").get<uint64_t>();
        for (const auto& [k, v] : j.at("roots").items())
            c.roots[std::stoull(k)] = hash_from_hex(v.get<std::string>());
        return c;
    }
    catch (const std::exception& e)
    {
        throw Error(Errc::ParseError, std::string("checkpoints: ") + e.what());
    }
}

namespace
{
/// Drives one execution; `on_step(i, state)` sees the state after i steps.
template <typename OnStep>
VmState drive(const Program& p, const FixedTensor& input, const RunOptions& opt, OnStep&& on_step)
{
    VmState s = initial_state(p, input);
    uint64_t i = 0;
    on_step(i, s);
    while (!s.halted)
    {
        if (i >= opt.step_budget)
            throw Error(Errc::StepBudgetExceeded, "step budget of " + std::to_string(opt.step_budget) + " exhausted");
        const Instruction* ins = s.pc < p.code.size() ? &p.code[s.pc] : nullptr;
        step_in_place(p, s);
        ++i;
        if (opt.corruption && opt.corruption->step == i && ins && s.fault == Trap::None)
            apply_corruption(p, s, *ins, opt.corruption->delta);
        on_step(i, s);
    }
    return s;
}
}  // namespace

Execution execute(const Program& p, const FixedTensor& input, const RunOptions& opt)
{
    if (opt.checkpoint_interval == 0)
        throw Error(Errc::IndexOutOfRange, "checkpoint interval must be positive");
    validate(p);
    Execution ex;
    ex.checkpoints.interval = opt.checkpoint_interval;
    ex.final_state = drive(p, input, opt, [&](uint64_t i, VmState& s) {
        if (i % opt.checkpoint_interval == 0 || s.halted)
        {
            s.memory.refresh();
            ex.checkpoints.roots[i] = root(s);
        }
        if (s.halted)
            ex.checkpoints.total_steps = i;
    });
    return ex;
}

RunResult run(const Program& p, const FixedTensor& input, uint64_t k)
{
    RunOptions opt;
    opt.checkpoint_interval = k;
    auto ex = execute(p, input, opt);
    if (ex.final_state.fault != Trap::None)
        throw Error(Errc::InferenceFault, "execution trapped at pc " + std::to_string(ex.final_state.pc));
    return RunResult{read_output(p, ex.final_state), std::move(ex.checkpoints)};
}

VmState state_at(const Program& p, const TraceCheckpoints& ckpts, const FixedTensor& input, uint64_t i)
{
    if (i > ckpts.total_steps)
        throw Error(Errc::IndexOutOfRange, "step " + std::to_string(i) + " beyond trace end");
    validate(p);
    VmState s = initial_state(p, input);
    for (uint64_t n = 0; n < i; ++n)
        step_in_place(p, s);
    const auto it = ckpts.roots.upper_bound(i);
    if (it != ckpts.roots.begin())
    {
        const auto& [at, expected] = *std::prev(it);
        if (at == i && root(s) != expected)
            throw Error(Errc::InvariantBreach, "replayed root disagrees with committed checkpoint");
    }
    return s;
}

TraceReplayer::TraceReplayer(std::shared_ptr<const Program> program, FixedTensor input,
    std::optional<Corruption> corruption, uint64_t step_budget)
  : program_(std::move(program)), input_(std::move(input)), corruption_(corruption)
{
    validate(*program_);
    RunOptions opt;
    opt.step_budget = step_budget;
    opt.corruption = corruption_;
    // First pass sizes the trace, second keeps ~64 evenly spaced snapshots.
    total_steps_ = 0;
    drive(*program_, input_, opt, [&](uint64_t i, VmState&) { total_steps_ = i; });
    snapshot_interval_ = std::max<uint64_t>(256, (total_steps_ + 63) / 64);
    final_ = drive(*program_, input_, opt, [&](uint64_t i, VmState& s) {
        if (i % snapshot_interval_ == 0)
        {
            s.memory.refresh();
            snapshots_.push_back(s);
        }
    });
    final_.memory.refresh();
    final_root_ = root(final_);
}

VmState TraceReplayer::state_at(uint64_t i) const
{
    if (i >= total_steps_)
        return final_;
    const uint64_t slot = i / snapshot_interval_;
    VmState s = snapshots_.at(slot);
    for (uint64_t n = slot * snapshot_interval_; n < i; ++n)
    {
        const Instruction* ins = s.pc < program_->code.size() ? &program_->code[s.pc] : nullptr;
        step_in_place(*program_, s);
        if (corruption_ && corruption_->step == n + 1 && ins && s.fault == Trap::None)
            apply_corruption(*program_, s, *ins, corruption_->delta);
    }
    return s;
}

Hash256 TraceReplayer::root_at(uint64_t i) const
{
    if (i >= total_steps_)
        return final_root_;
    return root(state_at(i));
}
}  // namespace oppai
