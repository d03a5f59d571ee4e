// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#include <oppai/dispute.hpp>
#include <oppai/error.hpp>

namespace oppai
{
std::string_view to_string(Party p) noexcept
{
    return p == Party::Submitter ? "submitter" : "challenger";
}

std::string_view to_string(Stage s) noexcept
{
    switch (s)
    {
    case Stage::BoundaryRoot: return "BoundaryRoot";
    case Stage::Bisect: return "Bisect";
    case Stage::Arbitrate: return "Arbitrate";
    case Stage::HaltCheck: return "HaltCheck";
    case Stage::OutputCheck: return "OutputCheck";
    case Stage::Closed: return "Closed";
    }
    return "Unknown";
}

std::string_view to_string(SessionStatus s) noexcept
{
    switch (s)
    {
    case SessionStatus::AwaitingSubmitter: return "AwaitingSubmitter";
    case SessionStatus::AwaitingChallenger: return "AwaitingChallenger";
    case SessionStatus::Arbitrated: return "Arbitrated";
    case SessionStatus::TimedOut: return "TimedOut";
    }
    return "Unknown";
}

Hash256 tensor_commitment(const FixedTensor& t)
{
    return sha256(canonical_dump(to_json(t)));
}

nlohmann::json to_json(const DisputeSession& s)
{
    nlohmann::json j{
        {"segment_id", s.segment_id},
        {"boundary", s.boundary},
        {"lo", s.lo},
        {"hi", s.hi},
        {"window_hi", s.window_hi},
        {"root_lo", to_hex(s.root_lo)},
        {"submitter_root_hi", to_hex(s.submitter_root_hi)},
        {"round", s.round},
        {"stage", to_string(s.stage)},
        {"status", to_string(s.status)},
        {"move_deadline", s.move_deadline},
        {"submitter_steps", s.submitter.total_steps},
        {"challenger_steps", s.challenger.total_steps},
    };
    if (s.winner)
    {
        j["winner"] = to_string(*s.winner);
        j["reason"] = s.reason;
    }
    return j;
}

namespace
{
uint64_t ceil_pow2(uint64_t n)
{
    uint64_t w = 1;
    while (w < n)
        w <<= 1;
    return w;
}

void await(DisputeSession& s, Party p, uint64_t block)
{
    s.status = p == Party::Submitter ? SessionStatus::AwaitingSubmitter : SessionStatus::AwaitingChallenger;
    s.move_deadline = block + s.deadline_blocks;
}

void close(DisputeSession& s, Party winner, std::string reason, SessionStatus status = SessionStatus::Arbitrated)
{
    s.stage = Stage::Closed;
    s.status = status;
    s.winner = winner;
    s.reason = std::move(reason);
    s.pending_mid_root.reset();
}

// Applies the contract's own disagreements for midpoints past the boundary
// and moves to arbitration once the window is a single step.
void settle(DisputeSession& s, uint64_t block)
{
    while (s.window_hi - s.lo >= 2 && s.mid() >= s.boundary)
    {
        s.window_hi = s.mid();
        ++s.round;
    }
    s.hi = std::min(s.window_hi, s.boundary);
    s.stage = s.window_hi - s.lo == 1 ? Stage::Arbitrate : Stage::Bisect;
    await(s, Party::Submitter, block);
}

// Both boundary roots are on the table: pick the stage that decides.
void begin(DisputeSession& s, const Hash256& submitter_boundary_root, uint64_t block)
{
    const uint64_t ts = s.submitter.total_steps, tc = s.challenger.total_steps;
    s.submitter_root_hi = submitter_boundary_root;
    if (submitter_boundary_root == s.challenger.boundary_root)
    {
        if (ts == tc)
        {
            s.stage = Stage::OutputCheck;
            await(s, Party::Submitter, block);
        }
        else
        {
            s.stage = Stage::HaltCheck;
            await(s, ts < tc ? Party::Submitter : Party::Challenger, block);
        }
        return;
    }
    s.lo = 0;
    s.root_lo = s.initial_root;
    s.window_hi = ceil_pow2(s.boundary);
    settle(s, block);
}

void check_turn(DisputeSession& s, Party sender, uint64_t block, std::initializer_list<Stage> stages)
{
    if (s.closed())
        throw Error(Errc::SessionClosed, "session " + std::to_string(s.segment_id) + " is closed");
    if (timeout(s, block))
        throw Error(Errc::SessionClosed, "move at block " + std::to_string(block) + " is past the deadline");
    if (sender != s.awaiting())
        throw Error(Errc::NotYourTurn, std::string(to_string(s.awaiting())) + " is to move");
    for (const Stage st : stages)
    {
        if (st == s.stage)
            return;
    }
    throw Error(Errc::NotYourTurn, "move not allowed in stage " + std::string(to_string(s.stage)));
}
}  // namespace

DisputeSession open_dispute(uint64_t segment_id, const SubmitterClaim& submitter, const ChallengerClaim& challenger,
    const Hash256& initial_root, uint64_t block, uint64_t deadline_blocks)
{
    if (submitter.total_steps == 0 || challenger.total_steps == 0)
        throw Error(Errc::InvalidTransition, "a trace has at least one step");
    if (submitter.total_steps == challenger.total_steps && submitter.final_root == challenger.final_root
        && submitter.output_commitment == challenger.output_commitment)
        throw Error(Errc::NoDisagreement, "claims agree");
    DisputeSession s;
    s.segment_id = segment_id;
    s.submitter = submitter;
    s.challenger = challenger;
    if (challenger.total_steps <= submitter.total_steps)
        s.challenger.boundary_root = challenger.final_root;
    s.initial_root = initial_root;
    s.deadline_blocks = deadline_blocks;
    s.boundary = std::min(submitter.total_steps, challenger.total_steps);
    s.hi = s.boundary;
    s.window_hi = s.boundary;
    s.root_lo = initial_root;
    if (submitter.total_steps > challenger.total_steps)
    {
        s.stage = Stage::BoundaryRoot;
        await(s, Party::Submitter, block);
    }
    else
        begin(s, submitter.final_root, block);
    return s;
}

void post_boundary_root(DisputeSession& s, Party sender, const Hash256& root, uint64_t block)
{
    check_turn(s, sender, block, {Stage::BoundaryRoot});
    begin(s, root, block);
}

void post_mid_root(DisputeSession& s, Party sender, const Hash256& root, uint64_t block)
{
    check_turn(s, sender, block, {Stage::Bisect});
    s.pending_mid_root = root;
    await(s, Party::Challenger, block);
}

void respond(DisputeSession& s, Party sender, bool agrees, uint64_t block)
{
    check_turn(s, sender, block, {Stage::Bisect});
    if (agrees)
    {
        s.lo = s.mid();
        s.root_lo = *s.pending_mid_root;
    }
    else
    {
        s.window_hi = s.mid();
        s.submitter_root_hi = *s.pending_mid_root;
    }
    s.pending_mid_root.reset();
    ++s.round;
    settle(s, block);
}

void bisect_round(DisputeSession& s, const Hash256& submitter_mid_root, bool challenger_agrees, uint64_t block)
{
    post_mid_root(s, Party::Submitter, submitter_mid_root, block);
    respond(s, Party::Challenger, challenger_agrees, block);
}

void arbitrate(DisputeSession& s, Party sender, const VmState& witness, const Program& program, uint64_t block)
{
    if (!s.closed() && s.stage == Stage::Bisect)
        throw Error(Errc::PrematureArbitration,
            "window (" + std::to_string(s.lo) + ", " + std::to_string(s.window_hi) + ") spans more than one step");
    check_turn(s, sender, block, {Stage::Arbitrate});
    if (root(witness) != s.root_lo)
        return close(s, other(sender), "witness root differs from the agreed root at " + std::to_string(s.lo));
    const VmState next = advance(program, witness);
    ++s.arbitration_steps;
    if (root(next) == s.submitter_root_hi)
        close(s, Party::Submitter, "step " + std::to_string(s.lo) + " reproduces the submitter root");
    else
        close(s, Party::Challenger, "step " + std::to_string(s.lo) + " contradicts the submitter root");
}

void halt_check(DisputeSession& s, Party sender, const VmState& witness, uint64_t block)
{
    check_turn(s, sender, block, {Stage::HaltCheck});
    if (root(witness) != s.submitter_root_hi)
        return close(s, other(sender), "witness root differs from the agreed boundary root");
    if (witness.halted)
        close(s, sender, "agreed state at step " + std::to_string(s.boundary) + " is halted");
    else
        close(s, other(sender), "agreed state at step " + std::to_string(s.boundary) + " is not halted");
}

void output_check(DisputeSession& s, Party sender, const VmState& witness, const Program& program, uint64_t block)
{
    check_turn(s, sender, block, {Stage::OutputCheck});
    if (root(witness) != s.submitter.final_root)
        return close(s, other(sender), "witness root differs from the agreed final root");
    if (tensor_commitment(read_output(program, witness)) == s.submitter.output_commitment)
        close(s, Party::Submitter, "final state yields the committed output");
    else
        close(s, Party::Challenger, "final state contradicts the committed output");
}

bool timeout(DisputeSession& s, uint64_t current_block)
{
    if (s.closed() || current_block <= s.move_deadline)
        return false;
    const Party silent = s.awaiting();
    close(s, other(silent), std::string(to_string(silent)) + " missed the deadline at block " + std::to_string(s.move_deadline),
        SessionStatus::TimedOut);
    return true;
}

SubmitterClaim submitter_claim(const TraceReplayer& t)
{
    return SubmitterClaim{tensor_commitment(t.input()), tensor_commitment(read_output(t.program(), t.final_state())),
        t.final_root(), t.total_steps()};
}

ChallengerClaim challenger_claim(const TraceReplayer& t, uint64_t submitter_steps)
{
    return ChallengerClaim{tensor_commitment(read_output(t.program(), t.final_state())), t.final_root(),
        t.root_at(std::min(t.total_steps(), submitter_steps)), t.total_steps()};
}

uint64_t play_out(DisputeSession& s, const TraceReplayer& sub, const TraceReplayer& chal, ChallengerStyle style,
    const Program& program, uint64_t block)
{
    const uint64_t start = block;
    while (!s.closed())
    {
        switch (s.stage)
        {
        case Stage::BoundaryRoot:
            post_boundary_root(s, Party::Submitter, sub.root_at(s.boundary), block);
            break;
        case Stage::Bisect:
            if (s.status == SessionStatus::AwaitingSubmitter)
                post_mid_root(s, Party::Submitter, sub.root_at(s.mid()), block);
            else
                respond(s, Party::Challenger,
                    style == ChallengerStyle::Honest && *s.pending_mid_root == chal.root_at(s.mid()), block);
            break;
        case Stage::Arbitrate:
            arbitrate(s, Party::Submitter, sub.state_at(s.lo), program, block);
            break;
        case Stage::HaltCheck: {
            const auto& who = s.awaiting() == Party::Submitter ? sub : chal;
            halt_check(s, s.awaiting(), who.state_at(s.boundary), block);
            break;
        }
        case Stage::OutputCheck:
            output_check(s, Party::Submitter, sub.state_at(s.submitter.total_steps), program, block);
            break;
        case Stage::Closed:
            break;
        }
        ++block;
    }
    return block - start;
}
}  // namespace oppai
