// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <oppai/fpvm.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace oppai
{
enum class Party
{
    Submitter,
    Challenger,
};

std::string_view to_string(Party p) noexcept;
inline Party other(Party p) noexcept
{
    return p == Party::Submitter ? Party::Challenger : Party::Submitter;
}

/// SHA-256 of a tensor's canonical JSON. Used for input/output commitments.
Hash256 tensor_commitment(const FixedTensor& t);

struct SubmitterClaim
{
    Hash256 input_commitment;
    Hash256 output_commitment;
    Hash256 final_root;
    uint64_t total_steps = 0;

    friend bool operator==(const SubmitterClaim&, const SubmitterClaim&) = default;
};

/// `boundary_root` is the challenger's root at min(T_s, T_c); it equals
/// `final_root` unless the challenger claims the longer trace.
struct ChallengerClaim
{
    Hash256 output_commitment;
    Hash256 final_root;
    Hash256 boundary_root;
    uint64_t total_steps = 0;

    friend bool operator==(const ChallengerClaim&, const ChallengerClaim&) = default;
};

enum class Stage
{
    BoundaryRoot,  // submitter owes its root at the boundary
    Bisect,
    Arbitrate,     // submitter owes the state at lo
    HaltCheck,     // shorter party owes the agreed boundary state
    OutputCheck,   // submitter owes the final state
    Closed,
};

enum class SessionStatus
{
    AwaitingSubmitter,
    AwaitingChallenger,
    Arbitrated,
    TimedOut,
};

std::string_view to_string(Stage s) noexcept;
std::string_view to_string(SessionStatus s) noexcept;

inline constexpr uint64_t kDefaultMoveDeadline = 10;

/// Bisection runs over a window [lo, window_hi] whose width is a power of
/// two; the disputed index is hi = min(window_hi, boundary). A midpoint at or
/// past the boundary is a forced disagreement that the contract applies on
/// its own, which keeps the round count at exactly ceil(log2(boundary)).
struct DisputeSession
{
    uint64_t segment_id = 0;
    SubmitterClaim submitter;
    ChallengerClaim challenger;
    Hash256 initial_root;

    uint64_t boundary = 0;
    uint64_t lo = 0;
    uint64_t hi = 0;
    uint64_t window_hi = 0;
    Hash256 root_lo;           // agreed
    Hash256 submitter_root_hi; // contested
    std::optional<Hash256> pending_mid_root;

    uint64_t round = 0;
    uint64_t arbitration_steps = 0;
    Stage stage = Stage::Bisect;
    SessionStatus status = SessionStatus::AwaitingSubmitter;
    uint64_t deadline_blocks = kDefaultMoveDeadline;
    uint64_t move_deadline = 0;
    std::optional<Party> winner;
    std::string reason;

    bool closed() const noexcept { return stage == Stage::Closed; }
    Party awaiting() const noexcept
    {
        return status == SessionStatus::AwaitingChallenger ? Party::Challenger : Party::Submitter;
    }
    uint64_t mid() const noexcept { return (lo + window_hi) / 2; }

    friend bool operator==(const DisputeSession&, const DisputeSession&) = default;
};

nlohmann::json to_json(const DisputeSession& s);

/// Throws NoDisagreement, or InvalidTransition for a zero-length claim.
DisputeSession open_dispute(uint64_t segment_id, const SubmitterClaim& submitter, const ChallengerClaim& challenger,
    const Hash256& initial_root, uint64_t block, uint64_t deadline_blocks = kDefaultMoveDeadline);

// Moves. Each throws SessionClosed on a closed session or a move past the
// deadline (the timeout is applied first), NotYourTurn for the wrong party or
// stage.
void post_boundary_root(DisputeSession& s, Party sender, const Hash256& root, uint64_t block);
void post_mid_root(DisputeSession& s, Party sender, const Hash256& root, uint64_t block);
void respond(DisputeSession& s, Party sender, bool agrees, uint64_t block);

/// post_mid_root followed by respond in the same block.
void bisect_round(DisputeSession& s, const Hash256& submitter_mid_root, bool challenger_agrees, uint64_t block);

/// Single-step arbitration. Throws PrematureArbitration while the window is
/// wider than one step.
void arbitrate(DisputeSession& s, Party sender, const VmState& witness, const Program& program, uint64_t block);

void halt_check(DisputeSession& s, Party sender, const VmState& witness, uint64_t block);
void output_check(DisputeSession& s, Party sender, const VmState& witness, const Program& program, uint64_t block);

/// Closes the session against the awaited party once current_block is past
/// the move deadline. Returns whether it fired.
bool timeout(DisputeSession& s, uint64_t current_block);

enum class ChallengerStyle
{
    Honest,     // agrees iff the mid root matches its own trace
    Frivolous,  // disagrees with everything
};

/// Plays a session to the end off-chain, one block per move. Returns the
/// number of blocks used.
uint64_t play_out(DisputeSession& s, const TraceReplayer& submitter, const TraceReplayer& challenger,
    ChallengerStyle style, const Program& program, uint64_t start_block = 0);

/// Claims derived from a party's trace. The challenger's boundary root is
/// taken at min(its own length, submitter_steps).
SubmitterClaim submitter_claim(const TraceReplayer& trace);
ChallengerClaim challenger_claim(const TraceReplayer& trace, uint64_t submitter_steps);
}  // namespace oppai
