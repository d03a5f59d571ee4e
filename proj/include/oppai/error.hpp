// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace oppai
{
enum class Errc
{
    ShapeMismatch,
    InferenceFault,
    UnsupportedLayer,
    AlreadyHalted,
    StepBudgetExceeded,
    IndexOutOfRange,
    InvalidPartition,
    ShapeBreak,
    ZeroTotal,
    NoDisagreement,
    NotYourTurn,
    SessionClosed,
    PrematureArbitration,
    InsufficientFunds,
    InvalidTransition,
    UnknownTask,
    ScenarioInvalid,
    FullyPrivate,
    CapExceeded,
    NotLinear,
    ParseError,
    MonotonicityViolation,
    Degenerate,
    UnknownPrefix,
    NoFeasiblePrefix,
    ChecksumMismatch,
    InvariantBreach,
};

std::string_view to_string(Errc code) noexcept;

/// The single exception type of the library; `code()` is what callers branch on.
class Error : public std::runtime_error
{
public:
    Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};
}  // namespace oppai
