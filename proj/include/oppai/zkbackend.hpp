// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <oppai/partition.hpp>

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_set>

namespace oppai
{
struct ZkStatement
{
    Hash256 weight_commitment;
    FixedTensor public_input;
    FixedTensor claimed_output;
    Hash256 segment_program_hash;

    friend bool operator==(const ZkStatement&, const ZkStatement&) = default;
};

nlohmann::json to_json(const ZkStatement& s);
ZkStatement statement_from_json(const nlohmann::json& j);
/// SHA-256 over the canonical statement JSON.
Hash256 statement_digest(const ZkStatement& s);

/// The witness envelope travels prover -> verifier only.
struct ZkProof
{
    std::string backend_id;
    Hash256 statement_digest;
    Bytes witness_envelope;

    friend bool operator==(const ZkProof&, const ZkProof&) = default;
};

enum class Verdict
{
    Accept,
    WeightMismatch,
    WrongOutput,
    StatementMismatch,
    Malformed,
    UnknownBackend,
    UnknownProgram,
};

std::string_view to_string(Verdict v) noexcept;

/// A proof system. prove() runs on the prover's machine and sees weights;
/// verify() only sees what the statement and proof carry plus public data
/// registered ahead of time.
class ZkBackend
{
public:
    virtual ~ZkBackend() = default;
    virtual std::string_view id() const noexcept = 0;
    /// Makes a segment's public structure known to the verifier side.
    virtual void register_segment(const Segment& segment) = 0;
    virtual std::pair<ZkStatement, ZkProof> prove(const Segment& segment, const FixedTensor& input) const = 0;
    virtual Verdict verify(const ZkStatement& statement, const ZkProof& proof) const = 0;
};

/// Commit-and-reexecute stand-in for a SNARK: the witness is the canonical
/// weights JSON, checked against the commitment and replayed on the FPVM.
/// Binding and public I/O are modeled; zero knowledge is not.
class ReferenceBackend final : public ZkBackend
{
public:
    static constexpr std::string_view kId = "reference-reexec/1";

    std::string_view id() const noexcept override { return kId; }
    void register_segment(const Segment& segment) override;
    std::pair<ZkStatement, ZkProof> prove(const Segment& segment, const FixedTensor& input) const override;
    Verdict verify(const ZkStatement& statement, const ZkProof& proof) const override;

private:
    struct Entry
    {
        ModelSpec skeleton;  // weights stripped
        Program program;     // weight image stripped
    };
    std::map<Hash256, Entry> programs_;
};

/// On-chain verifier contract: dispatches on backend_id.
class ZkVerifier
{
public:
    void add_backend(std::shared_ptr<ZkBackend> backend);
    std::shared_ptr<ZkBackend> backend(std::string_view id) const;
    /// Registers the segment's public structure with every backend.
    void register_segment(const Segment& segment);
    Verdict verify(const ZkStatement& statement, const ZkProof& proof) const;

private:
    std::map<std::string, std::shared_ptr<ZkBackend>, std::less<>> backends_;
};

/// ModelSpec with every kernel and bias removed.
ModelSpec strip_weights(ModelSpec model);

/// 8-byte windows of a segment's serialized weights: its LE64 raw stream and
/// its canonical JSON. JSON windows without a digit carry no weight
/// information and are left out.
std::unordered_set<std::string> weight_windows(const ModelSpec& segment_model);

/// Drops windows that also occur in text the chain is meant to publish (the
/// statement's public input and claimed output). Decimal tensors collide on
/// short digit runs by chance, and such a collision reveals nothing new.
void exclude_public(std::unordered_set<std::string>& windows, std::string_view public_text);

/// Offsets in `haystack` where any window occurs.
std::vector<size_t> scan_for_windows(std::string_view haystack, const std::unordered_set<std::string>& windows);
}  // namespace oppai
