// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#include <oppai/error.hpp>
#include <oppai/zkbackend.hpp>

namespace oppai
{
nlohmann::json to_json(const ZkStatement& s)
{
    return {
        {"weight_commitment", to_hex(s.weight_commitment)},
        {"public_input", to_json(s.public_input)},
        {"claimed_output", to_json(s.claimed_output)},
        {"segment_program_hash", to_hex(s.segment_program_hash)},
    };
}

ZkStatement statement_from_json(const nlohmann::json& j)
{
    try
    {
        return ZkStatement{
            hash_from_hex(j.at("weight_commitment").get<std::string>()),
            tensor_from_json(j.at("public_input")),
            tensor_from_json(j.at("claimed_output")),
            hash_from_hex(j.at("segment_program_hash").get<std::string>()),
        };
    }
    catch (const nlohmann::json::exception& e)
    {
        throw Error(Errc::ParseError, std::string("statement: ") + e.what());
    }
}

Hash256 statement_digest(const ZkStatement& s)
{
    return sha256(canonical_dump(to_json(s)));
}

std::string_view to_string(Verdict v) noexcept
{
    switch (v)
    {
    case Verdict::Accept: return "Accept";
    case Verdict::WeightMismatch: return "WeightMismatch";
    case Verdict::WrongOutput: return "WrongOutput";
    case Verdict::StatementMismatch: return "StatementMismatch";
    case Verdict::Malformed: return "Malformed";
    case Verdict::UnknownBackend: return "UnknownBackend";
    case Verdict::UnknownProgram: return "UnknownProgram";
    }
    return "Unknown";
}

ModelSpec strip_weights(ModelSpec model)
{
    for (auto& l : model.layers)
    {
        l.kernel.reset();
        l.bias.reset();
    }
    return model;
}

void ReferenceBackend::register_segment(const Segment& segment)
{
    Program pub = *segment.program;
    pub.weight_image.clear();
    const Hash256 key = program_hash(pub);
    programs_.insert_or_assign(key, Entry{strip_weights(segment.model), std::move(pub)});
}

std::pair<ZkStatement, ZkProof> ReferenceBackend::prove(const Segment& segment, const FixedTensor& input) const
{
    const auto result = run(*segment.program, input, 1u << 20);
    ZkStatement st{segment.weight_commitment, input, result.output, program_hash(*segment.program)};
    const auto envelope = canonical_dump(weights_to_json(segment.model));
    ZkProof proof{std::string(kId), statement_digest(st), Bytes(envelope.begin(), envelope.end())};
    return {std::move(st), std::move(proof)};
}

Verdict ReferenceBackend::verify(const ZkStatement& st, const ZkProof& proof) const
{
    if (proof.backend_id != kId)
        return Verdict::UnknownBackend;
    if (proof.statement_digest != statement_digest(st))
        return Verdict::StatementMismatch;
    if (sha256(std::span<const uint8_t>(proof.witness_envelope)) != st.weight_commitment)
        return Verdict::WeightMismatch;
    const auto it = programs_.find(st.segment_program_hash);
    if (it == programs_.end())
        return Verdict::UnknownProgram;
    const Entry& entry = it->second;

    Program program = entry.program;
    try
    {
        const auto witness = nlohmann::json::parse(proof.witness_envelope.begin(), proof.witness_envelope.end());
        program.weight_image = weight_image(apply_weights_json(entry.skeleton, witness));
        validate(program);
        if (st.public_input.shape() != program.input_shape)
            return Verdict::Malformed;
    }
    catch (const nlohmann::json::exception&)
    {
        return Verdict::Malformed;
    }
    catch (const Error&)
    {
        return Verdict::Malformed;
    }

    try
    {
        if (run(program, st.public_input, 1u << 20).output != st.claimed_output)
            return Verdict::WrongOutput;
    }
    catch (const Error& e)
    {
        if (e.code() != Errc::InferenceFault)
            throw;
        return Verdict::WrongOutput;
    }
    return Verdict::Accept;
}

void ZkVerifier::add_backend(std::shared_ptr<ZkBackend> backend)
{
    backends_.insert_or_assign(std::string(backend->id()), std::move(backend));
}

std::shared_ptr<ZkBackend> ZkVerifier::backend(std::string_view id) const
{
    const auto it = backends_.find(id);
    return it == backends_.end() ? nullptr : it->second;
}

void ZkVerifier::register_segment(const Segment& segment)
{
    for (auto& [_, b] : backends_)
        b->register_segment(segment);
}

Verdict ZkVerifier::verify(const ZkStatement& statement, const ZkProof& proof) const
{
    const auto b = backend(proof.backend_id);
    return b ? b->verify(statement, proof) : Verdict::UnknownBackend;
}

std::unordered_set<std::string> weight_windows(const ModelSpec& segment_model)
{
    std::unordered_set<std::string> out;
    Bytes binary;
    for (const Fx w : weight_image(segment_model))
        put_le64(binary, static_cast<uint64_t>(w.raw));
    for (size_t i = 0; i + 8 <= binary.size(); ++i)
        out.emplace(reinterpret_cast<const char*>(binary.data() + i), 8);

    const auto json = canonical_dump(weights_to_json(segment_model));
    for (size_t i = 0; i + 8 <= json.size(); ++i)
    {
        const std::string_view w(json.data() + i, 8);
        if (w.find_first_of("0123456789") != std::string_view::npos)
            out.emplace(w);
    }
    return out;
}

void exclude_public(std::unordered_set<std::string>& windows, std::string_view text)
{
    for (size_t i = 0; i + 8 <= text.size() && !windows.empty(); ++i)
        windows.erase(std::string(text.substr(i, 8)));
}

std::vector<size_t> scan_for_windows(std::string_view haystack, const std::unordered_set<std::string>& windows)
{
    std::vector<size_t> hits;
    std::string probe(8, '\0');
    for (size_t i = 0; i + 8 <= haystack.size(); ++i)
    {
        probe.assign(haystack.data() + i, 8);
        if (windows.count(probe))
            hits.push_back(i);
    }
    return hits;
}
}  // namespace oppai
