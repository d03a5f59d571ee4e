// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#include <oppai/error.hpp>
#include <oppai/prng.hpp>
#include <oppai/workflow.hpp>

#include <algorithm>
#include <chrono>
#include <set>

namespace oppai
{
std::string_view to_string(ProverBehavior b) noexcept
{
    switch (b)
    {
    case ProverBehavior::Honest: return "honest";
    case ProverBehavior::WrongOutput: return "wrong_output";
    case ProverBehavior::WrongWeights: return "wrong_weights";
    }
    return "unknown";
}

std::string_view to_string(ChallengerBehavior b) noexcept
{
    switch (b)
    {
    case ChallengerBehavior::HonestVigilant: return "honest_vigilant";
    case ChallengerBehavior::Absent: return "absent";
    case ChallengerBehavior::Frivolous: return "frivolous";
    }
    return "unknown";
}

namespace
{
[[noreturn]] void invalid(const std::string& what)
{
    throw Error(Errc::ScenarioInvalid, what);
}

bool has_all_weights(const ModelSpec& m)
{
    for (const auto& l : m.layers)
    {
        if (l.has_weights() && (!l.kernel || !l.bias))
            return false;
    }
    return true;
}

ModelSpec parse_model(const nlohmann::json& j, uint64_t weights_seed)
{
    ModelSpec m;
    if (j.contains("builtin"))
    {
        const auto name = j.at("builtin").get<std::string>();
        if (name == "figure1")
            m = figure1_skeleton();
        else if (name == "dense")
            m = ModelSpec{{j.at("inputs").get<size_t>()}, {LayerSpec::dense(j.at("units").get<size_t>())}};
        else
            invalid("unknown builtin model " + name);
    }
    else
        m = model_from_json(j);
    if (!has_all_weights(m))
        m = generate_weights(std::move(m), weights_seed);
    return m;
}

FixedTensor seeded_input(const Shape& shape, uint64_t seed)
{
    auto rng = Xoshiro256::seeded(seed);
    std::vector<Fx> data(shape_size(shape));
    for (auto& x : data)
        x = Fx{rng.uniform(-kScale, kScale)};
    return FixedTensor(shape, std::move(data));
}
}  // namespace

Scenario scenario_from_json(const nlohmann::json& j)
{
    try
    {
        if (!j.is_object())
            invalid("scenario must be a JSON object");
        Scenario s;
        s.name = j.value("name", std::string("scenario"));
        s.seed = j.value("seed", uint64_t{0});
        if (!j.contains("model"))
            invalid("scenario needs a model");
        s.model = parse_model(j.at("model"), j.value("weights_seed", s.seed));
        validate(s.model);

        if (j.contains("partition"))
            s.partition = partition_from_json(j.at("partition"));
        else if (j.contains("zk_prefix"))
            s.partition = prefix_partition(s.model.layers.size(), j.at("zk_prefix").get<size_t>());
        else
            invalid("scenario needs a partition or zk_prefix");
        validate(s.partition, s.model.layers.size());

        if (j.contains("metric"))
        {
            const auto& mj = j.at("metric");
            if (mj.is_string() && mj == "parameters")
                s.metric = parameter_metric(s.model);
            else if (mj.is_string() && mj == "instructions")
                s.metric = instruction_metric(s.model);
            else if (mj.is_object())
                s.metric = metric_from_json(mj);
            else
                invalid("metric must be \"parameters\", \"instructions\" or a metric object");
        }

        if (!j.contains("input"))
            s.input = seeded_input(s.model.input_shape, s.seed);
        else if (j.at("input").is_string() && j.at("input") == "figure1_image")
            s.input = figure1_test_image();
        else
            s.input = tensor_from_json(j.at("input"));
        if (s.input.shape() != s.model.input_shape)
            invalid("input shape does not match the model");

        const auto prover = j.value("prover", std::string("honest"));
        if (prover == "honest")
            s.prover = ProverBehavior::Honest;
        else if (prover == "wrong_output")
            s.prover = ProverBehavior::WrongOutput;
        else if (prover == "wrong_weights")
            s.prover = ProverBehavior::WrongWeights;
        else
            invalid("unknown prover behavior " + prover);

        if (j.contains("submitter"))
        {
            const auto& sj = j.at("submitter");
            if (sj.is_string())
            {
                if (sj != "honest")
                    invalid("unknown submitter behavior " + sj.get<std::string>());
            }
            else if (sj.contains("corrupt_at"))
            {
                s.submitter.corrupt = true;
                s.submitter.pair = sj.at("corrupt_at").at("segment").get<size_t>();
                s.submitter.step = sj.at("corrupt_at").at("step").get<uint64_t>();
            }
            else
                invalid("submitter must be \"honest\" or {\"corrupt_at\": ...}");
        }

        for (const auto& c : j.value("challengers", nlohmann::json::array()))
        {
            const auto name = c.get<std::string>();
            if (name == "honest_vigilant")
                s.challengers.push_back(ChallengerBehavior::HonestVigilant);
            else if (name == "absent")
                s.challengers.push_back(ChallengerBehavior::Absent);
            else if (name == "frivolous")
                s.challengers.push_back(ChallengerBehavior::Frivolous);
            else
                invalid("unknown challenger behavior " + name);
        }
        s.recommit = j.value("recommit", false);
        s.prover_is_submitter = j.value("prover_is_submitter", false);
        if (j.contains("chain"))
            s.chain = chain_config_from_json(j.at("chain"));
        s.initial_balance = j.value("initial_balance", int64_t{100000});
        if (s.initial_balance < 0)
            invalid("initial_balance must be non-negative");
        s.include_wall_clock = j.value("include_wall_clock", false);
        return s;
    }
    catch (const nlohmann::json::exception& e)
    {
        throw Error(Errc::ScenarioInvalid, e.what());
    }
}

bool ScenarioReport::all_finalized() const
{
    for (const auto& [_, st] : segments)
    {
        if (st != SegmentStatus::Finalized)
            return false;
    }
    return !segments.empty();
}

nlohmann::json to_json(const ScenarioReport& r)
{
    nlohmann::json segs = nlohmann::json::array();
    for (size_t i = 0; i < r.segments.size(); ++i)
        segs.push_back({{"index", i}, {"tag", to_string(r.segments[i].first)}, {"status", to_string(r.segments[i].second)}});
    nlohmann::json parties = nlohmann::json::object();
    for (const auto& [name, e] : r.parties)
        parties[name] = {{"gas", e.gas}, {"bonds_lost", e.bonds_lost}, {"bonds_won", e.bonds_won},
            {"balance_start", e.balance_start}, {"balance_end", e.balance_end}};
    nlohmann::json disputes = nlohmann::json::array();
    for (const auto& d : r.disputes)
        disputes.push_back({{"id", d.id}, {"segment", d.segment}, {"challenger", d.challenger}, {"rounds", d.rounds},
            {"expected_rounds", d.expected_rounds}, {"winner", d.winner}, {"reason", d.reason},
            {"stage_reached", d.stage_reached}, {"arbitration_steps", d.arbitration_steps}, {"moves", d.moves}});
    nlohmann::json j{
        {"name", r.name},
        {"task", r.task},
        {"segments", segs},
        {"per_segment", [&] {
             nlohmann::json m = nlohmann::json::object();
             for (size_t i = 0; i < r.segments.size(); ++i)
                 m[std::to_string(i)] = to_string(r.segments[i].second);
             return m;
         }()},
        {"zk_verdicts", r.zk_verdicts},
        {"reference_output", to_json(r.reference_output)},
        {"output_matches_reference", r.output_matches_reference},
        {"per_party", parties},
        {"disputes", disputes},
        {"pair_count", r.pair_count},
        {"final_height", r.final_height},
        {"total_gas", r.total_gas},
        {"log_sha256", to_hex(r.log_digest)},
    };
    j["final_output"] = r.final_output ? to_json(*r.final_output) : nlohmann::json(nullptr);
    if (r.p)
    {
        j["p"] = *r.p;
        j["p_value"] = r.p_value;
    }
    if (r.wall_clock_s)
        j["wall_clock_s"] = *r.wall_clock_s;
    return j;
}

namespace
{
struct Agent
{
    const TraceReplayer* trace = nullptr;
    ChallengerStyle style = ChallengerStyle::Honest;
};

DisputeAction next_action(const DisputeSession& s, const Agent& a)
{
    switch (s.stage)
    {
    case Stage::BoundaryRoot: return PostBoundaryRoot{a.trace->root_at(s.boundary)};
    case Stage::Bisect:
        if (s.status == SessionStatus::AwaitingSubmitter)
            return PostMidRoot{a.trace->root_at(s.mid())};
        return Respond{a.style == ChallengerStyle::Honest && *s.pending_mid_root == a.trace->root_at(s.mid())};
    case Stage::Arbitrate: return SubmitWitness{a.trace->state_at(s.lo)};
    case Stage::HaltCheck: return SubmitWitness{a.trace->state_at(s.boundary)};
    case Stage::OutputCheck: return SubmitWitness{a.trace->state_at(s.submitter.total_steps)};
    case Stage::Closed: break;
    }
    throw Error(Errc::InvariantBreach, "no move on a closed session");
}

uint64_t ceil_log2(uint64_t n)
{
    uint64_t r = 0;
    while ((uint64_t{1} << r) < n)
        ++r;
    return r;
}
}  // namespace

ScenarioRun execute_scenario(const Scenario& s)
{
    const auto t0 = std::chrono::steady_clock::now();
    ScenarioRun run;
    run.partitioned = split(s.model, s.partition);
    const PartitionedModel& pm = run.partitioned;
    const size_t n_seg = pm.segments.size();

    const std::string prover = "prover";
    const std::string submitter = s.prover_is_submitter ? prover : "submitter";
    const std::string recommitter = "submitter-2";
    std::vector<std::string> challenger_names;
    for (size_t i = 0; i < s.challengers.size(); ++i)
        challenger_names.push_back("challenger-" + std::to_string(i + 1));

    std::map<std::string, int64_t> genesis{{std::string(kBurnAccount), 0}, {prover, s.initial_balance},
        {submitter, s.initial_balance}};
    if (s.recommit)
        genesis[recommitter] = s.initial_balance;
    for (const auto& c : challenger_names)
        genesis[c] = s.initial_balance;

    if (s.submitter.corrupt && (s.submitter.pair == 0 || s.submitter.pair > pm.pair_count))
        invalid("corrupt_at segment " + std::to_string(s.submitter.pair) + " outside 1.." + std::to_string(pm.pair_count));

    auto backend = std::make_shared<ReferenceBackend>();
    auto verifier = std::make_shared<ZkVerifier>();
    verifier->add_backend(backend);
    run.chain = std::make_unique<Chain>(s.chain, genesis, verifier);
    Chain& chain = *run.chain;

    // Step 1: publish the task with the op segments public and zk segments committed.
    const std::string task = chain.submit_tx(PublishTask{prover, s.input, public_view(pm)}).task;

    // Step 2: the prover proves every f_i^z, chaining through its own op results.
    size_t tampered = n_seg;
    for (size_t i = 0; i < n_seg; i += 2)
    {
        if (s.prover == ProverBehavior::WrongOutput || (s.prover == ProverBehavior::WrongWeights && parameter_count(pm.segments[i].model) > 0))
        {
            tampered = i;
            break;
        }
    }
    if (s.prover != ProverBehavior::Honest && tampered == n_seg)
        invalid("wrong_weights needs a zk segment with weights");

    std::vector<ZkStatement> statements;
    FixedTensor x = s.input;
    for (size_t i = 0; i < n_seg; i += 2)
    {
        const Segment& zk = pm.segments[i];
        auto [st, proof] = backend->prove(zk, x);
        if (i == tampered && s.prover == ProverBehavior::WrongOutput)
        {
            st.claimed_output[0].raw += 1;
            proof.statement_digest = statement_digest(st);
        }
        else if (i == tampered && s.prover == ProverBehavior::WrongWeights)
        {
            Segment forged = zk;
            forged.model = generate_weights(strip_weights(zk.model), s.seed ^ 0x9e3779b97f4a7c15ull);
            forged.program = std::make_shared<const Program>(compile(forged.model));
            auto [fst, fproof] = backend->prove(forged, x);
            fst.weight_commitment = zk.weight_commitment;
            fproof.statement_digest = statement_digest(fst);
            st = fst;
            proof = fproof;
        }
        statements.push_back(st);
        run.proofs.push_back(proof);
        x = run_segments(PartitionedModel{{pm.segments[i + 1]}, 1}, st.claimed_output);
    }
    for (size_t i = 0; i < statements.size(); ++i)
    {
        chain.submit_tx(PostZkProof{prover, task, 2 * i, statements[i], run.proofs[i]});
        if (chain.task(task).halted)
            break;
    }

    // Step 3: the submitter runs each f_i^o on the verified f_i^z output and commits.
    std::map<size_t, std::unique_ptr<TraceReplayer>> claimed;  // by segment, the live committer's trace
    std::map<size_t, std::unique_ptr<TraceReplayer>> honest;
    auto honest_trace = [&](size_t seg) -> const TraceReplayer& {
        auto& slot = honest[seg];
        if (!slot)
            slot = std::make_unique<TraceReplayer>(pm.segments[seg].program, chain.task(task).segments[seg - 1].statement->claimed_output);
        return *slot;
    };
    auto commit = [&](const std::string& who, size_t seg, std::optional<Corruption> corruption) {
        const auto& input = chain.task(task).segments[seg - 1].statement->claimed_output;
        auto trace = std::make_unique<TraceReplayer>(pm.segments[seg].program, input, corruption);
        if (corruption && corruption->step > trace->total_steps())
            invalid("corrupt_at step " + std::to_string(corruption->step) + " beyond the " + std::to_string(trace->total_steps()) + "-step trace");
        chain.submit_tx(CommitResult{who, task, seg, submitter_claim(*trace)});
        claimed[seg] = std::move(trace);
    };
    if (!chain.task(task).halted)
    {
        for (size_t seg = 1; seg < n_seg; seg += 2)
        {
            std::optional<Corruption> c;
            if (s.submitter.corrupt && seg == 2 * s.submitter.pair - 1)
            {
                if (s.submitter.step == 0)
                    invalid("corrupt_at step is 1-based");
                c = Corruption{s.submitter.step, 1};
            }
            commit(submitter, seg, c);
        }
    }

    // Steps 4 and 5: challengers validate and dispute, the chain arbitrates and finalizes.
    std::set<std::tuple<size_t, size_t, uint64_t>> validated;  // (challenger, segment, commit block)
    std::map<uint64_t, size_t> dispute_challenger;
    const uint64_t max_blocks = 1'000'000;
    const uint64_t start_height = chain.height();
    while (chain.height() - start_height < max_blocks)
    {
        const TaskRecord& t = chain.task(task);
        for (size_t c = 0; c < s.challengers.size(); ++c)
        {
            if (s.challengers[c] == ChallengerBehavior::Absent)
                continue;
            for (size_t seg = 1; seg < n_seg; seg += 2)
            {
                const SegmentRecord& rec = chain.task(task).segments[seg];
                if (rec.status != SegmentStatus::Committed || rec.dispute)
                    continue;
                if (!validated.insert({c, seg, rec.commit_block}).second)
                    continue;
                if (chain.height() >= rec.commit_block + t.challenge_period)
                    continue;
                const auto& truth = honest_trace(seg);
                ChallengerClaim claim = challenger_claim(truth, rec.claim->total_steps);
                if (s.challengers[c] == ChallengerBehavior::Frivolous)
                {
                    const Hash256 bogus = sha256("frivolous:" + challenger_names[c] + ":" + std::to_string(seg));
                    claim.final_root = bogus;
                    claim.boundary_root = bogus;
                    claim.total_steps = rec.claim->total_steps;
                }
                else if (claim.total_steps == rec.claim->total_steps && claim.final_root == rec.claim->final_root
                    && claim.output_commitment == rec.claim->output_commitment)
                    continue;
                const auto r = chain.submit_tx(OpenChallenge{challenger_names[c], task, seg, claim});
                dispute_challenger[*r.dispute] = c;
            }
        }

        for (const auto& [id, c] : dispute_challenger)
        {
            const DisputeSession& ds = chain.dispute(id);
            if (ds.closed())
                continue;
            const size_t seg = chain.dispute_target(id).second;
            const bool sub_turn = ds.awaiting() == Party::Submitter;
            Agent a;
            if (sub_turn)
                a.trace = claimed.at(seg).get();
            else
            {
                a.trace = &honest_trace(seg);
                a.style = s.challengers[c] == ChallengerBehavior::Frivolous ? ChallengerStyle::Frivolous : ChallengerStyle::Honest;
            }
            const std::string who = sub_turn ? chain.task(task).segments[seg].committer : challenger_names[c];
            chain.submit_tx(DisputeMove{who, id, next_action(ds, a)});
        }

        const bool open = std::any_of(dispute_challenger.begin(), dispute_challenger.end(),
            [&](const auto& d) { return !chain.dispute(d.first).closed(); });
        if (s.recommit && !open)
        {
            for (size_t seg = 1; seg < n_seg; seg += 2)
            {
                if (chain.task(task).segments[seg].status == SegmentStatus::Voided)
                    commit(recommitter, seg, std::nullopt);
            }
        }

        bool pending = false;
        for (size_t seg = 1; seg < n_seg; seg += 2)
        {
            const auto st = chain.task(task).segments[seg].status;
            pending = pending || st == SegmentStatus::Committed || st == SegmentStatus::Challenged;
        }
        for (const auto& [id, _] : dispute_challenger)
            pending = pending || !chain.dispute(id).closed();
        if (!pending)
            break;
        chain.advance_blocks(1);
    }

    // Report, derived from the log plus the private-channel records above.
    ScenarioReport& r = run.report;
    r.name = s.name;
    r.task = task;
    r.pair_count = pm.pair_count;
    r.reference_output = infer(s.model, s.input);
    const TaskRecord& t = chain.task(task);
    for (const auto& rec : t.segments)
        r.segments.push_back({rec.published.tag, rec.status});
    r.zk_verdicts.assign(pm.pair_count, "NotPosted");
    const auto log = chain.read_log();
    for (const auto& e : log)
    {
        if (e.kind == "ZkAccepted" || e.kind == "ZkRejected")
            r.zk_verdicts[e.body.at("segment").get<size_t>() / 2] = e.body.at("verdict").get<std::string>();
        for (const auto& [party, g] : e.effects.gas)
        {
            r.parties[party].gas += g;
            r.total_gas += g;
        }
        for (const auto& sl : e.effects.slashes)
        {
            r.parties[sl.from].bonds_lost += sl.amount;
            r.parties[sl.to].bonds_won += sl.amount;
        }
    }
    for (const auto& [party, b] : genesis)
    {
        if (party == kBurnAccount)
            continue;
        auto& pe = r.parties[party];
        pe.balance_start = b;
        pe.balance_end = chain.balance(party);
    }
    if (r.all_finalized())
    {
        r.final_output = read_output(*pm.segments.back().program, claimed.at(n_seg - 1)->final_state());
        r.output_matches_reference = *r.final_output == r.reference_output;
    }
    for (const auto& [id, c] : dispute_challenger)
    {
        const DisputeSession& ds = chain.dispute(id);
        DisputeTranscript d;
        d.id = id;
        d.segment = chain.dispute_target(id).second;
        d.challenger = challenger_names[c];
        d.rounds = ds.round;
        d.expected_rounds = ceil_log2(ds.boundary);
        d.winner = ds.winner ? std::string(to_string(*ds.winner)) : "";
        d.reason = ds.reason;
        d.arbitration_steps = ds.arbitration_steps;
        for (const auto& e : log)
        {
            if (e.body.is_object() && e.body.contains("dispute") && e.body.at("dispute") == id)
            {
                if (e.kind == "Arbitrated")
                    d.stage_reached = e.body.at("check").get<std::string>();
                nlohmann::json m = e.body;
                m["kind"] = e.kind;
                m["height"] = e.height;
                d.moves.push_back(std::move(m));
            }
        }
        if (d.stage_reached.empty())
            d.stage_reached = to_string(ds.stage);
        r.disputes.push_back(std::move(d));
    }
    if (s.metric)
    {
        const Rational p = zk_proportion(s.partition, *s.metric);
        r.p = p.str();
        r.p_value = static_cast<double>(p);
    }
    int64_t genesis_supply = 0;
    for (const auto& [_, b] : chain.genesis())
        genesis_supply += b;
    if (chain.total_supply() != genesis_supply)
        throw Error(Errc::InvariantBreach, "total supply changed");
    if (replay(chain.genesis(), chain.read_log()) != chain.view())
        throw Error(Errc::InvariantBreach, "replayed log disagrees with the ledger");
    r.final_height = chain.height();
    r.log_jsonl = chain.log_jsonl();
    r.log_digest = sha256(r.log_jsonl);
    if (s.include_wall_clock)
        r.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return run;
}

ScenarioReport run_scenario(const Scenario& s)
{
    return execute_scenario(s).report;
}

std::vector<ScenarioReport> run_matrix(const nlohmann::json& base, const Sweep& sweep)
{
    std::vector<ScenarioReport> out;
    for (const auto& v : sweep.values)
    {
        nlohmann::json j = base;
        j[sweep.parameter] = v;
        if (sweep.parameter == "zk_prefix")
            j.erase("partition");
        out.push_back(run_scenario(scenario_from_json(j)));
    }
    return out;
}

std::vector<size_t> privacy_scan(const ScenarioRun& run)
{
    const std::string log = run.report.log_jsonl;
    std::vector<std::string> published;
    for (const auto& e : run.chain->read_log())
    {
        if (e.kind == "ZkAccepted" || e.kind == "ZkRejected")
            published.push_back(e.body.at("statement").dump());
        if (e.kind == "TaskPublished")
            published.push_back(e.body.at("input").dump());
    }
    std::vector<size_t> hits;
    for (const auto& seg : run.partitioned.segments)
    {
        if (seg.tag != Tag::Zk || parameter_count(seg.model) == 0)
            continue;
        auto windows = weight_windows(seg.model);
        for (const auto& text : published)
            exclude_public(windows, text);
        for (const size_t h : scan_for_windows(log, windows))
            hits.push_back(h);
    }
    std::sort(hits.begin(), hits.end());
    hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
    return hits;
}
}  // namespace oppai
