// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#include <oppai/chain.hpp>
#include <oppai/error.hpp>

#include <sstream>

namespace oppai
{
namespace
{
constexpr SegmentStatus kAllStatuses[] = {SegmentStatus::Pending, SegmentStatus::ZkVerified, SegmentStatus::Rejected,
    SegmentStatus::Committed, SegmentStatus::Challenged, SegmentStatus::Finalized, SegmentStatus::Voided};

SegmentStatus status_from_string(const std::string& s)
{
    for (const auto st : kAllStatuses)
    {
        if (to_string(st) == s)
            return st;
    }
    throw Error(Errc::ParseError, "unknown segment status " + s);
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out)
{
    if (j.contains(key))
        out = j.at(key).get<T>();
}
}  // namespace

std::string_view to_string(SegmentStatus s) noexcept
{
    switch (s)
    {
    case SegmentStatus::Pending: return "Pending";
    case SegmentStatus::ZkVerified: return "ZkVerified";
    case SegmentStatus::Rejected: return "Rejected";
    case SegmentStatus::Committed: return "Committed";
    case SegmentStatus::Challenged: return "Challenged";
    case SegmentStatus::Finalized: return "Finalized";
    case SegmentStatus::Voided: return "Voided";
    }
    return "Unknown";
}

nlohmann::json to_json(const ChainConfig& c)
{
    return {
        {"gas",
            {{"publish", c.gas.publish}, {"zk_verify", c.gas.zk_verify}, {"commit", c.gas.commit},
                {"challenge", c.gas.challenge}, {"bisect_move", c.gas.bisect_move},
                {"arbitration", c.gas.arbitration}, {"finalize", c.gas.finalize}}},
        {"submitter_bond", c.submitter_bond},
        {"challenger_bond", c.challenger_bond},
        {"challenge_period", c.challenge_period},
        {"move_deadline", c.move_deadline},
    };
}

ChainConfig chain_config_from_json(const nlohmann::json& j)
{
    try
    {
        ChainConfig c;
        if (j.contains("gas"))
        {
            const auto& g = j.at("gas");
            read_opt(g, "publish", c.gas.publish);
            read_opt(g, "zk_verify", c.gas.zk_verify);
            read_opt(g, "commit", c.gas.commit);
            read_opt(g, "challenge", c.gas.challenge);
            read_opt(g, "bisect_move", c.gas.bisect_move);
            read_opt(g, "arbitration", c.gas.arbitration);
            read_opt(g, "finalize", c.gas.finalize);
        }
        read_opt(j, "submitter_bond", c.submitter_bond);
        read_opt(j, "challenger_bond", c.challenger_bond);
        read_opt(j, "challenge_period", c.challenge_period);
        read_opt(j, "move_deadline", c.move_deadline);
        const GasTable& g = c.gas;
        for (const int64_t v : {g.publish, g.zk_verify, g.commit, g.challenge, g.bisect_move, g.arbitration,
                 g.finalize, c.submitter_bond, c.challenger_bond})
        {
            if (v < 0)
                throw Error(Errc::ParseError, "chain costs and bonds must be non-negative");
        }
        if (c.challenge_period == 0 || c.move_deadline == 0)
            throw Error(Errc::ParseError, "challenge_period and move_deadline must be positive");
        return c;
    }
    catch (const nlohmann::json::exception& e)
    {
        throw Error(Errc::ParseError, std::string("chain config: ") + e.what());
    }
}

std::vector<PublishedSegment> public_view(const PartitionedModel& pm)
{
    std::vector<PublishedSegment> out;
    for (const auto& seg : pm.segments)
    {
        PublishedSegment p;
        p.tag = seg.tag;
        p.program_hash = program_hash(*seg.program);
        if (seg.tag == Tag::Zk)
        {
            p.weight_commitment = seg.weight_commitment;
            p.model = strip_weights(seg.model);
            Program stripped = *seg.program;
            stripped.weight_image.clear();
            p.program = std::make_shared<const Program>(std::move(stripped));
        }
        else
        {
            p.model = seg.model;
            p.program = seg.program;
        }
        out.push_back(std::move(p));
    }
    return out;
}

nlohmann::json to_json(const Event& e)
{
    nlohmann::json fx{{"height", e.effects.height}};
    if (!e.effects.balances.empty())
        fx["balances"] = e.effects.balances;
    if (!e.effects.gas.empty())
        fx["gas"] = e.effects.gas;
    if (!e.effects.slashes.empty())
    {
        auto& sl = fx["slashes"] = nlohmann::json::array();
        for (const auto& x : e.effects.slashes)
            sl.push_back({x.from, x.to, x.amount});
    }
    if (!e.effects.bonds.empty())
    {
        auto& b = fx["bonds"] = nlohmann::json::array();
        for (const auto& [k, d] : e.effects.bonds)
            b.push_back({k.party, k.task, k.segment, d});
    }
    if (!e.effects.statuses.empty())
    {
        auto& s = fx["statuses"] = nlohmann::json::array();
        for (const auto& [i, st] : e.effects.statuses)
            s.push_back({i, to_string(st)});
    }
    if (e.effects.dispute_id)
    {
        fx["dispute_id"] = *e.effects.dispute_id;
        fx["dispute"] = *e.effects.dispute;
    }
    return {{"seq", e.seq}, {"height", e.height}, {"kind", e.kind}, {"task", e.task}, {"body", e.body},
        {"effects", fx}};
}

Event event_from_json(const nlohmann::json& j)
{
    try
    {
        Event e;
        e.seq = j.at("seq").get<uint64_t>();
        e.height = j.at("height").get<uint64_t>();
        e.kind = j.at("kind").get<std::string>();
        e.task = j.at("task").get<std::string>();
        e.body = j.at("body");
        const auto& fx = j.at("effects");
        e.effects.height = fx.at("height").get<uint64_t>();
        if (fx.contains("balances"))
            e.effects.balances = fx.at("balances").get<std::vector<std::pair<std::string, int64_t>>>();
        if (fx.contains("gas"))
            e.effects.gas = fx.at("gas").get<std::vector<std::pair<std::string, int64_t>>>();
        if (fx.contains("slashes"))
        {
            for (const auto& x : fx.at("slashes"))
                e.effects.slashes.push_back(
                    Slash{x.at(0).get<std::string>(), x.at(1).get<std::string>(), x.at(2).get<int64_t>()});
        }
        if (fx.contains("bonds"))
        {
            for (const auto& b : fx.at("bonds"))
                e.effects.bonds.push_back({BondKey{b.at(0).get<std::string>(), b.at(1).get<std::string>(),
                                               b.at(2).get<size_t>()},
                    b.at(3).get<int64_t>()});
        }
        if (fx.contains("statuses"))
        {
            for (const auto& s : fx.at("statuses"))
                e.effects.statuses.push_back({s.at(0).get<size_t>(), status_from_string(s.at(1).get<std::string>())});
        }
        if (fx.contains("dispute_id"))
        {
            e.effects.dispute_id = fx.at("dispute_id").get<uint64_t>();
            e.effects.dispute = fx.at("dispute");
        }
        return e;
    }
    catch (const nlohmann::json::exception& ex)
    {
        throw Error(Errc::ParseError, std::string("event: ") + ex.what());
    }
}

LedgerView replay(const std::map<std::string, int64_t>& genesis, const std::vector<Event>& log)
{
    LedgerView v;
    v.balances = genesis;
    for (const auto& e : log)
    {
        v.height = e.effects.height;
        for (const auto& [party, d] : e.effects.balances)
            v.balances[party] += d;
        for (const auto& [key, d] : e.effects.bonds)
        {
            if ((v.bonds[key] += d) == 0)
                v.bonds.erase(key);
        }
        for (const auto& [i, st] : e.effects.statuses)
            v.statuses[{e.task, i}] = st;
        if (e.effects.dispute_id)
            v.disputes[*e.effects.dispute_id] = *e.effects.dispute;
    }
    return v;
}

Chain::Chain(ChainConfig config, std::map<std::string, int64_t> genesis, std::shared_ptr<ZkVerifier> verifier)
  : config_(std::move(config)), genesis_(std::move(genesis)), verifier_(std::move(verifier)), balances_(genesis_)
{
    for (const auto& [party, amount] : genesis_)
    {
        if (amount < 0)
            throw Error(Errc::InvalidTransition, "negative genesis balance for " + party);
    }
}

int64_t Chain::balance(const std::string& party) const
{
    const auto it = balances_.find(party);
    return it == balances_.end() ? 0 : it->second;
}

int64_t Chain::bond(const BondKey& key) const
{
    const auto it = bonds_.find(key);
    return it == bonds_.end() ? 0 : it->second;
}

int64_t Chain::total_supply() const
{
    int64_t total = 0;
    for (const auto& [_, b] : balances_)
        total += b;
    for (const auto& [_, b] : bonds_)
        total += b;
    return total;
}

const TaskRecord& Chain::task(const std::string& id) const
{
    const auto it = tasks_.find(id);
    if (it == tasks_.end())
        throw Error(Errc::UnknownTask, id);
    return it->second;
}

TaskRecord& Chain::task_mut(const std::string& id)
{
    const auto it = tasks_.find(id);
    if (it == tasks_.end())
        throw Error(Errc::UnknownTask, id);
    return it->second;
}

const DisputeSession& Chain::dispute(uint64_t id) const
{
    const auto it = disputes_.find(id);
    if (it == disputes_.end())
        throw Error(Errc::InvalidTransition, "no dispute " + std::to_string(id));
    return it->second;
}

LedgerView Chain::view() const
{
    LedgerView v;
    v.height = height_;
    v.balances = balances_;
    v.bonds = bonds_;
    for (const auto& [id, t] : tasks_)
    {
        for (size_t i = 0; i < t.segments.size(); ++i)
            v.statuses[{id, i}] = t.segments[i].status;
    }
    for (const auto& [id, s] : disputes_)
        v.disputes[id] = to_json(s);
    return v;
}

void Chain::require_funds(const std::string& party, int64_t amount) const
{
    if (balance(party) < amount)
        throw Error(Errc::InsufficientFunds,
            party + " holds " + std::to_string(balance(party)) + ", needs " + std::to_string(amount));
}

void Chain::move_balance(Effects& fx, const std::string& party, int64_t delta)
{
    if (delta == 0)
        return;
    balances_[party] += delta;
    fx.balances.push_back({party, delta});
}

void Chain::charge(Effects& fx, const std::string& party, int64_t amount)
{
    if (amount == 0)
        return;
    move_balance(fx, party, -amount);
    move_balance(fx, std::string(kBurnAccount), amount);
    fx.gas.push_back({party, amount});
}

void Chain::move_bond(Effects& fx, const BondKey& key, int64_t delta)
{
    if (delta == 0)
        return;
    if ((bonds_[key] += delta) == 0)
        bonds_.erase(key);
    fx.bonds.push_back({key, delta});
}

void Chain::set_status(Effects& fx, TaskRecord& t, size_t segment, SegmentStatus s)
{
    t.segments[segment].status = s;
    fx.statuses.push_back({segment, s});
}

uint64_t Chain::emit(std::string kind, std::string task, nlohmann::json body, Effects fx)
{
    fx.height = height_;
    const uint64_t seq = log_.size();
    log_.push_back(Event{seq, height_, std::move(kind), std::move(task), std::move(body), std::move(fx)});
    return seq;
}

Receipt Chain::submit_tx(const Transaction& tx)
{
    return std::visit([this](const auto& t) { return apply(t); }, tx);
}

Receipt Chain::apply(const PublishTask& tx)
{
    const int64_t gas = config_.gas.publish;
    require_funds(tx.sender, gas);
    if (tx.segments.empty() || tx.segments.size() % 2 != 0)
        throw Error(Errc::InvalidTransition, "a task publishes (zk, op) segment pairs");
    for (size_t i = 0; i < tx.segments.size(); ++i)
    {
        const auto& s = tx.segments[i];
        if (s.tag != (i % 2 == 0 ? Tag::Zk : Tag::Op) || !s.program)
            throw Error(Errc::InvalidTransition, "segment " + std::to_string(i) + " is out of order");
    }
    if (tx.input.shape() != tx.segments.front().program->input_shape)
        throw Error(Errc::InvalidTransition, "task input does not fit the first segment");

    TaskRecord t;
    t.id = "task-" + std::to_string(next_task_++);
    t.publisher = tx.sender;
    t.input = tx.input;
    t.challenge_period = config_.challenge_period;
    Effects fx;
    charge(fx, tx.sender, gas);
    nlohmann::json segs = nlohmann::json::array();
    for (size_t i = 0; i < tx.segments.size(); ++i)
    {
        const auto& s = tx.segments[i];
        if (s.tag == Tag::Zk)
        {
            verifier_->register_segment(Segment{Tag::Zk, i / 2 + 1, 0, s.model, s.program, s.weight_commitment});
        }
        nlohmann::json entry{{"tag", to_string(s.tag)}, {"program_hash", to_hex(s.program_hash)},
            {"instructions", s.program->code.size()}};
        if (s.tag == Tag::Zk)
            entry["weight_commitment"] = to_hex(s.weight_commitment);
        segs.push_back(entry);
        t.segments.emplace_back().published = s;
        fx.statuses.push_back({i, SegmentStatus::Pending});
    }
    const std::string id = t.id;
    tasks_.emplace(id, std::move(t));
    const auto seq = emit("TaskPublished", id, {{"publisher", tx.sender}, {"input", to_json(tx.input)}, {"segments", segs}}, std::move(fx));
    return Receipt{seq, gas, id, std::nullopt};
}

Receipt Chain::apply(const PostZkProof& tx)
{
    TaskRecord& t = task_mut(tx.task);
    const int64_t gas = config_.gas.zk_verify;
    require_funds(tx.sender, gas);
    if (tx.segment >= t.segments.size() || t.segments[tx.segment].published.tag != Tag::Zk)
        throw Error(Errc::InvalidTransition, "segment " + std::to_string(tx.segment) + " is not a zk segment");
    SegmentRecord& rec = t.segments[tx.segment];
    if (rec.status != SegmentStatus::Pending)
        throw Error(Errc::InvalidTransition, "zk segment already has a verdict");
    if (t.halted)
        throw Error(Errc::InvalidTransition, "task halted by a rejected proof");
    for (size_t i = 0; i < tx.segment; i += 2)
    {
        if (t.segments[i].status != SegmentStatus::ZkVerified && t.segments[i].status != SegmentStatus::Finalized)
            throw Error(Errc::InvalidTransition, "zk verdicts land in segment order");
    }

    Verdict v;
    if (tx.statement.weight_commitment != rec.published.weight_commitment
        || tx.statement.segment_program_hash != rec.published.program_hash
        || (tx.segment == 0 && tx.statement.public_input != t.input))
        v = Verdict::StatementMismatch;
    else
        v = verifier_->verify(tx.statement, tx.proof);

    Effects fx;
    charge(fx, tx.sender, gas);
    rec.statement = tx.statement;
    const bool ok = v == Verdict::Accept;
    set_status(fx, t, tx.segment, ok ? SegmentStatus::ZkVerified : SegmentStatus::Rejected);
    if (!ok)
        t.halted = true;
    const auto seq = emit(ok ? "ZkAccepted" : "ZkRejected", tx.task,
        {{"segment", tx.segment}, {"prover", tx.sender}, {"backend", tx.proof.backend_id},
            {"statement", to_json(tx.statement)}, {"verdict", to_string(v)}},
        std::move(fx));
    return Receipt{seq, gas, tx.task, std::nullopt};
}

Receipt Chain::apply(const CommitResult& tx)
{
    TaskRecord& t = task_mut(tx.task);
    const int64_t gas = config_.gas.commit;
    if (tx.segment >= t.segments.size() || t.segments[tx.segment].published.tag != Tag::Op)
        throw Error(Errc::InvalidTransition, "segment " + std::to_string(tx.segment) + " is not an op segment");
    if (t.halted)
        throw Error(Errc::InvalidTransition, "task halted by a rejected proof");
    SegmentRecord& rec = t.segments[tx.segment];
    if (rec.status != SegmentStatus::Pending && rec.status != SegmentStatus::Voided)
        throw Error(Errc::InvalidTransition, "op segment already committed");
    const SegmentRecord& zk = t.segments[tx.segment - 1];
    if (zk.status != SegmentStatus::ZkVerified)
        throw Error(Errc::InvalidTransition, "zk verdict for the pair must land first");
    for (size_t i = 1; i < tx.segment; i += 2)
    {
        const auto st = t.segments[i].status;
        if (st == SegmentStatus::Pending || st == SegmentStatus::Voided)
            throw Error(Errc::InvalidTransition, "earlier op segments must be committed first");
    }
    if (tx.claim.input_commitment != tensor_commitment(zk.statement->claimed_output))
        throw Error(Errc::InvalidTransition, "input commitment differs from the verified zk output");
    if (tx.claim.total_steps == 0)
        throw Error(Errc::InvalidTransition, "a trace has at least one step");
    require_funds(tx.sender, gas + config_.submitter_bond);

    Effects fx;
    charge(fx, tx.sender, gas);
    move_balance(fx, tx.sender, -config_.submitter_bond);
    move_bond(fx, BondKey{tx.sender, tx.task, tx.segment}, config_.submitter_bond);
    rec.claim = tx.claim;
    rec.committer = tx.sender;
    rec.commit_block = height_;
    set_status(fx, t, tx.segment, SegmentStatus::Committed);
    const auto seq = emit("ResultCommitted", tx.task,
        {{"segment", tx.segment}, {"committer", tx.sender}, {"input_commitment", to_hex(tx.claim.input_commitment)},
            {"output_commitment", to_hex(tx.claim.output_commitment)}, {"final_root", to_hex(tx.claim.final_root)},
            {"total_steps", tx.claim.total_steps}, {"bond", config_.submitter_bond}},
        std::move(fx));
    return Receipt{seq, gas, tx.task, std::nullopt};
}

Receipt Chain::apply(const OpenChallenge& tx)
{
    TaskRecord& t = task_mut(tx.task);
    const int64_t gas = config_.gas.challenge;
    if (tx.segment >= t.segments.size() || t.segments[tx.segment].published.tag != Tag::Op)
        throw Error(Errc::InvalidTransition, "segment " + std::to_string(tx.segment) + " is not an op segment");
    SegmentRecord& rec = t.segments[tx.segment];
    if (rec.status != SegmentStatus::Committed)
        throw Error(Errc::InvalidTransition, "only a committed, undisputed result can be challenged");
    if (height_ >= rec.commit_block + t.challenge_period)
        throw Error(Errc::InvalidTransition, "challenge period is over");
    if (tx.sender == rec.committer)
        throw Error(Errc::InvalidTransition, "a committer cannot challenge its own result");
    require_funds(tx.sender, gas + config_.challenger_bond);

    const Program& program = *rec.published.program;
    const auto& input = t.segments[tx.segment - 1].statement->claimed_output;
    const Hash256 initial = root(initial_state(program, input));
    const uint64_t id = next_dispute_;
    DisputeSession s = open_dispute(id, *rec.claim, tx.claim, initial, height_, config_.move_deadline);

    ++next_dispute_;
    Effects fx;
    charge(fx, tx.sender, gas);
    move_balance(fx, tx.sender, -config_.challenger_bond);
    move_bond(fx, BondKey{tx.sender, tx.task, tx.segment}, config_.challenger_bond);
    rec.dispute = id;
    set_status(fx, t, tx.segment, SegmentStatus::Challenged);
    disputes_.emplace(id, std::move(s));
    dispute_segment_[id] = {tx.task, tx.segment};
    challengers_[id] = tx.sender;
    const auto& ds = disputes_.at(id);
    fx.dispute_id = id;
    fx.dispute = to_json(ds);
    const auto seq = emit("ChallengeOpened", tx.task,
        {{"segment", tx.segment}, {"dispute", id}, {"challenger", tx.sender},
            {"total_steps", tx.claim.total_steps}, {"final_root", to_hex(tx.claim.final_root)},
            {"bond", config_.challenger_bond}, {"stage", to_string(ds.stage)}},
        std::move(fx));
    return Receipt{seq, gas, tx.task, id};
}

Receipt Chain::apply(const DisputeMove& tx)
{
    const auto it = disputes_.find(tx.dispute);
    if (it == disputes_.end())
        throw Error(Errc::InvalidTransition, "no dispute " + std::to_string(tx.dispute));
    const auto& [task_id, segment] = dispute_segment_.at(tx.dispute);
    TaskRecord& t = task_mut(task_id);
    const SegmentRecord& rec = t.segments[segment];

    Party sender;
    if (tx.sender == rec.committer)
        sender = Party::Submitter;
    else if (tx.sender == challengers_.at(tx.dispute))
        sender = Party::Challenger;
    else
        throw Error(Errc::NotYourTurn, tx.sender + " is not a party to dispute " + std::to_string(tx.dispute));

    const bool witness = std::holds_alternative<SubmitWitness>(tx.action);
    const int64_t gas = witness ? config_.gas.arbitration : config_.gas.bisect_move;
    require_funds(tx.sender, gas);

    DisputeSession s = it->second;
    const Program& program = *rec.published.program;
    std::string kind;
    nlohmann::json body{{"segment", segment}, {"dispute", tx.dispute}, {"party", to_string(sender)}};
    std::visit(
        [&](const auto& a) {
            using A = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<A, PostBoundaryRoot>)
            {
                post_boundary_root(s, sender, a.root, height_);
                kind = "BoundaryPosted";
                body["index"] = s.boundary;
                body["root"] = to_hex(a.root);
            }
            else if constexpr (std::is_same_v<A, PostMidRoot>)
            {
                body["index"] = s.mid();
                post_mid_root(s, sender, a.root, height_);
                kind = "MidRootPosted";
                body["root"] = to_hex(a.root);
            }
            else if constexpr (std::is_same_v<A, Respond>)
            {
                body["index"] = s.mid();
                respond(s, sender, a.agrees, height_);
                kind = "MidRootAnswered";
                body["agrees"] = a.agrees;
            }
            else
            {
                const Stage stage = s.stage;
                if (stage == Stage::HaltCheck)
                    halt_check(s, sender, a.witness, height_);
                else if (stage == Stage::OutputCheck)
                    output_check(s, sender, a.witness, program, height_);
                else
                    arbitrate(s, sender, a.witness, program, height_);
                kind = "Arbitrated";
                body["check"] = to_string(stage);
                body["witness_root"] = to_hex(root(a.witness));
            }
        },
        tx.action);

    Effects fx;
    charge(fx, tx.sender, gas);
    it->second = std::move(s);
    if (it->second.closed())
    {
        body["winner"] = to_string(*it->second.winner);
        body["reason"] = it->second.reason;
        settle_dispute(fx, tx.dispute);
    }
    body["lo"] = it->second.lo;
    body["hi"] = it->second.hi;
    body["round"] = it->second.round;
    fx.dispute_id = tx.dispute;
    fx.dispute = to_json(it->second);
    const auto seq = emit(kind, task_id, body, std::move(fx));
    return Receipt{seq, gas, task_id, tx.dispute};
}

void Chain::settle_dispute(Effects& fx, uint64_t id)
{
    const DisputeSession& s = disputes_.at(id);
    const auto [task_id, segment] = dispute_segment_.at(id);
    TaskRecord& t = task_mut(task_id);
    SegmentRecord& rec = t.segments[segment];
    const std::string submitter = rec.committer;
    const std::string challenger = challengers_.at(id);
    const BondKey sub_key{submitter, task_id, segment};
    const BondKey chal_key{challenger, task_id, segment};
    rec.dispute.reset();

    if (*s.winner == Party::Submitter)
    {
        const int64_t slashed = bond(chal_key);
        move_bond(fx, chal_key, -slashed);
        move_balance(fx, submitter, slashed);
        fx.slashes.push_back(Slash{challenger, submitter, slashed});
        set_status(fx, t, segment, SegmentStatus::Committed);
        return;
    }
    const int64_t slashed = bond(sub_key);
    move_bond(fx, sub_key, -slashed);
    move_balance(fx, challenger, slashed);
    fx.slashes.push_back(Slash{submitter, challenger, slashed});
    const int64_t own = bond(chal_key);
    move_bond(fx, chal_key, -own);
    move_balance(fx, challenger, own);
    rec.claim.reset();
    set_status(fx, t, segment, SegmentStatus::Voided);

    // Everything downstream of a voided result is void too.
    for (size_t j = segment + 2; j < t.segments.size(); j += 2)
    {
        SegmentRecord& later = t.segments[j];
        if (later.status == SegmentStatus::Finalized)
            throw Error(Errc::InvariantBreach, "a successor finalized ahead of a disputed segment");
        if (later.dispute)
        {
            DisputeSession& open = disputes_.at(*later.dispute);
            open.stage = Stage::Closed;
            open.reason = "voided by an upstream dispute";
            const BondKey k{challengers_.at(*later.dispute), task_id, j};
            const int64_t b = bond(k);
            move_bond(fx, k, -b);
            move_balance(fx, k.party, b);
            later.dispute.reset();
        }
        if (later.claim)
        {
            const BondKey k{later.committer, task_id, j};
            const int64_t b = bond(k);
            move_bond(fx, k, -b);
            move_balance(fx, later.committer, b);
            later.claim.reset();
        }
        set_status(fx, t, j, SegmentStatus::Voided);
    }
}

bool Chain::finalizable(const std::string& task_id, size_t segment) const
{
    const TaskRecord& t = task(task_id);
    if (segment >= t.segments.size() || t.segments[segment].published.tag != Tag::Op)
        return false;
    const SegmentRecord& rec = t.segments[segment];
    if (rec.status != SegmentStatus::Committed || rec.dispute)
        return false;
    if (height_ < rec.commit_block + t.challenge_period)
        return false;
    for (size_t i = 1; i < segment; i += 2)
    {
        if (t.segments[i].status != SegmentStatus::Finalized)
            return false;
    }
    return true;
}

void Chain::finalize_segment(Effects& fx, TaskRecord& t, size_t segment, const std::string& payer)
{
    SegmentRecord& rec = t.segments[segment];
    const BondKey key{rec.committer, t.id, segment};
    const int64_t b = bond(key);
    move_bond(fx, key, -b);
    move_balance(fx, rec.committer, b);
    charge(fx, payer, std::min(config_.gas.finalize, balance(payer)));
    set_status(fx, t, segment - 1, SegmentStatus::Finalized);
    set_status(fx, t, segment, SegmentStatus::Finalized);
}

Receipt Chain::apply(const Finalize& tx)
{
    TaskRecord& t = task_mut(tx.task);
    const int64_t gas = config_.gas.finalize;
    if (!finalizable(tx.task, tx.segment))
        throw Error(Errc::InvalidTransition,
            "segment " + std::to_string(tx.segment) + " cannot finalize at height " + std::to_string(height_));
    require_funds(tx.sender, gas);
    Effects fx;
    finalize_segment(fx, t, tx.segment, tx.sender);
    const auto& rec = t.segments[tx.segment];
    const auto seq = emit("Finalized", tx.task,
        {{"segment", tx.segment}, {"output_commitment", to_hex(rec.claim->output_commitment)}, {"by", tx.sender}},
        std::move(fx));
    return Receipt{seq, gas, tx.task, std::nullopt};
}

void Chain::tick()
{
    ++height_;
    emit("BlocksAdvanced", "", {{"height", height_}}, Effects{});
    for (auto& [id, s] : disputes_)
    {
        if (!timeout(s, height_))
            continue;
        Effects fx;
        settle_dispute(fx, id);
        fx.dispute_id = id;
        fx.dispute = to_json(s);
        const auto& [task_id, segment] = dispute_segment_.at(id);
        emit("DisputeTimedOut", task_id,
            {{"segment", segment}, {"dispute", id}, {"winner", to_string(*s.winner)}, {"reason", s.reason}},
            std::move(fx));
    }
    for (auto& [id, t] : tasks_)
    {
        for (size_t i = 1; i < t.segments.size(); i += 2)
        {
            if (!finalizable(id, i))
                continue;
            Effects fx;
            const std::string payer = t.segments[i].committer;
            finalize_segment(fx, t, i, payer);
            emit("Finalized", id,
                {{"segment", i}, {"output_commitment", to_hex(t.segments[i].claim->output_commitment)},
                    {"by", payer}},
                std::move(fx));
        }
    }
}

void Chain::advance_blocks(uint64_t k)
{
    if (k == 0)
        throw Error(Errc::InvalidTransition, "advance by at least one block");
    for (uint64_t i = 0; i < k; ++i)
        tick();
}

std::vector<Event> Chain::read_log(const LogFilter& f) const
{
    std::vector<Event> out;
    for (const auto& e : log_)
    {
        if (!f.include_blocks && e.kind == "BlocksAdvanced")
            continue;
        if (f.task && e.task != *f.task)
            continue;
        if (f.kind && e.kind != *f.kind)
            continue;
        out.push_back(e);
    }
    return out;
}

std::string Chain::log_jsonl(const LogFilter& f) const
{
    std::ostringstream os;
    for (const auto& e : read_log(f))
        os << to_json(e).dump() << '\n';
    return os.str();
}
}  // namespace oppai
