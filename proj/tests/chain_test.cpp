// Copyright 2026 The oppai Authors.
// SPDX-License-Identifier: Apache-2.0

#include "testkit.hpp"

#include <oppai/chain.hpp>
#include <oppai/error.hpp>

#include <gtest/gtest.h>

namespace oppai
{
namespace
{
constexpr int64_t kStart = 100000;

template <class F>
void expect_errc(Errc code, F&& f)
{
    try
    {
        f();
        ADD_FAILURE() << "expected " << to_string(code);
    }
    catch (const Error& e)
    {
        EXPECT_EQ(e.code(), code) << e.what();
    }
}

struct Fixture
{
    ModelSpec model;
    PartitionedModel pm;
    std::shared_ptr<ReferenceBackend> backend = std::make_shared<ReferenceBackend>();
    std::shared_ptr<ZkVerifier> verifier = std::make_shared<ZkVerifier>();
    std::map<std::string, int64_t> genesis{
        {"publisher", kStart}, {"prover", kStart}, {"submitter", kStart}, {"challenger", kStart}, {"poor", 1040}};
    std::unique_ptr<Chain> chain;
    FixedTensor input;
    std::string task;
    ZkStatement statement;

    explicit Fixture(ChainConfig cfg = {})
    {
        model = generate_weights(
            ModelSpec{{4}, {LayerSpec::dense(3, Activation::Relu), LayerSpec::dense(2)}}, 11);
        pm = split(model, prefix_partition(2, 1));
        verifier->add_backend(backend);
        chain = std::make_unique<Chain>(cfg, genesis, verifier);
        input = FixedTensor(Shape{4}, {Fx::from_int(1), Fx::from_int(-2), Fx::from_int(3), Fx::from_int(4)});
    }

    void publish()
    {
        task = chain->submit_tx(PublishTask{"publisher", input, public_view(pm)}).task;
    }

    void prove()
    {
        auto [st, proof] = backend->prove(pm.segments[0], input);
        statement = st;
        chain->submit_tx(PostZkProof{"prover", task, 0, st, proof});
    }

    TraceReplayer trace(std::optional<Corruption> c = std::nullopt) const
    {
        return TraceReplayer(pm.segments[1].program, statement.claimed_output, c);
    }

    void commit(const TraceReplayer& t, const std::string& who = "submitter")
    {
        chain->submit_tx(CommitResult{who, task, 1, submitter_claim(t)});
    }

    uint64_t challenge(const TraceReplayer& own, uint64_t submitter_steps)
    {
        return *chain->submit_tx(OpenChallenge{"challenger", task, 1, challenger_claim(own, submitter_steps)}).dispute;
    }

    // Both parties follow their traces through dispute transactions.
    void play(uint64_t id, const TraceReplayer& sub, const TraceReplayer& chal)
    {
        while (!chain->dispute(id).closed())
        {
            const DisputeSession& s = chain->dispute(id);
            const std::string who = s.awaiting() == Party::Submitter ? "submitter" : "challenger";
            DisputeAction a;
            switch (s.stage)
            {
            case Stage::BoundaryRoot: a = PostBoundaryRoot{sub.root_at(s.boundary)}; break;
            case Stage::Bisect:
                if (s.awaiting() == Party::Submitter)
                    a = PostMidRoot{sub.root_at(s.mid())};
                else
                    a = Respond{*s.pending_mid_root == chal.root_at(s.mid())};
                break;
            case Stage::Arbitrate: a = SubmitWitness{sub.state_at(s.lo)}; break;
            case Stage::HaltCheck:
                a = SubmitWitness{(s.awaiting() == Party::Submitter ? sub : chal).state_at(s.boundary)};
                break;
            case Stage::OutputCheck: a = SubmitWitness{sub.state_at(s.submitter.total_steps)}; break;
            case Stage::Closed: return;
            }
            chain->submit_tx(DisputeMove{who, id, a});
            chain->advance_blocks(1);
        }
    }

    SegmentStatus status(size_t i) const { return chain->task(task).segments[i].status; }
    void expect_replay() const { EXPECT_EQ(replay(genesis, chain->read_log()), chain->view()); }
};

std::vector<std::string> kinds(const std::vector<Event>& log)
{
    std::vector<std::string> out;
    for (const auto& e : log)
        out.push_back(e.kind);
    return out;
}

int64_t genesis_total(const Fixture& f)
{
    int64_t t = 0;
    for (const auto& [k, v] : f.genesis)
        t += v;
    return t;
}

TEST(Chain, HonestPathFinalizesAfterWindow)
{
    Fixture f;
    f.publish();
    f.prove();
    EXPECT_EQ(f.status(0), SegmentStatus::ZkVerified);
    f.commit(f.trace());
    EXPECT_EQ(f.status(1), SegmentStatus::Committed);
    EXPECT_EQ(f.chain->bond({"submitter", f.task, 1}), 1000);
    f.chain->advance_blocks(19);
    EXPECT_EQ(f.status(1), SegmentStatus::Committed);
    f.chain->advance_blocks(1);
    EXPECT_EQ(f.status(0), SegmentStatus::Finalized);
    EXPECT_EQ(f.status(1), SegmentStatus::Finalized);
    EXPECT_EQ(f.chain->bond({"submitter", f.task, 1}), 0);
    EXPECT_EQ(f.chain->balance("submitter"), kStart - 50 - 10);
    EXPECT_EQ(f.chain->balance("prover"), kStart - 500);
    EXPECT_EQ(f.chain->balance("publisher"), kStart - 100);
    EXPECT_EQ(f.chain->balance(std::string(kBurnAccount)), 660);
    EXPECT_EQ(f.chain->total_supply(), genesis_total(f));
    f.expect_replay();
}

TEST(Chain, HonestEventOrder)
{
    Fixture f;
    EXPECT_TRUE(f.chain->read_log().empty());
    f.publish();
    f.prove();
    f.commit(f.trace());
    f.chain->advance_blocks(20);
    LogFilter lf;
    lf.include_blocks = false;
    EXPECT_EQ(kinds(f.chain->read_log(lf)),
        (std::vector<std::string>{"TaskPublished", "ZkAccepted", "ResultCommitted", "Finalized"}));
    LogFilter by_task;
    by_task.task = f.task;
    for (const auto& e : f.chain->read_log(by_task))
        EXPECT_EQ(e.task, f.task);
    LogFilter other;
    other.task = "task-99";
    EXPECT_TRUE(f.chain->read_log(other).empty());
    LogFilter blocks;
    blocks.kind = "BlocksAdvanced";
    EXPECT_EQ(f.chain->read_log(blocks).size(), 20u);
    const auto log = f.chain->read_log();
    for (size_t i = 0; i < log.size(); ++i)
        EXPECT_EQ(log[i].seq, i);
}

TEST(Chain, FinalizeTxBeforeWindowFails)
{
    Fixture f;
    f.publish();
    f.prove();
    f.commit(f.trace());
    f.chain->advance_blocks(5);
    expect_errc(Errc::InvalidTransition, [&] { f.chain->submit_tx(Finalize{"publisher", f.task, 1}); });
    expect_errc(Errc::InvalidTransition, [&] { f.chain->submit_tx(Finalize{"publisher", f.task, 0}); });
}

TEST(Chain, CommitNeedsBond)
{
    Fixture f;
    f.publish();
    f.prove();
    const auto before = f.chain->read_log().size();
    expect_errc(Errc::InsufficientFunds, [&] { f.commit(f.trace(), "poor"); });
    EXPECT_EQ(f.chain->read_log().size(), before);
    EXPECT_EQ(f.chain->balance("poor"), 1040);
    expect_errc(Errc::InsufficientFunds, [&] { f.commit(f.trace(), "nobody"); });
}

TEST(Chain, CommitOrderingEnforced)
{
    Fixture f;
    f.publish();
    expect_errc(Errc::InvalidTransition, [&] { f.commit(TraceReplayer(f.pm.segments[1].program, FixedTensor(Shape{3}))); });
    f.prove();
    auto bad = submitter_claim(f.trace());
    bad.input_commitment.bytes[0] ^= 1;
    expect_errc(Errc::InvalidTransition, [&] { f.chain->submit_tx(CommitResult{"submitter", f.task, 1, bad}); });
    expect_errc(Errc::InvalidTransition,
        [&] { f.chain->submit_tx(CommitResult{"submitter", f.task, 0, submitter_claim(f.trace())}); });
    f.commit(f.trace());
    expect_errc(Errc::InvalidTransition, [&] { f.commit(f.trace()); });
    expect_errc(Errc::UnknownTask, [&] { f.chain->submit_tx(Finalize{"publisher", "task-7", 1}); });
}

TEST(Chain, PublishValidatesSegments)
{
    Fixture f;
    auto segs = public_view(f.pm);
    std::swap(segs[0], segs[1]);
    expect_errc(Errc::InvalidTransition, [&] { f.chain->submit_tx(PublishTask{"publisher", f.input, segs}); });
    expect_errc(Errc::InvalidTransition,
        [&] { f.chain->submit_tx(PublishTask{"publisher", FixedTensor(Shape{3}), public_view(f.pm)}); });
    expect_errc(Errc::InvalidTransition, [&] { f.chain->submit_tx(PublishTask{"publisher", f.input, {}}); });
}

TEST(Chain, RejectedProofHaltsTask)
{
    Fixture f;
    f.publish();
    auto [st, proof] = f.backend->prove(f.pm.segments[0], f.input);
    st.claimed_output[0].raw += 1;
    f.statement = st;
    f.chain->submit_tx(PostZkProof{"prover", f.task, 0, st, proof});
    EXPECT_EQ(f.status(0), SegmentStatus::Rejected);
    EXPECT_TRUE(f.chain->task(f.task).halted);
    expect_errc(Errc::InvalidTransition, [&] { f.commit(f.trace()); });
    f.chain->advance_blocks(30);
    EXPECT_EQ(f.status(1), SegmentStatus::Pending);
    f.expect_replay();
}

TEST(Chain, CommitterCannotSelfChallenge)
{
    Fixture f;
    f.publish();
    f.prove();
    const auto t = f.trace();
    f.commit(t);
    auto c = challenger_claim(f.trace(Corruption{2, 1}), t.total_steps());
    expect_errc(Errc::InvalidTransition, [&] { f.chain->submit_tx(OpenChallenge{"submitter", f.task, 1, c}); });
}

TEST(Chain, IdenticalChallengeHasNoDisagreement)
{
    Fixture f;
    f.publish();
    f.prove();
    const auto t = f.trace();
    f.commit(t);
    expect_errc(Errc::NoDisagreement, [&] { f.challenge(t, t.total_steps()); });
    EXPECT_EQ(f.chain->balance("challenger"), kStart);
}

TEST(Chain, LateChallengeRejected)
{
    Fixture f;
    f.publish();
    f.prove();
    const auto t = f.trace(Corruption{3, 1});
    f.commit(t);
    f.chain->advance_blocks(20);
    expect_errc(Errc::InvalidTransition, [&] { f.challenge(f.trace(), t.total_steps()); });
}

TEST(Chain, CorruptSubmitterSlashedAndVoided)
{
    Fixture f;
    f.publish();
    f.prove();
    const auto bad = f.trace(Corruption{4, 7});
    const auto good = f.trace();
    f.commit(bad);
    f.chain->advance_blocks(3);
    const uint64_t id = f.challenge(good, bad.total_steps());
    EXPECT_EQ(f.status(1), SegmentStatus::Challenged);
    EXPECT_FALSE(f.chain->finalizable(f.task, 1));
    f.play(id, bad, good);
    const auto& s = f.chain->dispute(id);
    EXPECT_EQ(*s.winner, Party::Challenger);
    EXPECT_EQ(s.round, testkit::ceil_log2(good.total_steps()));
    EXPECT_EQ(f.status(1), SegmentStatus::Voided);
    EXPECT_EQ(f.status(0), SegmentStatus::ZkVerified);
    EXPECT_EQ(f.chain->bond({"submitter", f.task, 1}), 0);
    EXPECT_EQ(f.chain->bond({"challenger", f.task, 1}), 0);
    auto count = [&](const char* kind) {
        LogFilter lf;
        lf.kind = kind;
        return static_cast<int64_t>(f.chain->read_log(lf).size());
    };
    EXPECT_EQ(count("Arbitrated"), 1);
    EXPECT_EQ(f.chain->balance("challenger"), kStart - 50 + 1000 - 20 * count("MidRootAnswered"));
    EXPECT_EQ(f.chain->balance("submitter"), kStart - 50 - 1000 - 20 * count("MidRootPosted") - 200);
    EXPECT_EQ(f.chain->total_supply(), genesis_total(f));
    f.chain->advance_blocks(40);
    EXPECT_EQ(f.status(1), SegmentStatus::Voided);

    // An honest re-commit then finalizes.
    f.chain->submit_tx(CommitResult{"challenger", f.task, 1, submitter_claim(good)});
    f.chain->advance_blocks(20);
    EXPECT_EQ(f.status(1), SegmentStatus::Finalized);
    f.expect_replay();
}

TEST(Chain, FrivolousChallengerSlashed)
{
    Fixture f;
    f.publish();
    f.prove();
    const auto good = f.trace();
    f.commit(good);
    const auto liar = f.trace(Corruption{2, 1});
    const uint64_t id = f.challenge(liar, good.total_steps());
    f.play(id, good, liar);
    EXPECT_EQ(*f.chain->dispute(id).winner, Party::Submitter);
    EXPECT_EQ(f.status(1), SegmentStatus::Committed);
    EXPECT_EQ(f.chain->bond({"challenger", f.task, 1}), 0);
    EXPECT_EQ(f.chain->bond({"submitter", f.task, 1}), 1000);
    f.chain->advance_blocks(20);
    EXPECT_EQ(f.status(1), SegmentStatus::Finalized);
    EXPECT_EQ(f.chain->total_supply(), genesis_total(f));
    f.expect_replay();
}

TEST(Chain, SilentSubmitterTimesOut)
{
    Fixture f;
    f.publish();
    f.prove();
    const auto bad = f.trace(Corruption{1, 1});
    f.commit(bad);
    const uint64_t id = f.challenge(f.trace(), bad.total_steps());
    f.chain->advance_blocks(10);
    EXPECT_FALSE(f.chain->dispute(id).closed());
    f.chain->advance_blocks(1);
    const auto& s = f.chain->dispute(id);
    EXPECT_EQ(s.status, SessionStatus::TimedOut);
    EXPECT_EQ(*s.winner, Party::Challenger);
    EXPECT_EQ(f.status(1), SegmentStatus::Voided);
    EXPECT_EQ(f.chain->balance("challenger"), kStart - 50 + 1000);
    LogFilter lf;
    lf.kind = "DisputeTimedOut";
    EXPECT_EQ(f.chain->read_log(lf).size(), 1u);
    f.expect_replay();
}

TEST(Chain, OutsiderCannotMove)
{
    Fixture f;
    f.publish();
    f.prove();
    const auto bad = f.trace(Corruption{1, 1});
    f.commit(bad);
    const uint64_t id = f.challenge(f.trace(), bad.total_steps());
    expect_errc(Errc::NotYourTurn,
        [&] { f.chain->submit_tx(DisputeMove{"publisher", id, PostMidRoot{bad.root_at(1)}}); });
    expect_errc(Errc::NotYourTurn,
        [&] { f.chain->submit_tx(DisputeMove{"challenger", id, PostMidRoot{bad.root_at(1)}}); });
    expect_errc(Errc::InvalidTransition,
        [&] { f.chain->submit_tx(DisputeMove{"submitter", id + 5, PostMidRoot{bad.root_at(1)}}); });
}

TEST(Chain, AdvanceZeroRejected)
{
    Fixture f;
    expect_errc(Errc::InvalidTransition, [&] { f.chain->advance_blocks(0); });
}

TEST(Chain, EventJsonRoundTrip)
{
    Fixture f;
    f.publish();
    f.prove();
    const auto bad = f.trace(Corruption{2, 1});
    f.commit(bad);
    const uint64_t id = f.challenge(f.trace(), bad.total_steps());
    f.play(id, bad, f.trace());
    for (const auto& e : f.chain->read_log())
    {
        const auto j = to_json(e);
        EXPECT_EQ(to_json(event_from_json(j)).dump(), j.dump()) << e.kind;
    }
    expect_errc(Errc::ParseError, [&] { event_from_json(nlohmann::json{{"seq", "x"}}); });
}

TEST(Chain, ConfigJson)
{
    const ChainConfig d;
    EXPECT_EQ(chain_config_from_json(to_json(d)), d);
    EXPECT_EQ(chain_config_from_json(nlohmann::json::object()), d);
    const auto c = chain_config_from_json(nlohmann::json{{"challenge_period", 5}, {"submitter_bond", 7}});
    EXPECT_EQ(c.challenge_period, 5u);
    EXPECT_EQ(c.submitter_bond, 7);
    EXPECT_EQ(c.gas.zk_verify, 500);
    EXPECT_EQ(d.gas.publish + d.gas.zk_verify + d.gas.commit + d.gas.challenge + d.gas.bisect_move
            + d.gas.arbitration + d.gas.finalize,
        930);
    expect_errc(Errc::ParseError, [] { chain_config_from_json(nlohmann::json{{"challenger_bond", -1}}); });
    expect_errc(Errc::ParseError, [] { chain_config_from_json(nlohmann::json{{"challenge_period", 0}}); });
}

TEST(Chain, ShortWindowConfigHonoured)
{
    ChainConfig cfg;
    cfg.challenge_period = 3;
    Fixture f(cfg);
    f.publish();
    f.prove();
    f.commit(f.trace());
    f.chain->advance_blocks(2);
    EXPECT_EQ(f.status(1), SegmentStatus::Committed);
    f.chain->advance_blocks(1);
    EXPECT_EQ(f.status(1), SegmentStatus::Finalized);
}

TEST(Chain, NegativeGenesisRejected)
{
    expect_errc(Errc::InvalidTransition,
        [] { Chain(ChainConfig{}, {{"a", -1}}, std::make_shared<ZkVerifier>()); });
}
}  // namespace
}  // namespace oppai
