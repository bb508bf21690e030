// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include <gtest/gtest.h>

#include "eov/committer.hpp"
#include "eov/endorser.hpp"
#include "gen.hpp"
#include "oracle.hpp"

namespace eov {
namespace {

using namespace std::chrono_literals;

Bytes le64(std::uint64_t v)
{
    Bytes b(8);
    for (int i = 0; i < 8; ++i) {
        b[i] = static_cast<std::uint8_t>(v >> (8 * i));
    }
    return b;
}

struct EndorserFixture {
    bench::Identities ids = test::identities();
    Endorser endorser{ids.endorser_ids[0], ids.endorsers[0]};

    EndorserFixture()
    {
        endorser.load_genesis({{"A", {le64(100), {1, 0}}}, {"B", {le64(0), {1, 1}}}});
    }

    Block validated(const BlockHeader& prev, std::vector<Bytes> envs, std::vector<ValidationFlag> flags)
    {
        Block b = make_block(prev, std::move(envs), ids.orderer);
        b.flags = std::move(flags);
        return b;
    }
};

TEST(Balance, LittleEndianEightBytes)
{
    EXPECT_EQ(encode_balance(0x0102030405060708ull), le64(0x0102030405060708ull));
    EXPECT_EQ(decode_balance(le64(90)), 90u);
    EXPECT_THROW(decode_balance(Bytes(7)), Error);
}

TEST(Endorser, TransferReadsVersionsAndWritesNewBalances)
{
    EndorserFixture f;
    EndorsedTx tx = f.endorser.endorse({"A", "B", 10, 0}, f.ids.client_id, 1);
    EXPECT_EQ(tx.rwset.reads, (std::vector<ReadEntry>{{"A", {1, 0}}, {"B", {1, 1}}}));
    EXPECT_EQ(tx.rwset.writes, (std::vector<WriteEntry>{{"A", le64(90)}, {"B", le64(10)}}));
    EXPECT_EQ(tx.header.tx_id, make_tx_id(f.ids.client_id, 1));
    EXPECT_EQ(tx.header.creator, f.ids.client_id);
    EXPECT_EQ(tx.endorsement.endorser, f.ids.endorser_ids[0]);
    EXPECT_TRUE(f.ids.registry->verify(f.ids.endorser_ids[0], endorsement_message(encode_rwset(tx.rwset), 0),
                                       tx.endorsement.signature));
    // simulation leaves the replica alone
    EXPECT_EQ(decode_balance(f.endorser.state().get("A")->value), 100u);
}

TEST(Endorser, EnvelopeValidatesAtTheCommitter)
{
    EndorserFixture f;
    EndorsedTx tx = f.endorser.endorse({"A", "B", 10, 2900}, f.ids.client_id, 1);
    EXPECT_EQ(tx.padding_len, 2900u);
    Bytes env = tx.to_envelope(f.ids.client);
    EXPECT_EQ(oracle::validate(*f.ids.registry, f.ids.policy(), env), ValidationFlag::Valid);
    EXPECT_EQ(validate_tx(*f.ids.registry, f.ids.policy(), env), ValidationFlag::Valid);
}

TEST(Endorser, RejectsBadProposals)
{
    EndorserFixture f;
    auto code = [&](TransferProposal p) -> std::optional<Errc> {
        try {
            f.endorser.endorse(p, f.ids.client_id, 1);
        } catch (const Error& e) {
            return e.code();
        }
        return std::nullopt;
    };
    EXPECT_EQ(code({"A", "B", 101, 0}), Errc::EndorseInsufficientFunds);
    EXPECT_EQ(code({"B", "A", 1, 0}), Errc::EndorseInsufficientFunds);
    EXPECT_EQ(code({"A", "Z", 1, 0}), Errc::EndorseUnknownAccount);
    EXPECT_EQ(code({"Z", "A", 1, 0}), Errc::EndorseUnknownAccount);
    EXPECT_EQ(code({"A", "A", 1, 0}), Errc::InvalidArgument);
    EXPECT_EQ(code({"A", "B", 0, 0}), Errc::InvalidArgument);
}

TEST(Endorser, EndorsementIsIdempotent)
{
    EndorserFixture f;
    EndorsedTx a = f.endorser.endorse({"A", "B", 10, 0}, f.ids.client_id, 5);
    EndorsedTx b = f.endorser.endorse({"A", "B", 10, 0}, f.ids.client_id, 5);
    EXPECT_EQ(a.to_envelope(f.ids.client), b.to_envelope(f.ids.client));
}

TEST(Endorser, AppliesOnlyValidTxs)
{
    EndorserFixture f;
    Bytes t1 = f.endorser.endorse({"A", "B", 10, 0}, f.ids.client_id, 1).to_envelope(f.ids.client);
    Bytes t2 = f.endorser.endorse({"A", "B", 50, 0}, f.ids.client_id, 2).to_envelope(f.ids.client);
    std::vector<BlockEvent> events;
    f.endorser.on_applied([&](const BlockEvent& e) { events.push_back(e); });
    Block b1 = f.validated(make_genesis().header, {t1, t2}, {ValidationFlag::Valid, ValidationFlag::MvccConflict});
    f.endorser.apply_validated(b1);
    EXPECT_EQ(f.endorser.applied_height(), 1u);
    EXPECT_EQ(decode_balance(f.endorser.state().get("A")->value), 90u);
    EXPECT_EQ(decode_balance(f.endorser.state().get("B")->value), 10u);
    EXPECT_EQ(f.endorser.state().get("A")->version, (Version{1, 0}));
    ASSERT_EQ(events.size(), 1u);
    EXPECT_EQ(events[0].block_number, 1u);
    EXPECT_EQ(events[0].txs[1], (std::pair{make_tx_id(f.ids.client_id, 2), ValidationFlag::MvccConflict}));

    // re-applying is a no-op
    f.endorser.apply_validated(b1);
    EXPECT_EQ(decode_balance(f.endorser.state().get("A")->value), 90u);
    EXPECT_EQ(events.size(), 1u);

    // the next endorsement reads the new versions
    EndorsedTx t3 = f.endorser.endorse({"A", "B", 5, 0}, f.ids.client_id, 3);
    EXPECT_EQ(t3.rwset.reads[0].version, (Version{1, 0}));
}

TEST(Endorser, GapIsDetected)
{
    EndorserFixture f;
    Block b1 = f.validated(make_genesis().header, {}, {});
    Block b2 = f.validated(b1.header, {}, {});
    try {
        f.endorser.apply_validated(b2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::GapDetected);
    }
    f.endorser.apply_validated(b1);
    f.endorser.apply_validated(b2);
    EXPECT_EQ(f.endorser.applied_height(), 2u);
}

TEST(Endorser, UnvalidatedBlockRejected)
{
    EndorserFixture f;
    Block b1 = make_block(make_genesis().header, {test::make_tx(f.ids, 1, {})}, f.ids.orderer);
    EXPECT_THROW(f.endorser.apply_validated(b1), Error);
}

TEST(Endorser, ReplicaTracksSequentialExecution)
{
    // random transfers committed through the real committer; the endorser
    // replica, fed the validated blocks, must agree with a naive replay
    auto ids = test::identities();
    test::Gen g(test::base_seed() + 80);
    constexpr std::size_t kAccounts = 8;
    auto endorser = std::make_shared<Endorser>(ids.endorser_ids[0], ids.endorsers[0]);
    endorser->load_genesis(bench::genesis_accounts(kAccounts, 50));
    auto state = std::make_shared<MemoryStateStore>();
    state->load(bench::genesis_accounts(kAccounts, 50));
    PipelineConfig cfg;
    cfg.block_shepherds = 2;
    cfg.tx_validators = 2;
    Committer committer(ids.registry, cfg, ids.orderer_id, ids.policy(), state);
    committer.add_sink(std::make_shared<CallbackSink>(
        [&](std::uint64_t, const Bytes& b) { endorser->apply_validated(decode_block(b)); }));

    oracle::NaiveState naive;
    for (const auto& [k, e] : bench::genesis_accounts(kAccounts, 50)) {
        naive.entries[k] = e;
    }
    BlockHeader prev = make_genesis().header;
    std::uint64_t nonce = 0;
    for (std::uint64_t n = 1; n <= 100; ++n) {
        std::vector<Bytes> envs;
        std::vector<ReadWriteSet> rws;
        for (std::size_t i = g.range(0, 6); i > 0; --i) {
            std::size_t from = g.range(0, kAccounts - 1), to = (from + g.range(1, kAccounts - 1)) % kAccounts;
            try {
                auto tx = endorser->endorse({bench::account_key(from), bench::account_key(to), g.range(1, 30), 0},
                                            ids.client_id, ++nonce);
                rws.push_back(tx.rwset);
                envs.push_back(tx.to_envelope(ids.client));
            } catch (const Error& e) {
                ASSERT_EQ(e.code(), Errc::EndorseInsufficientFunds);
            }
        }
        Block b = make_block(prev, envs, ids.orderer);
        prev = b.header;
        ASSERT_TRUE(committer.deliver(encode_block(b)));
        committer.drain();
        naive.run_block(n, rws, std::vector<ValidationFlag>(rws.size(), ValidationFlag::Valid));
        ASSERT_EQ(endorser->state().dump(), naive.as_state_map()) << "block " << n;
    }
    EXPECT_EQ(bench::total_balance(state->dump()), 50u * kAccounts);
}

struct ServiceFixture {
    bench::Identities ids = test::identities();
    Transport transport;
    std::shared_ptr<Endorser> endorser = std::make_shared<Endorser>(ids.endorser_ids[0], ids.endorsers[0]);
    EndorserService service{transport, "inproc://e0", endorser};

    ServiceFixture()
    {
        endorser->load_genesis({{"A", {le64(100), {}}}, {"B", {le64(0), {}}}});
        service.start();
    }
    ~ServiceFixture() { service.stop(); }
};

TEST(EndorserService, EndorseOverTheWire)
{
    ServiceFixture f;
    EndorserClient c(f.transport, f.ids.endorser_ids[0]);
    EndorsedTx tx = c.endorse({"A", "B", 10, 64}, f.ids.client_id, 1);
    EXPECT_EQ(tx.padding_len, 64u);
    EXPECT_EQ(tx.to_envelope(f.ids.client),
              f.endorser->endorse({"A", "B", 10, 64}, f.ids.client_id, 1).to_envelope(f.ids.client));
    try {
        c.endorse({"A", "B", 1000, 0}, f.ids.client_id, 2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::EndorseInsufficientFunds);
    }
    // the channel survives an error reply
    EXPECT_EQ(c.endorse({"A", "B", 1, 0}, f.ids.client_id, 3).rwset.writes[1].value, le64(1));
}

TEST(EndorserService, PipelinedRequestsReplyInOrder)
{
    ServiceFixture f;
    EndorserClient c(f.transport, f.ids.endorser_ids[0]);
    constexpr int kN = 3000;
    std::thread sender([&] {
        for (int i = 1; i <= kN; ++i) {
            c.send({"A", "B", static_cast<std::uint64_t>(i % 7 + 1), static_cast<std::size_t>(i % 5)},
                   f.ids.client_id, static_cast<std::uint64_t>(i));
        }
    });
    for (int i = 1; i <= kN; ++i) {
        EndorsedTx tx = c.receive();
        ASSERT_EQ(tx.header.nonce, static_cast<std::uint64_t>(i));
        ASSERT_EQ(tx.padding_len, static_cast<std::size_t>(i % 5));
        ASSERT_EQ(decode_balance(tx.rwset.writes[1].value), static_cast<std::uint64_t>(i % 7 + 1));
    }
    sender.join();
}

TEST(EndorserService, ValidatedStreamAndEvents)
{
    ServiceFixture f;
    EventStream events(f.transport, f.ids.endorser_ids[0]);
    std::this_thread::sleep_for(20ms); // let the subscription register
    RemoteSink sink(f.transport, f.ids.endorser_ids[0], "committer");
    BlockHeader prev = make_genesis().header;
    std::uint64_t nonce = 0;
    for (std::uint64_t n = 1; n <= 5; ++n) {
        Bytes env = f.endorser->endorse({"A", "B", 1, 0}, f.ids.client_id, ++nonce).to_envelope(f.ids.client);
        Block b = make_block(prev, {env}, f.ids.orderer);
        b.flags = {ValidationFlag::Valid};
        prev = b.header;
        // wait for each block so the next endorsement reads fresh versions
        sink.publish(n, std::make_shared<const Bytes>(encode_block(b)));
        auto ev = events.next_for(5s);
        ASSERT_TRUE(ev.has_value());
        EXPECT_EQ(ev->block_number, n);
        ASSERT_EQ(ev->txs.size(), 1u);
        EXPECT_EQ(ev->txs[0].first, make_tx_id(f.ids.client_id, nonce));
        EXPECT_EQ(ev->txs[0].second, ValidationFlag::Valid);
    }
    EXPECT_EQ(f.endorser->applied_height(), 5u);
    EXPECT_EQ(decode_balance(f.endorser->state().get("B")->value), 5u);
}

} // namespace
} // namespace eov
