// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include <gtest/gtest.h>

#include "eov/blockstore.hpp"
#include "eov/validated.hpp"
#include "gen.hpp"

namespace eov {
namespace {

using namespace std::chrono_literals;
using test::TempDir;

// Genesis plus `count` validated blocks of a few txs each.
std::vector<Block> chain(const bench::Identities& ids, std::size_t count, std::uint64_t first_nonce = 0)
{
    std::vector<Block> out{make_genesis()};
    std::uint64_t nonce = first_nonce;
    for (std::size_t i = 1; i <= count; ++i) {
        std::vector<Bytes> envs;
        for (std::size_t t = 0; t < 1 + i % 3; ++t) {
            envs.push_back(test::make_tx(ids, ++nonce, {{}, {{"k" + std::to_string(t), {1}}}}));
        }
        Block b = make_block(out.back().header, std::move(envs), ids.orderer);
        b.flags.assign(b.envelopes.size(), ValidationFlag::Valid);
        b.flags.back() = ValidationFlag::MvccConflict;
        out.push_back(std::move(b));
    }
    return out;
}

BlockStoreOptions small_segments()
{
    BlockStoreOptions o;
    o.blocks_per_segment = 3;
    o.fsync = false;
    return o;
}

TEST(BlockStore, AppendAndReadBack)
{
    auto ids = test::identities();
    TempDir dir;
    auto blocks = chain(ids, 9);
    BlockStore store(dir.path(), small_segments());
    EXPECT_TRUE(store.empty());
    for (const auto& b : blocks) {
        store.append(b);
    }
    EXPECT_EQ(store.next_number(), 10u);
    for (std::uint64_t n = 0; n < 10; ++n) {
        EXPECT_EQ(store.get_block(n), blocks[n]) << n;
        EXPECT_EQ(store.get_block_bytes(n), encode_block(blocks[n]));
    }
    EXPECT_TRUE(store.verify_chain().ok);
    EXPECT_EQ(store.verify_chain().blocks, 10u);
}

TEST(BlockStore, SurvivesReopen)
{
    auto ids = test::identities();
    TempDir dir;
    auto blocks = chain(ids, 20);
    {
        BlockStore store(dir.path(), small_segments());
        for (const auto& b : blocks) {
            store.append(b);
        }
    }
    BlockStore again(dir.path(), small_segments());
    EXPECT_EQ(again.next_number(), 21u);
    EXPECT_EQ(again.get_block(17), blocks[17]);
    EXPECT_EQ(again.get_tx(peek_tx_id(blocks[17].envelopes[1])), (TxLocation{17, 1}));
}

TEST(BlockStore, GapAndMissingLookups)
{
    auto ids = test::identities();
    TempDir dir;
    auto blocks = chain(ids, 3);
    BlockStore store(dir.path());
    auto code = [](auto&& f) -> std::optional<Errc> {
        try {
            f();
        } catch (const Error& e) {
            return e.code();
        }
        return std::nullopt;
    };
    EXPECT_EQ(code([&] { store.append(blocks[1]); }), Errc::GapDetected);
    store.append(blocks[0]);
    EXPECT_EQ(code([&] { store.append(blocks[2]); }), Errc::GapDetected);
    EXPECT_EQ(code([&] { store.get_block(1); }), Errc::NotFound);
    EXPECT_EQ(code([&] { store.get_tx(std::string(64, 'a')); }), Errc::NotFound);
    EXPECT_EQ(code([&] { store.append_encoded(2, encode_block(blocks[1])); }), Errc::InvalidArgument);
}

TEST(BlockStore, TxLookupFindsEveryTransaction)
{
    auto ids = test::identities();
    TempDir dir;
    auto blocks = chain(ids, 12);
    BlockStore store(dir.path(), small_segments());
    for (const auto& b : blocks) {
        store.append(b);
    }
    for (std::uint64_t n = 1; n < blocks.size(); ++n) {
        for (std::uint32_t i = 0; i < blocks[n].envelopes.size(); ++i) {
            EXPECT_EQ(store.get_tx(peek_tx_id(blocks[n].envelopes[i])), (TxLocation{n, i}));
        }
    }
}

TEST(BlockStore, BrokenLinkIsReported)
{
    auto ids = test::identities();
    TempDir dir;
    auto blocks = chain(ids, 6);
    blocks[4].header.prev_hash[3] ^= 1;
    BlockStore store(dir.path());
    for (const auto& b : blocks) {
        store.append(b);
    }
    ChainScan scan = store.verify_chain();
    EXPECT_FALSE(scan.ok);
    EXPECT_EQ(scan.first_bad, 4u);
}

class CrashPoints : public ::testing::TestWithParam<CrashPoint> {};

TEST_P(CrashPoints, ReopenIsConsistent)
{
    auto ids = test::identities();
    TempDir dir;
    auto blocks = chain(ids, 8);
    {
        BlockStore store(dir.path(), small_segments());
        for (std::size_t n = 0; n < 6; ++n) {
            store.append(blocks[n]);
        }
        store.inject_crash(GetParam());
        try {
            store.append(blocks[6]);
            FAIL() << "no crash";
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), Errc::SimulatedCrash);
        }
    }
    BlockStore store(dir.path(), small_segments());
    // a torn record is lost; once the record itself is durable, recovery
    // rebuilds the indexes from it
    std::uint64_t want = GetParam() == CrashPoint::TornSegmentWrite ? 6 : 7;
    ASSERT_EQ(store.next_number(), want);
    EXPECT_TRUE(store.verify_chain().ok);
    for (std::uint64_t n = 0; n < want; ++n) {
        EXPECT_EQ(store.get_block(n), blocks[n]);
    }
    if (want == 7) {
        EXPECT_EQ(store.get_tx(peek_tx_id(blocks[6].envelopes[0])), (TxLocation{6, 0}));
    }
    for (std::uint64_t n = want; n < blocks.size(); ++n) {
        store.append(blocks[n]);
    }
    EXPECT_EQ(store.next_number(), blocks.size());
    EXPECT_TRUE(store.verify_chain().ok);
    EXPECT_EQ(store.get_tx(peek_tx_id(blocks[8].envelopes[0])), (TxLocation{8, 0}));
}

INSTANTIATE_TEST_SUITE_P(BlockStore, CrashPoints,
                         ::testing::Values(CrashPoint::TornSegmentWrite, CrashPoint::AfterSegmentWrite,
                                           CrashPoint::AfterIndexWrite),
                         [](const auto& info) {
                             switch (info.param) {
                             case CrashPoint::TornSegmentWrite: return std::string("TornSegmentWrite");
                             case CrashPoint::AfterSegmentWrite: return std::string("AfterSegmentWrite");
                             default: return std::string("AfterIndexWrite");
                             }
                         });

TEST(BlockStore, RandomCrashSequencesNeverLoseDurableBlocks)
{
    auto ids = test::identities();
    test::Gen g(test::base_seed() + 90);
    for (int trial = 0; trial < 30; ++trial) {
        TempDir dir;
        auto blocks = chain(ids, 25, static_cast<std::uint64_t>(trial) * 1000);
        std::uint64_t durable = 0; // blocks known to be fully on disk
        while (durable < blocks.size()) {
            BlockStore store(dir.path(), small_segments());
            std::uint64_t have = store.next_number();
            ASSERT_GE(have, durable) << "trial " << trial;
            ASSERT_LE(have, durable + 1);
            ASSERT_TRUE(store.verify_chain().ok);
            durable = have;
            std::uint64_t upto = std::min<std::uint64_t>(blocks.size(), durable + g.range(1, 6));
            try {
                for (std::uint64_t n = durable; n < upto; ++n) {
                    if (g.coin(0.3)) {
                        store.inject_crash(static_cast<CrashPoint>(g.range(1, 3)));
                    }
                    store.append(blocks[n]);
                    durable = n + 1;
                }
            } catch (const Error& e) {
                ASSERT_EQ(e.code(), Errc::SimulatedCrash);
            }
        }
        BlockStore final_store(dir.path(), small_segments());
        ASSERT_EQ(final_store.next_number(), blocks.size());
        for (std::uint64_t n = 0; n < blocks.size(); ++n) {
            ASSERT_EQ(final_store.get_block(n), blocks[n]);
            for (std::uint32_t i = 0; i < blocks[n].envelopes.size(); ++i) {
                ASSERT_EQ(final_store.get_tx(peek_tx_id(blocks[n].envelopes[i])), (TxLocation{n, i}));
            }
        }
    }
}

TEST(BlockStore, StateSnapshotsKeepTheLatest)
{
    TempDir dir;
    BlockStore store(dir.path());
    EXPECT_FALSE(store.latest_state_snapshot().has_value());
    StateMap m{{"a", {to_bytes("1"), {3, 0}}}};
    store.save_state_snapshot(3, encode_snapshot(m));
    store.save_state_snapshot(10, encode_snapshot({}));
    store.save_state_snapshot(7, encode_snapshot(m));
    auto latest = store.latest_state_snapshot();
    ASSERT_TRUE(latest.has_value());
    EXPECT_EQ(latest->first, 10u);
    EXPECT_TRUE(decode_snapshot(latest->second).empty());
}

struct StoreService {
    bench::Identities ids = test::identities();
    Transport transport;
    TempDir dir;
    std::shared_ptr<BlockStore> store = std::make_shared<BlockStore>(dir.path());
    BlockStoreService service{transport, "store", "inproc://store", store};

    StoreService()
    {
        service.start(); // the service writes genesis into an empty store
        EXPECT_EQ(store->next_number(), 1u);
    }
    ~StoreService() { service.stop(); }
};

TEST(BlockStoreService, ReceivesValidatedStreamAndAnswersQueries)
{
    StoreService f;
    auto blocks = chain(f.ids, 10);
    {
        RemoteSink sink(f.transport, "store", "committer");
        for (std::uint64_t n = 1; n < blocks.size(); ++n) {
            sink.publish(n, std::make_shared<const Bytes>(encode_block(blocks[n])));
        }
        sink.flush(10s);
    }
    auto deadline = std::chrono::steady_clock::now() + 10s;
    while (f.store->next_number() < blocks.size() && std::chrono::steady_clock::now() < deadline) {
        std::this_thread::sleep_for(5ms);
    }
    ASSERT_EQ(f.store->next_number(), blocks.size());

    BlockStoreClient client(f.transport, "store");
    EXPECT_EQ(client.get_block(5), blocks[5]);
    EXPECT_EQ(client.get_tx(peek_tx_id(blocks[8].envelopes[1])), (TxLocation{8, 1}));
    EXPECT_THROW(client.get_block(99), Error);
    try {
        client.get_tx(std::string(64, 'f'));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::NotFound);
    }
    Bytes snap = encode_snapshot({{"x", {to_bytes("y"), {9, 0}}}});
    client.put_state_snapshot(9, snap);
    EXPECT_EQ(f.store->latest_state_snapshot()->second, snap);
}

TEST(BlockStoreService, SinkResumesFromWhatTheStoreHas)
{
    // the store already holds blocks 1..4; a fresh sink publishing from 1
    // must not create duplicates or gaps
    StoreService f;
    auto blocks = chain(f.ids, 8);
    for (std::uint64_t n = 1; n <= 4; ++n) {
        f.store->append(blocks[n]);
    }
    RemoteSink sink(f.transport, "store", "committer");
    for (std::uint64_t n = 1; n < blocks.size(); ++n) {
        sink.publish(n, std::make_shared<const Bytes>(encode_block(blocks[n])));
    }
    sink.flush(10s);
    auto deadline = std::chrono::steady_clock::now() + 10s;
    while (f.store->next_number() < blocks.size() && std::chrono::steady_clock::now() < deadline) {
        std::this_thread::sleep_for(5ms);
    }
    EXPECT_EQ(f.store->next_number(), blocks.size());
    EXPECT_TRUE(f.store->verify_chain().ok);
}

TEST(RemoteSink, ReconnectsWhenTheReceiverComesBack)
{
    auto ids = test::identities();
    Transport transport;
    TempDir dir;
    auto store = std::make_shared<BlockStore>(dir.path());
    store->append(make_genesis());
    auto blocks = chain(ids, 6);
    RemoteSink sink(transport, "store", "committer");
    for (std::uint64_t n = 1; n <= 3; ++n) {
        sink.publish(n, std::make_shared<const Bytes>(encode_block(blocks[n])));
    }
    std::this_thread::sleep_for(50ms); // nothing listening yet
    BlockStoreService service(transport, "store", "inproc://store", store);
    service.start();
    for (std::uint64_t n = 4; n < blocks.size(); ++n) {
        sink.publish(n, std::make_shared<const Bytes>(encode_block(blocks[n])));
    }
    auto deadline = std::chrono::steady_clock::now() + 15s;
    while (store->next_number() < blocks.size() && std::chrono::steady_clock::now() < deadline) {
        std::this_thread::sleep_for(5ms);
    }
    EXPECT_EQ(store->next_number(), blocks.size());
    EXPECT_GE(sink.reconnects(), 1u);
    service.stop();
}

} // namespace
} // namespace eov
