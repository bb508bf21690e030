// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include <gtest/gtest.h>

#include <fstream>
#include <thread>

#include "gen.hpp"

namespace eov {
namespace {

using test::Gen;
using test::TempDir;

class Backends : public ::testing::TestWithParam<StateBackend> {
protected:
    std::unique_ptr<StateStore> make() { return make_state_store(GetParam(), dir_ / "state"); }
    TempDir dir_;
};

TEST_P(Backends, FreshStoreIsEmpty)
{
    auto s = make();
    EXPECT_FALSE(s->get("k").has_value());
    EXPECT_EQ(s->size(), 0u);
}

TEST_P(Backends, PutThenGet)
{
    auto s = make();
    std::vector<WriteEntry> w{{"k", to_bytes("v")}};
    s->apply_writes(w, {3, 2});
    auto e = s->get("k");
    ASSERT_TRUE(e.has_value());
    EXPECT_EQ(e->value, to_bytes("v"));
    EXPECT_EQ(e->version, (Version{3, 2}));
}

TEST_P(Backends, BatchSharesVersionAndLastWriteWins)
{
    auto s = make();
    std::vector<WriteEntry> w{{"a", to_bytes("1")}, {"b", to_bytes("2")}};
    s->apply_writes(w, {1, 0});
    EXPECT_EQ(s->get("a")->version, (Version{1, 0}));
    EXPECT_EQ(s->get("b")->version, (Version{1, 0}));
    std::vector<WriteEntry> w2{{"a", to_bytes("3")}};
    s->apply_writes(w2, {2, 5});
    EXPECT_EQ(s->get("a")->value, to_bytes("3"));
    EXPECT_EQ(s->get("a")->version, (Version{2, 5}));
    EXPECT_EQ(s->size(), 2u);
}

TEST_P(Backends, EmptySnapshotHasZeroEntries)
{
    auto s = make();
    Bytes snap = s->snapshot();
    EXPECT_EQ(snap, Bytes(8, 0));
    EXPECT_TRUE(decode_snapshot(snap).empty());
}

TEST_P(Backends, SnapshotRestoreOfThousandEntries)
{
    Gen g(test::base_seed() + 30);
    auto s = make();
    StateMap expect;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        std::string k = g.str(40, 1) + std::to_string(i);
        Bytes v = g.bytes(100);
        Version ver = g.version();
        std::vector<WriteEntry> w{{k, v}};
        s->apply_writes(w, ver);
        expect[k] = {v, ver};
    }
    Bytes snap = s->snapshot();
    auto other = make_state_store(GetParam(), dir_ / "other");
    other->restore(snap);
    EXPECT_EQ(other->dump(), expect);
    EXPECT_EQ(decode_snapshot(snap), expect);
    EXPECT_EQ(encode_snapshot(expect), snap);
}

TEST_P(Backends, TruncatedSnapshotIsMalformedAndLeavesStoreAlone)
{
    auto s = make();
    StateMap m{{"a", {to_bytes("1"), {1, 0}}}, {"b", {to_bytes("2"), {1, 1}}}};
    Bytes snap = encode_snapshot(m);
    std::vector<WriteEntry> w{{"z", to_bytes("keep")}};
    s->apply_writes(w, {9, 9});
    for (std::size_t cut : {std::size_t{0}, std::size_t{5}, snap.size() / 2, snap.size() - 1}) {
        try {
            s->restore(ByteView(snap.data(), cut));
            FAIL() << "restored a " << cut << "-byte prefix";
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), Errc::MalformedFrame);
        }
        EXPECT_EQ(s->size(), 1u);
        EXPECT_EQ(s->get("z")->value, to_bytes("keep"));
    }
}

TEST_P(Backends, ConcurrentReadersNeverSeeTornEntries)
{
    auto s = make();
    // the value always encodes its own version, so a torn read shows up as a mismatch
    auto value_for = [](Version v) {
        Bytes b;
        ByteWriter(b).u64(v.block_num);
        ByteWriter(b).u32(v.tx_num);
        b.resize(200, static_cast<std::uint8_t>(v.block_num));
        return b;
    };
    std::vector<WriteEntry> w{{"hot", value_for({0, 0})}};
    s->apply_writes(w, {0, 0});
    std::atomic<bool> done{false};
    std::atomic<int> bad{0};
    std::vector<std::thread> readers;
    for (int r = 0; r < 3; ++r) {
        readers.emplace_back([&] {
            while (!done) {
                auto e = s->get("hot");
                if (!e || e->value != value_for(e->version)) {
                    ++bad;
                }
            }
        });
    }
    for (std::uint64_t b = 1; b <= 2000; ++b) {
        Version v{b, static_cast<std::uint32_t>(b % 7)};
        std::vector<WriteEntry> ww{{"hot", value_for(v)}};
        s->apply_writes(ww, v);
        if (b % 100 == 0) {
            s->sync();
        }
    }
    done = true;
    for (auto& t : readers) {
        t.join();
    }
    EXPECT_EQ(bad.load(), 0);
}

INSTANTIATE_TEST_SUITE_P(StateStore, Backends, ::testing::Values(StateBackend::Memory, StateBackend::Durable),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(StateStore, BackendsAgreeOnRandomInterleavings)
{
    Gen g(test::base_seed() + 31);
    TempDir dir;
    MemoryStateStore mem;
    DurableStateStore dur(dir / "dur");
    std::map<std::string, StateEntry> model;
    std::vector<std::string> keys;
    for (int i = 0; i < 300; ++i) {
        keys.push_back(g.str(30, 1));
    }
    for (std::uint64_t i = 0; i < 10'000; ++i) {
        std::vector<WriteEntry> w;
        std::set<std::string> used;
        for (std::size_t n = g.range(1, 3); n > 0; --n) {
            const std::string& k = keys[g.range(0, keys.size() - 1)];
            if (used.insert(k).second) {
                w.push_back({k, g.bytes(50)});
            }
        }
        Version v{i / 10 + 1, static_cast<std::uint32_t>(i % 10)};
        mem.apply_writes(w, v);
        dur.apply_writes(w, v);
        for (const auto& e : w) {
            model[e.key] = {e.value, v};
        }
        if (i % 10 == 9) {
            dur.sync();
        }
        if (g.coin(0.05)) {
            const std::string& k = keys[g.range(0, keys.size() - 1)];
            ASSERT_EQ(mem.get(k), dur.get(k));
        }
    }
    StateMap expect(model.begin(), model.end());
    EXPECT_EQ(mem.dump(), expect);
    EXPECT_EQ(dur.dump(), expect);
    for (const auto& k : keys) {
        ASSERT_EQ(mem.get(k), dur.get(k)) << k;
    }
}

TEST(StateStore, VersionsIncreaseMonotonicallyUnderCommitOrder)
{
    Gen g(test::base_seed() + 32);
    MemoryStateStore s;
    std::map<std::string, Version> last;
    for (std::uint64_t b = 1; b <= 200; ++b) {
        for (std::uint32_t t = 0; t < 5; ++t) {
            std::string k = "k" + std::to_string(g.range(0, 20));
            std::vector<WriteEntry> w{{k, g.bytes(8)}};
            s.apply_writes(w, {b, t});
            auto v = s.get(k)->version;
            if (last.count(k)) {
                ASSERT_GT(v, last[k]);
            }
            last[k] = v;
        }
    }
}

TEST(DurableStateStore, ReopenReplaysSyncedWrites)
{
    TempDir dir;
    StateMap expect;
    {
        DurableStateStore s(dir / "s");
        for (std::uint64_t i = 0; i < 500; ++i) {
            std::string k = "key" + std::to_string(i % 120);
            Bytes v = to_bytes("value" + std::to_string(i));
            std::vector<WriteEntry> w{{k, v}};
            s.apply_writes(w, {i + 1, 0});
            expect[k] = {v, {i + 1, 0}};
        }
        s.sync();
    }
    DurableStateStore again(dir / "s");
    EXPECT_EQ(again.dump(), expect);
}

TEST(DurableStateStore, TornTailIsDroppedOnReopen)
{
    TempDir dir;
    {
        DurableStateStore s(dir / "s");
        std::vector<WriteEntry> w{{"a", to_bytes("1")}};
        s.apply_writes(w, {1, 0});
        s.sync();
    }
    // append half a record by hand
    for (const auto& f : std::filesystem::directory_iterator(dir / "s")) {
        std::ofstream out(f.path(), std::ios::app | std::ios::binary);
        out.write("\x10\x00\x00\x00\xff\xff", 6);
    }
    DurableStateStore again(dir / "s");
    ASSERT_EQ(again.size(), 1u);
    EXPECT_EQ(again.get("a")->value, to_bytes("1"));
    std::vector<WriteEntry> w{{"b", to_bytes("2")}};
    again.apply_writes(w, {2, 0});
    again.sync();
    DurableStateStore third(dir / "s");
    EXPECT_EQ(third.size(), 2u);
}

TEST(DurableStateStore, CompactionKeepsLatestValues)
{
    TempDir dir;
    DurableStateStore s(dir / "s");
    for (std::uint64_t i = 0; i < 10'000; ++i) {
        std::vector<WriteEntry> w{{"k" + std::to_string(i % 10), Bytes(1000, static_cast<std::uint8_t>(i))}};
        s.apply_writes(w, {i + 1, 0});
        if (i % 50 == 49) {
            s.sync();
        }
    }
    s.sync();
    // about 10 MB written for 10 live keys; compaction starts once the dead
    // records pass a few MB
    EXPECT_LT(s.log_bytes(), 6u << 20);
    for (int k = 0; k < 10; ++k) {
        EXPECT_EQ(s.get("k" + std::to_string(k))->version.block_num, 9991u + k);
    }
}

TEST(StateStore, BackendNames)
{
    EXPECT_EQ(parse_state_backend("memory"), StateBackend::Memory);
    EXPECT_EQ(parse_state_backend("durable"), StateBackend::Durable);
    EXPECT_THROW(parse_state_backend("disk"), Error);
}

} // namespace
} // namespace eov
