// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include <gtest/gtest.h>

#include <thread>

#include "eov/transport.hpp"
#include "gen.hpp"

namespace eov {
namespace {

// A connected pair through the address book, for either mode.
struct Pair {
    Transport transport;
    std::unique_ptr<Listener> listener;
    std::unique_ptr<Channel> client;
    std::unique_ptr<Channel> server;

    explicit Pair(const std::string& mode)
    {
        listener = transport.listen("srv", mode == "tcp" ? "tcp://127.0.0.1:0" : "inproc://srv");
        std::thread t([&] { server = listener->accept(); });
        client = transport.connect("srv");
        t.join();
    }
};

class Modes : public ::testing::TestWithParam<std::string> {};

TEST_P(Modes, ThreeMessagesInOrder)
{
    Pair p(GetParam());
    p.client->send(7, to_bytes("one"));
    p.client->send(8, to_bytes("two"));
    p.client->send(9, to_bytes("three"));
    for (auto [type, body] : {std::pair{7, "one"}, {8, "two"}, {9, "three"}}) {
        Message m = p.server->recv();
        EXPECT_EQ(m.type, type);
        EXPECT_EQ(m.body, to_bytes(body));
    }
}

TEST_P(Modes, TenMegabyteBodyArrivesIntact)
{
    Pair p(GetParam());
    test::Gen g(test::base_seed() + 40);
    Bytes big(10u << 20);
    for (auto& b : big) {
        b = static_cast<std::uint8_t>(g.u64());
    }
    std::thread sender([&] { p.client->send(MsgType::BlockMsg, big); });
    Message m = p.server->recv();
    sender.join();
    EXPECT_EQ(m.kind(), MsgType::BlockMsg);
    EXPECT_EQ(m.body, big);
}

TEST_P(Modes, HundredThousandRandomMessagesBothDirections)
{
    Pair p(GetParam());
    constexpr int kCount = 100'000;
    std::uint64_t seed = test::base_seed() + 41;
    auto make = [](test::Gen& g) {
        Message m;
        m.type = static_cast<std::uint16_t>(g.u64());
        m.body = g.bytes(g.coin(0.01) ? 8192 : 64);
        return m;
    };
    std::thread echo([&] {
        for (int i = 0; i < kCount; ++i) {
            Message m = p.server->recv();
            p.server->send(m.type, m.body);
        }
    });
    std::thread sender([&] {
        test::Gen g(seed);
        for (int i = 0; i < kCount; ++i) {
            Message m = make(g);
            p.client->send(m.type, m.body);
        }
    });
    test::Gen g(seed);
    for (int i = 0; i < kCount; ++i) {
        Message want = make(g);
        Message got = p.client->recv();
        ASSERT_EQ(got.type, want.type) << i;
        ASSERT_EQ(got.body, want.body) << i;
    }
    sender.join();
    echo.join();
}

TEST_P(Modes, CloseEndsBlockedReceiveAfterDraining)
{
    Pair p(GetParam());
    p.client->send(1, to_bytes("last"));
    p.client->close();
    EXPECT_EQ(p.server->recv().body, to_bytes("last"));
    EXPECT_THROW(
        {
            try {
                p.server->recv();
            } catch (const Error& e) {
                EXPECT_EQ(e.code(), Errc::ChannelClosed);
                throw;
            }
        },
        Error);
}

TEST_P(Modes, RecvForTimesOut)
{
    Pair p(GetParam());
    EXPECT_FALSE(p.server->recv_for(std::chrono::milliseconds(20)).has_value());
    p.client->send(3, {});
    auto m = p.server->recv_for(std::chrono::milliseconds(2000));
    ASSERT_TRUE(m.has_value());
    EXPECT_EQ(m->type, 3);
    EXPECT_TRUE(m->body.empty());
}

INSTANTIATE_TEST_SUITE_P(Transport, Modes, ::testing::Values("inproc", "tcp"));

TEST(Transport, UnknownPeerIsUnreachable)
{
    Transport t;
    try {
        t.connect("ghost");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::PeerUnreachable);
    }
}

TEST(Transport, RefusedTcpConnectionIsUnreachable)
{
    Transport t;
    std::string addr;
    {
        auto l = t.listen("gone", "tcp://127.0.0.1:0");
        addr = l->address();
        l->close();
    }
    t.set_address("gone", addr);
    EXPECT_THROW(t.connect("gone"), Error);
}

TEST(Transport, FrameLayout)
{
    Bytes f = encode_frame(0x0102, to_bytes("xyz"));
    EXPECT_EQ(f, (Bytes{0x02, 0x01, 3, 0, 0, 0, 'x', 'y', 'z'}));
}

TEST(Transport, TcpListenerOnPortZeroPublishesBoundPort)
{
    Transport t;
    auto l = t.listen("n", "tcp://127.0.0.1:0");
    auto addr = t.address_of("n");
    ASSERT_TRUE(addr.has_value());
    EXPECT_EQ(*addr, l->address());
    EXPECT_NE(addr->substr(addr->size() - 2), ":0");
}

} // namespace
} // namespace eov
