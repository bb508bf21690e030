// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include <gtest/gtest.h>

#include "gen.hpp"
#include "oracle.hpp"

namespace eov {
namespace {

using test::Gen;

Signer test_signer()
{
    return Signer(derive_node_keypair(SignatureScheme::Mac, 1, "c1"));
}

TxHeader header_c1()
{
    TxHeader h;
    h.creator = "c1";
    h.nonce = 7;
    h.tx_id = make_tx_id(h.creator, h.nonce);
    h.channel_id = "ch0";
    return h;
}

TEST(Wire, MinimalEnvelopeRoundTrips)
{
    TxHeader h = header_c1();
    ReadWriteSet rw;
    std::vector<Endorsement> es{{"e1", to_bytes("sig")}};
    Signer s = test_signer();
    Bytes env = encode_envelope(h, rw, es, 0, s);

    RawEnvelope raw = decode_envelope(env);
    PayloadLayer p = decode_payload(raw.payload_bytes);
    EXPECT_EQ(decode_header(p.header_bytes), h);
    EXPECT_EQ(decode_rwset(p.rwset_bytes), rw);
    EXPECT_EQ(decode_endorsements(p.endorsements_bytes), es);
    EXPECT_TRUE(p.padding.empty());
    EXPECT_TRUE(verify_signature(SignatureScheme::Mac, s.public_key(), raw.payload_bytes, raw.signature));
}

TEST(Wire, PaddingGrowsPayloadByExactlyItsLength)
{
    TxHeader h = header_c1();
    std::vector<Endorsement> es{{"e1", Bytes(64, 1)}};
    Signer s = test_signer();
    auto p0 = decode_envelope(encode_envelope(h, {}, es, 0, s)).payload_bytes;
    auto p1 = decode_envelope(encode_envelope(h, {}, es, 2900, s)).payload_bytes;
    EXPECT_EQ(p1.size(), p0.size() + 2900);
}

TEST(Wire, EncodingIsDeterministic)
{
    Gen g(test::base_seed());
    TxHeader h = g.header();
    ReadWriteSet rw = g.rwset();
    auto es = g.endorsements();
    Signer s = test_signer();
    EXPECT_EQ(encode_envelope(h, rw, es, 17, s), encode_envelope(h, rw, es, 17, s));
}

TEST(Wire, EnvelopeLayerLeavesPayloadOpaque)
{
    TxHeader h = header_c1();
    std::vector<Endorsement> es{{"e1", to_bytes("sig")}};
    Signer s = test_signer();
    Bytes env = encode_envelope(h, {}, es, 5, s);
    auto layer = decode_layer(env, Layer::Envelope);
    ASSERT_TRUE(std::holds_alternative<RawEnvelope>(layer));
    const auto& raw = std::get<RawEnvelope>(layer);
    EXPECT_EQ(raw.signature, s.sign(raw.payload_bytes));
    EXPECT_EQ(raw.payload_bytes, oracle::frame_payload(h, {}, es, 5));
}

TEST(Wire, TruncatedBufferIsMalformedFrame)
{
    Bytes env = encode_envelope(header_c1(), {}, std::vector<Endorsement>{{"e1", {}}}, 0, test_signer());
    for (std::size_t cut = 0; cut < env.size(); ++cut) {
        ByteView part(env.data(), cut);
        try {
            decode_envelope(part);
            FAIL() << "decoded a " << cut << "-byte prefix";
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), Errc::MalformedFrame) << "cut at " << cut;
        }
    }
}

TEST(Wire, TrailingBytesAreBadMagic)
{
    Bytes env = encode_envelope(header_c1(), {}, std::vector<Endorsement>{{"e1", {}}}, 0, test_signer());
    env.push_back(0);
    try {
        decode_envelope(env);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::BadMagic);
    }
}

TEST(Wire, AllLayersMatchConstructionInputsOnRandomEnvelopes)
{
    Gen g(test::base_seed() + 1);
    Signer s = test_signer();
    for (int i = 0; i < 1000; ++i) {
        TxHeader h = g.header();
        ReadWriteSet rw = g.rwset();
        auto es = g.endorsements();
        std::size_t pad = g.range(0, 300);
        Bytes env = encode_envelope(h, rw, es, pad, s);

        // bytes match a hand-written framing of the same fields
        Bytes payload = oracle::frame_payload(h, rw, es, pad);
        ASSERT_EQ(std::get<RawEnvelope>(decode_layer(env, Layer::Envelope)).payload_bytes, payload);
        ASSERT_EQ(encoded_payload_size(oracle::frame_header(h).size(), oracle::frame_rwset(rw).size(),
                                       oracle::frame_endorsements(es).size(), pad),
                  payload.size());

        auto pl = std::get<PayloadLayer>(decode_layer(payload, Layer::Payload));
        ASSERT_EQ(std::get<TxHeader>(decode_layer(pl.header_bytes, Layer::Header)), h);
        ASSERT_EQ(std::get<ReadWriteSet>(decode_layer(pl.rwset_bytes, Layer::RWSet)), rw);
        ASSERT_EQ(std::get<std::vector<Endorsement>>(decode_layer(pl.endorsements_bytes, Layer::Endorsements)), es);
        ASSERT_EQ(pl.padding, Bytes(pad, 0));
        ASSERT_EQ(peek_tx_id(env), h.tx_id);
        ASSERT_EQ(peek_header(env), h);
    }
}

TEST(Wire, RoundTripFuzzTenThousandCases)
{
    Gen g(test::base_seed() + 2);
    Signer s = test_signer();
    for (int i = 0; i < 10'000; ++i) {
        TxHeader h = g.header();
        ReadWriteSet rw = g.rwset(8, 8);
        auto es = g.endorsements(3);
        std::size_t pad = g.range(0, 64);
        Bytes env = encode_envelope(h, rw, es, pad, s);
        auto parsed = oracle::parse_tx(env);
        ASSERT_TRUE(parsed.has_value());
        ASSERT_EQ(parsed->header, h);
        ASSERT_EQ(parsed->rwset, rw);
        ASSERT_EQ(parsed->endorsements, es);

        auto raw = decode_envelope(env);
        auto pl = decode_payload(raw.payload_bytes);
        ASSERT_EQ(decode_header(pl.header_bytes), h);
        ASSERT_EQ(decode_rwset(pl.rwset_bytes), rw);
        ASSERT_EQ(decode_endorsements(pl.endorsements_bytes), es);
        ASSERT_EQ(encode_rwset(rw), pl.rwset_bytes);
    }
}

TEST(Wire, RandomGarbageNeverCrashesTheDecoders)
{
    Gen g(test::base_seed() + 3);
    for (int i = 0; i < 10'000; ++i) {
        Bytes junk = g.bytes(96);
        for (Layer l : {Layer::Envelope, Layer::Payload, Layer::Header, Layer::RWSet, Layer::Endorsements}) {
            try {
                decode_layer(junk, l);
            } catch (const Error& e) {
                ASSERT_TRUE(e.code() == Errc::MalformedFrame || e.code() == Errc::BadMagic);
            }
        }
    }
}

TEST(Wire, TxIdIsHexSha256OfCreatorAndNonce)
{
    Bytes in = to_bytes("client-9");
    for (int i = 0; i < 8; ++i) {
        in.push_back(static_cast<std::uint8_t>(0x1122334455667788ull >> (8 * i)));
    }
    EXPECT_EQ(make_tx_id("client-9", 0x1122334455667788ull), oracle::hex(oracle::sha256(in)));
    EXPECT_EQ(make_tx_id("c", 1).size(), kTxIdLength);
}

TEST(Wire, UniqueKeyCheck)
{
    ReadWriteSet rw{{{"a", {}}, {"b", {}}}, {{"a", {}}}};
    EXPECT_TRUE(has_unique_keys(rw));
    rw.reads.push_back({"a", {1, 0}});
    EXPECT_FALSE(has_unique_keys(rw));
}

TEST(ContentHash, EmptyInputIsTheSha256Constant)
{
    EXPECT_EQ(to_hex(content_hash(ByteView{})),
              "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(ContentHash, StableAcrossCalls)
{
    Bytes x = to_bytes("block bytes");
    EXPECT_EQ(content_hash(x), content_hash(x));
    EXPECT_EQ(content_hash(x), oracle::sha256(x));
    EXPECT_EQ(content_hash({as_bytes("block "), as_bytes("bytes")}), content_hash(x));
}

TEST(ContentHash, SingleBitFlipAlwaysChangesDigest)
{
    Gen g(test::base_seed() + 4);
    int changed = 0;
    for (int i = 0; i < 1000; ++i) {
        Bytes x = g.bytes(256);
        if (x.empty()) {
            x.push_back(0);
        }
        Bytes y = x;
        std::size_t bit = g.range(0, x.size() * 8 - 1);
        y[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        changed += content_hash(x) != content_hash(y);
    }
    EXPECT_EQ(changed, 1000);
}

TEST(Bytes, HexRoundTrip)
{
    Gen g(test::base_seed() + 5);
    for (int i = 0; i < 100; ++i) {
        Bytes b = g.bytes(40);
        EXPECT_EQ(from_hex(to_hex(b)), b);
        EXPECT_EQ(to_hex(b), oracle::hex(b));
    }
}

} // namespace
} // namespace eov
