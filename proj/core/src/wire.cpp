// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "eov/wire.hpp"

#include <algorithm>
#include <unordered_set>

namespace eov {

namespace {

bool is_lower_hex(std::string_view s)
{
    return std::all_of(s.begin(), s.end(),
                       [](char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); });
}

void expect_done(const ByteReader& r, std::string_view layer)
{
    if (!r.done()) {
        fail(Errc::BadMagic, std::string(layer) + " layer has " + std::to_string(r.remaining()) +
                                 " trailing bytes");
    }
}

// Advances past an encoded read-write set without materialising it.
void skip_rwset(ByteReader& r)
{
    std::uint32_t n_reads = r.u32();
    for (std::uint32_t i = 0; i < n_reads; ++i) {
        r.skip_prefixed();
        r.take(8 + 4);
    }
    std::uint32_t n_writes = r.u32();
    for (std::uint32_t i = 0; i < n_writes; ++i) {
        r.skip_prefixed();
        r.skip_prefixed();
    }
}

void skip_endorsements(ByteReader& r)
{
    std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
        r.skip_prefixed();
        r.skip_prefixed();
    }
}

void write_endorsements(ByteWriter& w, std::span<const Endorsement> endorsements)
{
    w.u32(static_cast<std::uint32_t>(endorsements.size()));
    for (const auto& e : endorsements) {
        w.prefixed(e.endorser);
        w.prefixed(e.signature);
    }
}

std::size_t endorsements_size(std::span<const Endorsement> endorsements)
{
    std::size_t n = 4;
    for (const auto& e : endorsements) {
        n += 4 + e.endorser.size() + 4 + e.signature.size();
    }
    return n;
}

} // namespace

bool has_unique_keys(const ReadWriteSet& rwset)
{
    std::unordered_set<std::string_view> seen;
    for (const auto& r : rwset.reads) {
        if (!seen.insert(r.key).second) return false;
    }
    seen.clear();
    for (const auto& w : rwset.writes) {
        if (!seen.insert(w.key).second) return false;
    }
    return true;
}

std::string make_tx_id(std::string_view creator, std::uint64_t nonce)
{
    Bytes nonce_le;
    ByteWriter(nonce_le).u64(nonce);
    return to_hex(content_hash({as_bytes(creator), nonce_le}));
}

Bytes encode_header(const TxHeader& header)
{
    Bytes out;
    out.reserve(12 + header.tx_id.size() + header.channel_id.size() + header.creator.size() + 8);
    ByteWriter w(out);
    w.prefixed(header.tx_id);
    w.prefixed(header.channel_id);
    w.prefixed(header.creator);
    w.u64(header.nonce);
    return out;
}

Bytes encode_rwset(const ReadWriteSet& rwset)
{
    Bytes out;
    ByteWriter w(out);
    w.u32(static_cast<std::uint32_t>(rwset.reads.size()));
    for (const auto& r : rwset.reads) {
        w.prefixed(r.key);
        w.u64(r.version.block_num);
        w.u32(r.version.tx_num);
    }
    w.u32(static_cast<std::uint32_t>(rwset.writes.size()));
    for (const auto& wr : rwset.writes) {
        w.prefixed(wr.key);
        w.prefixed(wr.value);
    }
    return out;
}

Bytes encode_endorsements(std::span<const Endorsement> endorsements)
{
    Bytes out;
    out.reserve(endorsements_size(endorsements));
    ByteWriter w(out);
    write_endorsements(w, endorsements);
    return out;
}

Bytes endorsement_message(ByteView rwset_bytes, ByteView padding)
{
    Bytes msg;
    msg.reserve(rwset_bytes.size() + padding.size());
    msg.insert(msg.end(), rwset_bytes.begin(), rwset_bytes.end());
    msg.insert(msg.end(), padding.begin(), padding.end());
    return msg;
}

Bytes endorsement_message(ByteView rwset_bytes, std::size_t padding_len)
{
    Bytes msg;
    msg.reserve(rwset_bytes.size() + padding_len);
    msg.insert(msg.end(), rwset_bytes.begin(), rwset_bytes.end());
    msg.resize(rwset_bytes.size() + padding_len, 0);
    return msg;
}

std::size_t encoded_payload_size(std::size_t header_size, std::size_t rwset_size,
                                 std::size_t endorsements_size, std::size_t padding_len)
{
    return 4 + header_size + 4 + rwset_size + endorsements_size + 4 + padding_len;
}

Bytes encode_envelope(const TxHeader& header, const ReadWriteSet& rwset,
                      std::span<const Endorsement> endorsements, std::size_t padding_len,
                      const Signer& signer)
{
    return encode_envelope_raw(encode_header(header), encode_rwset(rwset), endorsements,
                               padding_len, signer);
}

Bytes encode_envelope_raw(ByteView header_bytes, ByteView rwset_bytes,
                          std::span<const Endorsement> endorsements, std::size_t padding_len,
                          const Signer& signer)
{
    const std::size_t data_size = rwset_bytes.size() + endorsements_size(endorsements) + 4 + padding_len;
    Bytes payload;
    payload.reserve(4 + header_bytes.size() + 4 + data_size);
    ByteWriter pw(payload);
    pw.prefixed(header_bytes);
    pw.u32(static_cast<std::uint32_t>(data_size));
    pw.raw(rwset_bytes);
    write_endorsements(pw, endorsements);
    pw.u32(static_cast<std::uint32_t>(padding_len));
    pw.zeros(padding_len);

    Bytes sig = signer.sign(payload);
    Bytes envelope;
    envelope.reserve(8 + sig.size() + payload.size());
    ByteWriter ew(envelope);
    ew.prefixed(sig);
    ew.prefixed(payload);
    return envelope;
}

RawEnvelope decode_envelope(ByteView bytes)
{
    ByteReader r(bytes);
    RawEnvelope env;
    env.signature = r.prefixed_bytes();
    env.payload_bytes = r.prefixed_bytes();
    expect_done(r, "envelope");
    return env;
}

PayloadLayer decode_payload(ByteView bytes)
{
    ByteReader r(bytes);
    PayloadLayer p;
    p.header_bytes = r.prefixed_bytes();
    ByteView data = r.prefixed();
    expect_done(r, "payload");

    ByteReader d(data);
    std::size_t start = d.position();
    skip_rwset(d);
    auto rw = data.subspan(start, d.position() - start);
    p.rwset_bytes.assign(rw.begin(), rw.end());

    start = d.position();
    skip_endorsements(d);
    auto en = data.subspan(start, d.position() - start);
    p.endorsements_bytes.assign(en.begin(), en.end());

    auto pad = d.prefixed();
    p.padding.assign(pad.begin(), pad.end());
    expect_done(d, "data");
    return p;
}

TxHeader decode_header(ByteView bytes)
{
    ByteReader r(bytes);
    TxHeader h;
    h.tx_id = r.prefixed_string();
    h.channel_id = r.prefixed_string();
    h.creator = r.prefixed_string();
    h.nonce = r.u64();
    expect_done(r, "header");
    if (h.tx_id.size() != kTxIdLength || !is_lower_hex(h.tx_id)) {
        fail(Errc::BadMagic, "header tx_id is not 64 lowercase hex characters");
    }
    return h;
}

ReadWriteSet decode_rwset(ByteView bytes)
{
    ByteReader r(bytes);
    ReadWriteSet rw;
    std::uint32_t n_reads = r.u32();
    rw.reads.reserve(std::min<std::size_t>(n_reads, r.remaining() / 16));
    for (std::uint32_t i = 0; i < n_reads; ++i) {
        ReadEntry e;
        e.key = r.prefixed_string();
        e.version.block_num = r.u64();
        e.version.tx_num = r.u32();
        rw.reads.push_back(std::move(e));
    }
    std::uint32_t n_writes = r.u32();
    rw.writes.reserve(std::min<std::size_t>(n_writes, r.remaining() / 8));
    for (std::uint32_t i = 0; i < n_writes; ++i) {
        WriteEntry e;
        e.key = r.prefixed_string();
        e.value = r.prefixed_bytes();
        rw.writes.push_back(std::move(e));
    }
    expect_done(r, "rwset");
    return rw;
}

std::vector<Endorsement> decode_endorsements(ByteView bytes)
{
    ByteReader r(bytes);
    std::uint32_t n = r.u32();
    std::vector<Endorsement> out;
    out.reserve(std::min<std::size_t>(n, r.remaining() / 8));
    for (std::uint32_t i = 0; i < n; ++i) {
        Endorsement e;
        e.endorser = r.prefixed_string();
        e.signature = r.prefixed_bytes();
        out.push_back(std::move(e));
    }
    expect_done(r, "endorsements");
    return out;
}

DecodedLayer decode_layer(ByteView bytes, Layer layer)
{
    switch (layer) {
    case Layer::Envelope: return decode_envelope(bytes);
    case Layer::Payload: return decode_payload(bytes);
    case Layer::Header: return decode_header(bytes);
    case Layer::RWSet: return decode_rwset(bytes);
    case Layer::Endorsements: return decode_endorsements(bytes);
    }
    fail(Errc::InvalidArgument, "unknown layer");
}

std::string peek_tx_id(ByteView envelope_bytes)
{
    ByteReader env(envelope_bytes);
    env.skip_prefixed();
    ByteReader payload(env.prefixed());
    ByteReader header(payload.prefixed());
    return header.prefixed_string();
}

TxHeader peek_header(ByteView envelope_bytes)
{
    ByteReader env(envelope_bytes);
    env.skip_prefixed();
    ByteReader payload(env.prefixed());
    return decode_header(payload.prefixed());
}

} // namespace eov
