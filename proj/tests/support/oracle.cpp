// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "oracle.hpp"

#include <openssl/sha.h>

#include <set>

namespace eov::oracle {

Hash32 sha256(ByteView data)
{
    Hash32 out{};
    SHA256(data.data(), data.size(), out.data());
    return out;
}

std::string hex(ByteView data)
{
    static const char* digits = "0123456789abcdef";
    std::string s;
    for (auto b : data) {
        s += digits[b >> 4];
        s += digits[b & 15];
    }
    return s;
}

namespace {

void le(Bytes& out, std::uint64_t v, int width)
{
    for (int i = 0; i < width; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

void field(Bytes& out, ByteView b)
{
    le(out, b.size(), 4);
    out.insert(out.end(), b.begin(), b.end());
}

void field(Bytes& out, const std::string& s) { field(out, as_bytes(s)); }

// Minimal strict cursor; returns false instead of throwing.
struct Cursor {
    ByteView in;
    std::size_t pos = 0;

    bool num(std::uint64_t& v, int width)
    {
        if (in.size() - pos < static_cast<std::size_t>(width)) {
            return false;
        }
        v = 0;
        for (int i = 0; i < width; ++i) {
            v |= std::uint64_t{in[pos + i]} << (8 * i);
        }
        pos += width;
        return true;
    }
    bool blob(ByteView& out)
    {
        std::uint64_t n;
        if (!num(n, 4) || in.size() - pos < n) {
            return false;
        }
        out = in.subspan(pos, n);
        pos += n;
        return true;
    }
    bool str(std::string& s)
    {
        ByteView b;
        if (!blob(b)) {
            return false;
        }
        s.assign(b.begin(), b.end());
        return true;
    }
    bool done() const { return pos == in.size(); }
};

bool lower_hex64(const std::string& s)
{
    if (s.size() != 64) {
        return false;
    }
    for (char c : s) {
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) {
            return false;
        }
    }
    return true;
}

} // namespace

Bytes frame_header(const TxHeader& h)
{
    Bytes out;
    field(out, h.tx_id);
    field(out, h.channel_id);
    field(out, h.creator);
    le(out, h.nonce, 8);
    return out;
}

Bytes frame_rwset(const ReadWriteSet& rw)
{
    Bytes out;
    le(out, rw.reads.size(), 4);
    for (const auto& r : rw.reads) {
        field(out, r.key);
        le(out, r.version.block_num, 8);
        le(out, r.version.tx_num, 4);
    }
    le(out, rw.writes.size(), 4);
    for (const auto& w : rw.writes) {
        field(out, w.key);
        field(out, w.value);
    }
    return out;
}

Bytes frame_endorsements(const std::vector<Endorsement>& es)
{
    Bytes out;
    le(out, es.size(), 4);
    for (const auto& e : es) {
        field(out, e.endorser);
        field(out, e.signature);
    }
    return out;
}

Bytes frame_payload(const TxHeader& h, const ReadWriteSet& rw, const std::vector<Endorsement>& es,
                    std::size_t padding)
{
    Bytes data = frame_rwset(rw);
    Bytes en = frame_endorsements(es);
    data.insert(data.end(), en.begin(), en.end());
    field(data, Bytes(padding, 0));
    Bytes out;
    field(out, frame_header(h));
    field(out, data);
    return out;
}

std::optional<ParsedTx> parse_tx(ByteView envelope)
{
    ParsedTx tx;
    Cursor env{envelope};
    ByteView sig, payload;
    if (!env.blob(sig) || !env.blob(payload) || !env.done()) {
        return std::nullopt;
    }
    tx.signature.assign(sig.begin(), sig.end());
    tx.payload.assign(payload.begin(), payload.end());

    Cursor p{payload};
    ByteView header, data;
    if (!p.blob(header) || !p.blob(data) || !p.done()) {
        return std::nullopt;
    }
    Cursor h{header};
    if (!h.str(tx.header.tx_id) || !h.str(tx.header.channel_id) || !h.str(tx.header.creator) ||
        !h.num(tx.header.nonce, 8) || !h.done() || !lower_hex64(tx.header.tx_id)) {
        return std::nullopt;
    }

    Cursor d{data};
    std::uint64_t n;
    if (!d.num(n, 4)) {
        return std::nullopt;
    }
    for (std::uint64_t i = 0; i < n; ++i) {
        ReadEntry r;
        std::uint64_t tx_num;
        if (!d.str(r.key) || !d.num(r.version.block_num, 8) || !d.num(tx_num, 4)) {
            return std::nullopt;
        }
        r.version.tx_num = static_cast<std::uint32_t>(tx_num);
        tx.rwset.reads.push_back(std::move(r));
    }
    if (!d.num(n, 4)) {
        return std::nullopt;
    }
    for (std::uint64_t i = 0; i < n; ++i) {
        WriteEntry w;
        ByteView v;
        if (!d.str(w.key) || !d.blob(v)) {
            return std::nullopt;
        }
        w.value.assign(v.begin(), v.end());
        tx.rwset.writes.push_back(std::move(w));
    }
    tx.rwset_bytes.assign(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(d.pos));
    if (!d.num(n, 4)) {
        return std::nullopt;
    }
    for (std::uint64_t i = 0; i < n; ++i) {
        Endorsement e;
        ByteView s;
        if (!d.str(e.endorser) || !d.blob(s)) {
            return std::nullopt;
        }
        e.signature.assign(s.begin(), s.end());
        tx.endorsements.push_back(std::move(e));
    }
    ByteView pad;
    if (!d.blob(pad) || !d.done()) {
        return std::nullopt;
    }
    tx.padding.assign(pad.begin(), pad.end());
    return tx;
}

ValidationFlag validate(const Registry& registry, const EndorsementPolicy& policy, ByteView envelope)
{
    auto tx = parse_tx(envelope);
    if (!tx) {
        return ValidationFlag::Malformed;
    }
    // tx_id = hex(sha256(creator || nonce LE))
    Bytes id_input = to_bytes(tx->header.creator);
    le(id_input, tx->header.nonce, 8);
    if (tx->header.tx_id != hex(sha256(id_input))) {
        return ValidationFlag::Malformed;
    }
    std::set<std::string> keys;
    for (const auto& r : tx->rwset.reads) {
        if (!keys.insert(r.key).second) {
            return ValidationFlag::Malformed;
        }
    }
    keys.clear();
    for (const auto& w : tx->rwset.writes) {
        if (!keys.insert(w.key).second) {
            return ValidationFlag::Malformed;
        }
    }

    const NodeIdentity* creator = registry.find(tx->header.creator);
    if (!creator || creator->role != Role::Client ||
        !verify_signature(registry.scheme(), creator->public_key, tx->payload, tx->signature)) {
        return ValidationFlag::BadEnvelopeSig;
    }

    Bytes signed_bytes = tx->rwset_bytes;
    signed_bytes.insert(signed_bytes.end(), tx->padding.begin(), tx->padding.end());
    std::vector<std::pair<std::string, bool>> sigs;
    for (const auto& e : tx->endorsements) {
        const NodeIdentity* id = registry.find(e.endorser);
        bool ok = id &&
                  verify_signature(registry.scheme(), id->public_key, signed_bytes, e.signature);
        sigs.emplace_back(e.endorser, ok);
    }
    return policy_holds(policy, sigs) ? ValidationFlag::Valid : ValidationFlag::BadEndorsement;
}

bool policy_holds(const EndorsementPolicy& policy, const std::vector<std::pair<std::string, bool>>& sigs)
{
    std::set<std::string> good;
    for (const auto& [who, ok] : sigs) {
        if (ok && policy.eligible.count(who)) {
            good.insert(who);
        }
    }
    return good.size() >= policy.required;
}

std::vector<ValidationFlag> NaiveState::run_block(std::uint64_t number, const std::vector<ReadWriteSet>& txs,
                                                  const std::vector<ValidationFlag>& pre)
{
    std::vector<ValidationFlag> flags = pre;
    for (std::size_t i = 0; i < txs.size(); ++i) {
        if (flags[i] != ValidationFlag::Valid) {
            continue;
        }
        bool stale = false;
        for (const auto& r : txs[i].reads) {
            auto it = entries.find(r.key);
            Version current = it == entries.end() ? Version{0, 0} : it->second.version;
            stale = stale || current != r.version;
        }
        if (stale) {
            flags[i] = ValidationFlag::MvccConflict;
            continue;
        }
        for (const auto& w : txs[i].writes) {
            entries[w.key] = StateEntry{w.value, Version{number, static_cast<std::uint32_t>(i)}};
        }
    }
    return flags;
}

StateMap NaiveState::as_state_map() const
{
    return StateMap(entries.begin(), entries.end());
}

} // namespace eov::oracle
