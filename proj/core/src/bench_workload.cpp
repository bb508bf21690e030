// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "eov/bench/workload.hpp"

#include <cstdio>

#include "eov/endorser.hpp"

namespace eov::bench {

std::string account_key(std::size_t index)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "acct%05zu", index);
    return buf;
}

StateMap genesis_accounts(std::size_t accounts, std::uint64_t balance)
{
    StateMap m;
    Bytes value = encode_balance(balance);
    for (std::size_t i = 0; i < accounts; ++i) {
        m.emplace(account_key(i), StateEntry{value, kGenesisVersion});
    }
    return m;
}

unsigned __int128 total_balance(const StateMap& state)
{
    unsigned __int128 sum = 0;
    for (const auto& [k, e] : state) {
        sum += decode_balance(e.value);
    }
    return sum;
}

std::string values_digest(const StateMap& state)
{
    Bytes buf;
    ByteWriter w(buf);
    for (const auto& [k, e] : state) {
        w.prefixed(k);
        w.prefixed(e.value);
    }
    return to_hex(content_hash(buf));
}

std::string state_digest(const StateMap& state)
{
    return to_hex(content_hash(encode_snapshot(state)));
}

TransferGenerator::TransferGenerator(std::uint64_t seed, std::size_t accounts)
    : rng_(seed), account_(0, accounts - 1), amount_(1, 100)
{
    if (accounts < 2) {
        fail(Errc::InvalidArgument, "transfers need at least two accounts");
    }
}

Transfer TransferGenerator::next()
{
    Transfer t;
    t.from = account_(rng_);
    do {
        t.to = account_(rng_);
    } while (t.to == t.from);
    t.amount = amount_(rng_);
    return t;
}

Identities Identities::from(const Topology& topology)
{
    Identities ids;
    ids.registry = topology.registry();
    ids.orderer_id = topology.only("orderer").id;
    ids.client_id = topology.only("client").id;
    ids.orderer = Signer(topology.keys_of(ids.orderer_id));
    ids.client = Signer(topology.keys_of(ids.client_id));
    for (const auto* n : topology.with_role("endorser")) {
        ids.endorser_ids.push_back(n->id);
        ids.endorsers.emplace_back(topology.keys_of(n->id));
    }
    if (ids.endorsers.empty()) {
        fail(Errc::TopologyError, "topology has no endorser");
    }
    return ids;
}

EndorsementPolicy Identities::policy() const
{
    EndorsementPolicy p;
    p.required = 1;
    p.eligible.insert(endorser_ids.begin(), endorser_ids.end());
    return p;
}

namespace {

Bytes make_envelope(const Identities& ids, std::size_t endorser, std::uint64_t nonce,
                    ReadWriteSet rwset, std::size_t payload)
{
    EndorsedTx tx;
    tx.header.tx_id = make_tx_id(ids.client_id, nonce);
    tx.header.channel_id = "ch0";
    tx.header.creator = ids.client_id;
    tx.header.nonce = nonce;
    tx.rwset = std::move(rwset);
    tx.padding_len = payload;
    tx.endorsement.endorser = ids.endorser_ids[endorser];
    tx.endorsement.signature =
        ids.endorsers[endorser].sign(endorsement_message(encode_rwset(tx.rwset), payload));
    return tx.to_envelope(ids.client);
}

} // namespace

BlockSet build_transfer_blocks(const Identities& ids, std::size_t accounts, std::uint64_t tx_count,
                               std::uint32_t block_size, std::size_t payload, std::uint64_t seed)
{
    if (block_size == 0) {
        fail(Errc::InvalidArgument, "block size must be >= 1");
    }
    std::vector<std::uint64_t> balance(accounts, kInitialBalance);
    std::vector<Version> version(accounts, kGenesisVersion);
    TransferGenerator gen(seed, accounts);

    BlockSet set;
    BlockHeader prev = make_genesis().header;
    std::uint64_t nonce = 0;
    while (set.txs < tx_count) {
        std::uint64_t number = prev.number + 1;
        auto n = static_cast<std::uint32_t>(std::min<std::uint64_t>(block_size, tx_count - set.txs));
        std::vector<Bytes> envs;
        envs.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            Transfer t = gen.next();
            if (balance[t.from] < t.amount) {
                t.amount = balance[t.from];
            }
            ReadWriteSet rw;
            std::string from = account_key(t.from);
            std::string to = account_key(t.to);
            rw.reads = {{from, version[t.from]}, {to, version[t.to]}};
            balance[t.from] -= t.amount;
            balance[t.to] += t.amount;
            rw.writes = {{from, encode_balance(balance[t.from])}, {to, encode_balance(balance[t.to])}};
            version[t.from] = version[t.to] = Version{number, i};
            envs.push_back(make_envelope(ids, nonce % ids.endorsers.size(), nonce, std::move(rw), payload));
            ++nonce;
        }
        Block b = make_block(prev, std::move(envs), ids.orderer);
        prev = b.header;
        set.blocks.push_back(encode_block(b));
        set.txs += n;
    }
    for (std::size_t i = 0; i < accounts; ++i) {
        set.expected.emplace(account_key(i), StateEntry{encode_balance(balance[i]), version[i]});
    }
    return set;
}

std::vector<Bytes> build_envelopes(const Identities& ids, std::uint64_t count, std::size_t payload,
                                   std::uint64_t seed, std::size_t accounts)
{
    TransferGenerator gen(seed, accounts);
    std::vector<Bytes> out;
    out.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        Transfer t = gen.next();
        ReadWriteSet rw;
        std::string from = account_key(t.from);
        std::string to = account_key(t.to);
        rw.reads = {{from, kGenesisVersion}, {to, kGenesisVersion}};
        rw.writes = {{from, encode_balance(kInitialBalance - t.amount)},
                     {to, encode_balance(kInitialBalance + t.amount)}};
        out.push_back(make_envelope(ids, i % ids.endorsers.size(), i, std::move(rw), payload));
    }
    return out;
}

} // namespace eov::bench
