// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

// Seeded transfer workloads and pre-built blocks.

#pragma once

#include <random>

#include "eov/bench/topology.hpp"
#include "eov/ledger.hpp"
#include "eov/statestore.hpp"

namespace eov::bench {

inline constexpr std::uint64_t kInitialBalance = 1'000'000;
inline constexpr std::size_t kDefaultAccounts = 10'000;
inline constexpr std::size_t kDefaultPayload = 2900;

std::string account_key(std::size_t index);
StateMap genesis_accounts(std::size_t accounts, std::uint64_t balance = kInitialBalance);

/// Sum of all 8-byte balances in a state map.
unsigned __int128 total_balance(const StateMap& state);

/// SHA-256 over the sorted (key, value) pairs; versions ignored.
std::string values_digest(const StateMap& state);
/// SHA-256 over the sorted (key, value, version) triples.
std::string state_digest(const StateMap& state);

struct Transfer {
    std::size_t from = 0;
    std::size_t to = 0;
    std::uint64_t amount = 0;
};

/// Uniform random (from, to) pairs, from != to, amounts in [1, 100].
class TransferGenerator {
public:
    TransferGenerator(std::uint64_t seed, std::size_t accounts);
    Transfer next();

private:
    std::mt19937_64 rng_;
    std::uniform_int_distribution<std::size_t> account_;
    std::uniform_int_distribution<std::uint64_t> amount_;
};

/// Keys of the standard single-host deployment roles.
struct Identities {
    std::shared_ptr<const Registry> registry;
    std::string orderer_id;
    std::string client_id;
    std::vector<std::string> endorser_ids;
    Signer orderer;
    Signer client;
    std::vector<Signer> endorsers;

    static Identities from(const Topology& topology);
    EndorsementPolicy policy() const;
};

struct BlockSet {
    std::vector<Bytes> blocks; // encoded, numbers 1..n, chained from genesis
    std::uint64_t txs = 0;
    StateMap expected; // state after committing every block
};

/// Valid, conflict-free transfer blocks: each tx is simulated against the
/// state left by all earlier txs, exactly as a sequential endorser would.
BlockSet build_transfer_blocks(const Identities& ids, std::size_t accounts, std::uint64_t tx_count,
                               std::uint32_t block_size, std::size_t payload, std::uint64_t seed);

/// Signed, endorsed envelopes for ordering-only experiments.
std::vector<Bytes> build_envelopes(const Identities& ids, std::uint64_t count, std::size_t payload,
                                   std::uint64_t seed, std::size_t accounts = kDefaultAccounts);

} // namespace eov::bench
