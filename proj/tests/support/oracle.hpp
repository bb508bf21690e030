// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

// Independent reference implementations the tests compare against. None of
// them call the library's encoders, decoders or validators.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eov/identity.hpp"
#include "eov/ledger.hpp"
#include "eov/statestore.hpp"

namespace eov::oracle {

/// SHA-256 through OpenSSL's one-shot interface.
Hash32 sha256(ByteView data);
std::string hex(ByteView data);

/// Hand-written serialisation straight from the framing grammar.
Bytes frame_header(const TxHeader& h);
Bytes frame_rwset(const ReadWriteSet& rw);
Bytes frame_endorsements(const std::vector<Endorsement>& es);
Bytes frame_payload(const TxHeader& h, const ReadWriteSet& rw, const std::vector<Endorsement>& es,
                    std::size_t padding);

/// Strict parse of every layer; nullopt when anything is off.
struct ParsedTx {
    Bytes signature;
    Bytes payload;
    TxHeader header;
    ReadWriteSet rwset;
    Bytes rwset_bytes;
    std::vector<Endorsement> endorsements;
    Bytes padding;
};
std::optional<ParsedTx> parse_tx(ByteView envelope);

/// Sequential validator: structure, then creator signature, then policy.
ValidationFlag validate(const Registry& registry, const EndorsementPolicy& policy, ByteView envelope);

/// Brute-force policy evaluation over (endorser, signature-is-valid) pairs.
bool policy_holds(const EndorsementPolicy& policy, const std::vector<std::pair<std::string, bool>>& sigs);

/// Plain map world state with single-threaded MVCC.
struct NaiveState {
    std::map<std::string, StateEntry> entries;

    /// Flags for one block given per-tx pre-validation verdicts.
    std::vector<ValidationFlag> run_block(std::uint64_t number, const std::vector<ReadWriteSet>& txs,
                                          const std::vector<ValidationFlag>& pre);
    StateMap as_state_map() const;
};

} // namespace eov::oracle
