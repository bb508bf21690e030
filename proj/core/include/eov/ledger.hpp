// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <memory>
#include <vector>

#include "eov/crypto.hpp"
#include "eov/wire.hpp"

namespace eov {

enum class ValidationFlag : std::uint8_t {
    Valid = 0,
    BadEnvelopeSig = 1,
    BadEndorsement = 2,
    MvccConflict = 3,
    Malformed = 4,
};

std::string_view to_string(ValidationFlag flag) noexcept;

struct BlockHeader {
    std::uint64_t number = 0;
    Hash32 prev_hash{};
    Hash32 data_hash{};

    bool operator==(const BlockHeader&) const = default;
};

/// u64 number | prev_hash | data_hash (72 bytes).
Bytes encode_block_header(const BlockHeader& header);
Hash32 header_hash(const BlockHeader& header);

/// SHA-256 over the concatenated envelope bytes.
Hash32 compute_data_hash(std::span<const Bytes> envelopes);

/// An ordered batch of encoded envelopes. `flags` is empty until the
/// committer has validated the block, then holds one flag per envelope.
struct Block {
    BlockHeader header;
    std::vector<Bytes> envelopes;
    Bytes orderer_signature;
    std::vector<ValidationFlag> flags;

    std::uint64_t number() const noexcept { return header.number; }
    bool operator==(const Block&) const = default;
};

using BlockPtr = std::shared_ptr<const Block>;

/// Block 0: zero previous hash, no envelopes.
Block make_genesis();

/// Cuts a block after `prev` and signs its header with the orderer key.
Block make_block(const BlockHeader& prev, std::vector<Bytes> envelopes, const Signer& orderer);

/// u64 number | prev_hash | data_hash | u32 n_env | (u32 len | envelope)* |
/// u32 sig_len | sig | u32 n_flags | flag bytes
Bytes encode_block(const Block& block);
Block decode_block(ByteView bytes);

/// True iff `next` directly extends `prev` in the hash chain.
bool link_check(const Block& prev, const Block& next);
bool link_check(const BlockHeader& prev, const BlockHeader& next);

} // namespace eov
