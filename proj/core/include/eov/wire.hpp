// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

// Layered binary encoding of transactions.
//
//   Envelope := u32 sig_len | sig | u32 payload_len | payload
//   Payload  := u32 header_len | header | u32 data_len | data
//   Header   := u32 txid_len | txid | u32 chan_len | chan | u32 creator_len | creator | u64 nonce
//   Data     := rwset | u32 n_endorsements | endorsement* | u32 pad_len | padding
//   RWSet    := u32 n_reads  | (u32 key_len | key | u64 block_num | u32 tx_num)*
//               u32 n_writes | (u32 key_len | key | u32 val_len | val)*
//   Endorsement := u32 id_len | endorser | u32 sig_len | sig
//
// All integers are little-endian. Each layer decodes into owned structures
// and leaves the layers beneath it as opaque byte strings, so a consumer pays
// for exactly the layers it touches.

#pragma once

#include <compare>
#include <string>
#include <variant>
#include <vector>

#include "eov/common/bytes.hpp"
#include "eov/crypto.hpp"

namespace eov {

struct Version {
    std::uint64_t block_num = 0;
    std::uint32_t tx_num = 0;

    auto operator<=>(const Version&) const = default;
};

/// Version assigned to keys that exist from genesis or were never written.
inline constexpr Version kGenesisVersion{0, 0};

struct TxHeader {
    std::string tx_id;
    std::string channel_id;
    std::string creator;
    std::uint64_t nonce = 0;

    bool operator==(const TxHeader&) const = default;
};

struct ReadEntry {
    std::string key;
    Version version;
    bool operator==(const ReadEntry&) const = default;
};

struct WriteEntry {
    std::string key;
    Bytes value;
    bool operator==(const WriteEntry&) const = default;
};

struct ReadWriteSet {
    std::vector<ReadEntry> reads;
    std::vector<WriteEntry> writes;
    bool operator==(const ReadWriteSet&) const = default;
};

struct Endorsement {
    std::string endorser;
    Bytes signature;
    bool operator==(const Endorsement&) const = default;
};

struct RawEnvelope {
    Bytes signature;
    Bytes payload_bytes;
    bool operator==(const RawEnvelope&) const = default;
};

/// The payload with its data section split at layer boundaries.
struct PayloadLayer {
    Bytes header_bytes;
    Bytes rwset_bytes;
    Bytes endorsements_bytes;
    Bytes padding;
    bool operator==(const PayloadLayer&) const = default;
};

enum class Layer { Envelope, Payload, Header, RWSet, Endorsements };

using DecodedLayer =
    std::variant<RawEnvelope, PayloadLayer, TxHeader, ReadWriteSet, std::vector<Endorsement>>;

/// True when no key repeats within the reads and none repeats within the writes.
bool has_unique_keys(const ReadWriteSet& rwset);

/// Lowercase hex of SHA-256(creator || nonce as u64 LE).
std::string make_tx_id(std::string_view creator, std::uint64_t nonce);
inline constexpr std::size_t kTxIdLength = 64;

Bytes encode_header(const TxHeader& header);
Bytes encode_rwset(const ReadWriteSet& rwset);
Bytes encode_endorsements(std::span<const Endorsement> endorsements);

/// Bytes an endorser signs: the serialized read-write set followed by the
/// padding bytes carried in the data section.
Bytes endorsement_message(ByteView rwset_bytes, ByteView padding);
Bytes endorsement_message(ByteView rwset_bytes, std::size_t padding_len);

/// Builds a signed envelope. The payload carries `padding_len` zero bytes
/// after the endorsements.
Bytes encode_envelope(const TxHeader& header, const ReadWriteSet& rwset,
                      std::span<const Endorsement> endorsements, std::size_t padding_len,
                      const Signer& signer);

/// Same, from an already-serialized read-write set.
Bytes encode_envelope_raw(ByteView header_bytes, ByteView rwset_bytes,
                          std::span<const Endorsement> endorsements, std::size_t padding_len,
                          const Signer& signer);

/// Size of the payload section of an envelope with the given field sizes.
std::size_t encoded_payload_size(std::size_t header_size, std::size_t rwset_size,
                                 std::size_t endorsements_size, std::size_t padding_len);

// Single-layer decoders. Each throws Error{MalformedFrame} when a length
// prefix overruns the buffer and Error{BadMagic} when the buffer parses but
// does not have the shape of the requested layer.
RawEnvelope decode_envelope(ByteView bytes);
PayloadLayer decode_payload(ByteView bytes);
TxHeader decode_header(ByteView bytes);
ReadWriteSet decode_rwset(ByteView bytes);
std::vector<Endorsement> decode_endorsements(ByteView bytes);

DecodedLayer decode_layer(ByteView bytes, Layer layer);

/// Reads only the tx_id out of an envelope without decoding the layers.
std::string peek_tx_id(ByteView envelope_bytes);
/// Decodes only the header of an envelope, without copying the data section.
TxHeader peek_header(ByteView envelope_bytes);

} // namespace eov
