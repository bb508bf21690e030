// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <string_view>

#include "eov/common/bytes.hpp"

namespace eov {

/// SHA-256 over `bytes`.
Hash32 content_hash(ByteView bytes);
Hash32 content_hash(std::initializer_list<ByteView> parts);

enum class SignatureScheme : std::uint8_t {
    Ed25519, // asymmetric, the default
    Mac,     // HMAC-SHA256 keyed with a secret shared through the registry
};

std::string_view to_string(SignatureScheme scheme) noexcept;
SignatureScheme parse_scheme(std::string_view name);

struct KeyPair {
    SignatureScheme scheme = SignatureScheme::Ed25519;
    Bytes public_key;
    Bytes secret_key;
};

/// Deterministic key derivation from a 32-byte seed.
KeyPair derive_keypair(SignatureScheme scheme, const Hash32& seed);

/// Convenience: seed = SHA-256("eov-key" || deployment_seed || node_id).
KeyPair derive_node_keypair(SignatureScheme scheme, std::uint64_t deployment_seed,
                            std::string_view node_id);

class Signer {
public:
    Signer() = default;
    explicit Signer(KeyPair keys) : keys_(std::move(keys)) {}

    Bytes sign(ByteView message) const;
    const Bytes& public_key() const noexcept { return keys_.public_key; }
    SignatureScheme scheme() const noexcept { return keys_.scheme; }

private:
    KeyPair keys_;
};

bool verify_signature(SignatureScheme scheme, ByteView public_key, ByteView message,
                      ByteView signature);

} // namespace eov
