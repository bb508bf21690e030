// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "eov/crypto.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/sha.h>
#include <sodium.h>

namespace eov {

namespace {

void ensure_sodium()
{
    static const bool ready = [] {
        if (sodium_init() < 0) {
            fail(Errc::InvalidArgument, "libsodium initialisation failed");
        }
        return true;
    }();
    (void)ready;
}

Bytes hmac_sha256(ByteView key, ByteView message)
{
    Bytes out(32);
    unsigned int len = 0;
    HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), message.data(), message.size(),
         out.data(), &len);
    return out;
}

} // namespace

Hash32 content_hash(ByteView bytes)
{
    Hash32 out;
    SHA256(bytes.data(), bytes.size(), out.data());
    return out;
}

Hash32 content_hash(std::initializer_list<ByteView> parts)
{
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    for (auto part : parts) {
        EVP_DigestUpdate(ctx, part.data(), part.size());
    }
    Hash32 out;
    EVP_DigestFinal_ex(ctx, out.data(), nullptr);
    EVP_MD_CTX_free(ctx);
    return out;
}

std::string_view to_string(SignatureScheme scheme) noexcept
{
    return scheme == SignatureScheme::Ed25519 ? "ed25519" : "mac";
}

SignatureScheme parse_scheme(std::string_view name)
{
    if (name == "ed25519") return SignatureScheme::Ed25519;
    if (name == "mac") return SignatureScheme::Mac;
    fail(Errc::InvalidArgument, "unknown signature scheme '" + std::string(name) + "'");
}

KeyPair derive_keypair(SignatureScheme scheme, const Hash32& seed)
{
    KeyPair keys;
    keys.scheme = scheme;
    if (scheme == SignatureScheme::Mac) {
        keys.secret_key.assign(seed.begin(), seed.end());
        keys.public_key = keys.secret_key;
        return keys;
    }
    ensure_sodium();
    keys.public_key.resize(crypto_sign_PUBLICKEYBYTES);
    keys.secret_key.resize(crypto_sign_SECRETKEYBYTES);
    crypto_sign_seed_keypair(keys.public_key.data(), keys.secret_key.data(), seed.data());
    return keys;
}

KeyPair derive_node_keypair(SignatureScheme scheme, std::uint64_t deployment_seed,
                            std::string_view node_id)
{
    Bytes seed_le;
    ByteWriter(seed_le).u64(deployment_seed);
    return derive_keypair(scheme, content_hash({as_bytes("eov-key"), seed_le, as_bytes(node_id)}));
}

Bytes Signer::sign(ByteView message) const
{
    if (keys_.scheme == SignatureScheme::Mac) {
        return hmac_sha256(keys_.secret_key, message);
    }
    ensure_sodium();
    Bytes sig(crypto_sign_BYTES);
    crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(),
                         keys_.secret_key.data());
    return sig;
}

bool verify_signature(SignatureScheme scheme, ByteView public_key, ByteView message,
                      ByteView signature)
{
    if (scheme == SignatureScheme::Mac) {
        if (signature.size() != 32) {
            return false;
        }
        Bytes expected = hmac_sha256(public_key, message);
        return CRYPTO_memcmp(expected.data(), signature.data(), 32) == 0;
    }
    if (signature.size() != crypto_sign_BYTES || public_key.size() != crypto_sign_PUBLICKEYBYTES) {
        return false;
    }
    ensure_sodium();
    return crypto_sign_verify_detached(signature.data(), message.data(), message.size(),
                                       public_key.data()) == 0;
}

} // namespace eov
