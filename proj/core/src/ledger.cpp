// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "eov/ledger.hpp"

#include <openssl/evp.h>

#include <algorithm>

namespace eov {

std::string_view to_string(ValidationFlag flag) noexcept
{
    switch (flag) {
    case ValidationFlag::Valid: return "Valid";
    case ValidationFlag::BadEnvelopeSig: return "BadEnvelopeSig";
    case ValidationFlag::BadEndorsement: return "BadEndorsement";
    case ValidationFlag::MvccConflict: return "MvccConflict";
    case ValidationFlag::Malformed: return "Malformed";
    }
    return "Unknown";
}

Bytes encode_block_header(const BlockHeader& header)
{
    Bytes out;
    out.reserve(72);
    ByteWriter w(out);
    w.u64(header.number);
    w.raw(header.prev_hash);
    w.raw(header.data_hash);
    return out;
}

Hash32 header_hash(const BlockHeader& header)
{
    return content_hash(encode_block_header(header));
}

Hash32 compute_data_hash(std::span<const Bytes> envelopes)
{
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    for (const auto& env : envelopes) {
        EVP_DigestUpdate(ctx, env.data(), env.size());
    }
    Hash32 out;
    EVP_DigestFinal_ex(ctx, out.data(), nullptr);
    EVP_MD_CTX_free(ctx);
    return out;
}

Block make_genesis()
{
    Block genesis;
    genesis.header.number = 0;
    genesis.header.data_hash = compute_data_hash({});
    return genesis;
}

Block make_block(const BlockHeader& prev, std::vector<Bytes> envelopes, const Signer& orderer)
{
    Block b;
    b.header.number = prev.number + 1;
    b.header.prev_hash = header_hash(prev);
    b.header.data_hash = compute_data_hash(envelopes);
    b.envelopes = std::move(envelopes);
    b.orderer_signature = orderer.sign(encode_block_header(b.header));
    return b;
}

Bytes encode_block(const Block& block)
{
    std::size_t size = 72 + 4 + 4 + block.orderer_signature.size() + 4 + block.flags.size();
    for (const auto& env : block.envelopes) {
        size += 4 + env.size();
    }
    Bytes out;
    out.reserve(size);
    ByteWriter w(out);
    w.u64(block.header.number);
    w.raw(block.header.prev_hash);
    w.raw(block.header.data_hash);
    w.u32(static_cast<std::uint32_t>(block.envelopes.size()));
    for (const auto& env : block.envelopes) {
        w.prefixed(env);
    }
    w.prefixed(block.orderer_signature);
    w.u32(static_cast<std::uint32_t>(block.flags.size()));
    for (auto f : block.flags) {
        w.u8(static_cast<std::uint8_t>(f));
    }
    return out;
}

Block decode_block(ByteView bytes)
{
    ByteReader r(bytes);
    Block b;
    b.header.number = r.u64();
    auto prev = r.take(32);
    std::copy(prev.begin(), prev.end(), b.header.prev_hash.begin());
    auto data = r.take(32);
    std::copy(data.begin(), data.end(), b.header.data_hash.begin());
    std::uint32_t n_env = r.u32();
    b.envelopes.reserve(std::min<std::size_t>(n_env, r.remaining() / 4));
    for (std::uint32_t i = 0; i < n_env; ++i) {
        b.envelopes.push_back(r.prefixed_bytes());
    }
    b.orderer_signature = r.prefixed_bytes();
    std::uint32_t n_flags = r.u32();
    if (n_flags != 0 && n_flags != n_env) {
        fail(Errc::BadMagic, "block carries " + std::to_string(n_flags) + " flags for " +
                                 std::to_string(n_env) + " envelopes");
    }
    auto flag_bytes = r.take(n_flags);
    b.flags.reserve(n_flags);
    for (auto f : flag_bytes) {
        if (f > static_cast<std::uint8_t>(ValidationFlag::Malformed)) {
            fail(Errc::BadMagic, "unknown validation flag " + std::to_string(f));
        }
        b.flags.push_back(static_cast<ValidationFlag>(f));
    }
    if (!r.done()) {
        fail(Errc::BadMagic, "block has " + std::to_string(r.remaining()) + " trailing bytes");
    }
    return b;
}

bool link_check(const BlockHeader& prev, const BlockHeader& next)
{
    return next.number == prev.number + 1 && next.prev_hash == header_hash(prev);
}

bool link_check(const Block& prev, const Block& next)
{
    return link_check(prev.header, next.header);
}

} // namespace eov
