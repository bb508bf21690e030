// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "eov/crypto.hpp"
#include "eov/wire.hpp"

namespace eov {

enum class Role : std::uint8_t { Client, Endorser, Orderer, Committer, BlockStore };

std::string_view to_string(Role role) noexcept;
Role parse_role(std::string_view name);

struct NodeIdentity {
    std::string node_id;
    Role role = Role::Client;
    Bytes public_key;
};

/// Membership registry. Built once at startup, immutable afterwards, and
/// therefore safe to query from any thread.
class Registry {
public:
    class Builder {
    public:
        explicit Builder(SignatureScheme scheme) : scheme_(scheme) {}
        /// Throws InvalidArgument when node_id is already registered.
        Builder& add(NodeIdentity identity);
        std::shared_ptr<const Registry> build();

    private:
        SignatureScheme scheme_;
        std::map<std::string, NodeIdentity, std::less<>> nodes_;
    };

    SignatureScheme scheme() const noexcept { return scheme_; }
    const NodeIdentity* find(std::string_view node_id) const;
    bool has_role(std::string_view node_id, Role role) const;
    /// Orderer admission rule: the creator is registered with role Client.
    bool is_authorized_client(std::string_view node_id) const { return has_role(node_id, Role::Client); }

    /// False for unknown nodes as well as bad signatures.
    bool verify(std::string_view node_id, ByteView message, ByteView signature) const;

    std::size_t size() const noexcept { return nodes_.size(); }
    std::vector<const NodeIdentity*> nodes_with_role(Role role) const;

private:
    Registry(SignatureScheme scheme, std::map<std::string, NodeIdentity, std::less<>> nodes)
        : scheme_(scheme), nodes_(std::move(nodes))
    {
    }

    SignatureScheme scheme_;
    std::map<std::string, NodeIdentity, std::less<>> nodes_;
};

/// k-of-n endorsement policy over a set of eligible endorsers.
struct EndorsementPolicy {
    std::uint32_t required = 1;
    std::set<std::string, std::less<>> eligible;

    /// Throws InvalidArgument unless 1 <= required <= |eligible|.
    void validate() const;
};

struct PolicyVerdict {
    bool satisfied = false;
    std::string reason;

    explicit operator bool() const noexcept { return satisfied; }
};

/// Satisfied iff at least `policy.required` distinct eligible endorsers carry
/// a valid signature over `signed_bytes`.
PolicyVerdict check_policy(const Registry& registry, const EndorsementPolicy& policy,
                           std::span<const Endorsement> endorsements, ByteView signed_bytes);

} // namespace eov
