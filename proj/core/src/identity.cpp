// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "eov/identity.hpp"

namespace eov {

std::string_view to_string(Role role) noexcept
{
    switch (role) {
    case Role::Client: return "client";
    case Role::Endorser: return "endorser";
    case Role::Orderer: return "orderer";
    case Role::Committer: return "committer";
    case Role::BlockStore: return "blockstore";
    }
    return "unknown";
}

Role parse_role(std::string_view name)
{
    for (Role r : {Role::Client, Role::Endorser, Role::Orderer, Role::Committer, Role::BlockStore}) {
        if (to_string(r) == name) {
            return r;
        }
    }
    fail(Errc::InvalidArgument, "unknown role '" + std::string(name) + "'");
}

Registry::Builder& Registry::Builder::add(NodeIdentity identity)
{
    if (identity.node_id.empty()) {
        fail(Errc::InvalidArgument, "empty node id");
    }
    auto id = identity.node_id;
    if (!nodes_.emplace(id, std::move(identity)).second) {
        fail(Errc::InvalidArgument, "node '" + id + "' registered twice");
    }
    return *this;
}

std::shared_ptr<const Registry> Registry::Builder::build()
{
    return std::shared_ptr<const Registry>(new Registry(scheme_, std::move(nodes_)));
}

const NodeIdentity* Registry::find(std::string_view node_id) const
{
    auto it = nodes_.find(node_id);
    return it == nodes_.end() ? nullptr : &it->second;
}

bool Registry::has_role(std::string_view node_id, Role role) const
{
    const auto* n = find(node_id);
    return n != nullptr && n->role == role;
}

bool Registry::verify(std::string_view node_id, ByteView message, ByteView signature) const
{
    const auto* n = find(node_id);
    return n != nullptr && verify_signature(scheme_, n->public_key, message, signature);
}

std::vector<const NodeIdentity*> Registry::nodes_with_role(Role role) const
{
    std::vector<const NodeIdentity*> out;
    for (const auto& [id, node] : nodes_) {
        if (node.role == role) {
            out.push_back(&node);
        }
    }
    return out;
}

void EndorsementPolicy::validate() const
{
    if (required < 1 || required > eligible.size()) {
        fail(Errc::InvalidArgument, "endorsement policy needs 1 <= required <= |eligible|, got " +
                                        std::to_string(required) + " of " +
                                        std::to_string(eligible.size()));
    }
}

PolicyVerdict check_policy(const Registry& registry, const EndorsementPolicy& policy,
                           std::span<const Endorsement> endorsements, ByteView signed_bytes)
{
    std::set<std::string_view> satisfied_by;
    std::size_t ineligible = 0;
    std::size_t bad_sig = 0;
    for (const auto& e : endorsements) {
        if (!policy.eligible.contains(e.endorser)) {
            ++ineligible;
            continue;
        }
        if (satisfied_by.contains(e.endorser)) {
            continue;
        }
        if (!registry.verify(e.endorser, signed_bytes, e.signature)) {
            ++bad_sig;
            continue;
        }
        satisfied_by.insert(e.endorser);
        if (satisfied_by.size() >= policy.required) {
            return {true, {}};
        }
    }
    return {false, std::to_string(satisfied_by.size()) + " of " + std::to_string(policy.required) +
                       " required endorsements (" + std::to_string(bad_sig) + " bad signatures, " +
                       std::to_string(ineligible) + " ineligible)"};
}

} // namespace eov
