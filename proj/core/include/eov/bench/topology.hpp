// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

// Topology files: plain-text key=value sections.
//
//   # comment
//   [global]
//   scheme = ed25519        # or mac
//   seed = 42               # keys derive from (seed, node id)
//
//   [node]
//   id = orderer0
//   role = orderer          # client | endorser | orderer | committer | blockstore | log
//   address = tcp://127.0.0.1:7050
//   mode = inproc           # inproc: started by the harness; external: started with `bench node`
//   public_key = <hex>      # optional, checked against the derived key

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "eov/identity.hpp"

namespace eov::bench {

struct TopologyNode {
    std::string id;
    std::string role; // identity role name or "log"
    std::string address;
    std::string mode = "inproc";
    std::optional<Bytes> public_key;

    bool external() const { return mode == "external"; }
};

struct Topology {
    SignatureScheme scheme = SignatureScheme::Ed25519;
    std::uint64_t seed = 42;
    std::vector<TopologyNode> nodes;

    /// Throws TopologyError on syntax errors, unknown keys, duplicate ids,
    /// missing required nodes or key mismatches.
    static Topology parse(std::string_view text);
    static Topology load(const std::filesystem::path& path);

    std::string to_text() const;

    const TopologyNode* find(std::string_view id) const;
    std::vector<const TopologyNode*> with_role(std::string_view role) const;
    const TopologyNode& only(std::string_view role) const;

    KeyPair keys_of(std::string_view id) const;
    std::shared_ptr<const Registry> registry() const;
};

/// Single-host layout: one log, orderer, committer and block store, the
/// given number of endorsers and one client.
Topology default_topology(SignatureScheme scheme, std::uint64_t seed, std::size_t endorsers,
                          const std::string& transport);

} // namespace eov::bench
