// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

// Starts the nodes of a topology inside this process. Nodes that are not
// selected (external ones, or everything but one id for `bench node`) only
// get their address registered so the others can reach them.

#pragma once

#include "eov/bench/experiment.hpp"
#include "eov/bench/workload.hpp"
#include "eov/blockstore.hpp"
#include "eov/committer.hpp"
#include "eov/endorser.hpp"
#include "eov/orderer.hpp"
#include "eov/ordering_log.hpp"
#include "eov/validated.hpp"

namespace eov::bench {

struct ClusterOptions {
    Toggles toggles;
    std::uint32_t block_size = 100;
    std::chrono::milliseconds block_timeout{100};
    std::optional<std::uint32_t> intake_pool;
    std::size_t accounts = kDefaultAccounts;
    std::filesystem::path dir; // per-node data lives in dir/<node id>
    std::function<void(const CommitResult&)> on_commit;
};

/// Pipeline settings for the toggles on this machine.
PipelineConfig pipeline_for(const Toggles& toggles);

class Cluster {
public:
    using Selector = std::function<bool(const TopologyNode&)>;

    /// Default selector: every node whose mode is inproc.
    Cluster(Transport& transport, Topology topology, ClusterOptions options, Selector select = {});
    ~Cluster();
    Cluster(const Cluster&) = delete;
    Cluster& operator=(const Cluster&) = delete;

    void start();
    void stop();

    const Topology& topology() const noexcept { return topology_; }
    const Identities& identities() const noexcept { return ids_; }

    // Null when the role is not hosted here.
    Orderer* orderer() { return orderer_.get(); }
    Committer* committer() { return committer_.get(); }
    CommitterNode* committer_node() { return committer_node_.get(); }
    BlockStore* committer_local_store() { return committer_local_.get(); }
    BlockStore* store() { return store_.get(); }
    const std::vector<std::shared_ptr<Endorser>>& endorsers() const noexcept { return endorsers_; }
    const std::vector<std::shared_ptr<RemoteSink>>& sinks() const noexcept { return sinks_; }

    /// Problems reported by hosted services, empty when healthy.
    std::vector<std::string> errors() const;

private:
    Transport& transport_;
    Topology topology_;
    ClusterOptions options_;
    Selector select_;
    Identities ids_;
    bool started_ = false;

    std::unique_ptr<OrderingLogService> log_;
    std::shared_ptr<BlockStore> store_;
    std::unique_ptr<BlockStoreService> store_service_;
    std::vector<std::shared_ptr<Endorser>> endorsers_;
    std::vector<std::unique_ptr<EndorserService>> endorser_services_;
    std::unique_ptr<Orderer> orderer_;
    std::shared_ptr<BlockStore> committer_local_;
    std::vector<std::shared_ptr<RemoteSink>> sinks_;
    std::shared_ptr<Committer> committer_;
    std::unique_ptr<CommitterNode> committer_node_;
};

} // namespace eov::bench
