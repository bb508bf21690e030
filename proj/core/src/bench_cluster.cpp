// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "eov/bench/cluster.hpp"

namespace eov::bench {

PipelineConfig pipeline_for(const Toggles& t)
{
    PipelineConfig c = PipelineConfig::scaled_to(hardware_threads());
    if (t.shepherds) {
        c.block_shepherds = *t.shepherds;
    }
    if (t.validators) {
        c.tx_validators = *t.validators;
    }
    c.opt_p1 = t.p1;
    c.opt_p2 = t.p2;
    c.opt_p3 = t.p3;
    c.validate();
    return c;
}

Cluster::Cluster(Transport& transport, Topology topology, ClusterOptions options, Selector select)
    : transport_(transport),
      topology_(std::move(topology)),
      options_(std::move(options)),
      select_(select ? std::move(select) : Selector([](const TopologyNode& n) { return !n.external(); })),
      ids_(Identities::from(topology_))
{
}

Cluster::~Cluster() { stop(); }

void Cluster::start()
{
    started_ = true;
    for (const auto& n : topology_.nodes) {
        if (!select_(n) && !n.address.empty()) {
            transport_.set_address(n.id, n.address);
        }
    }
    auto dir_of = [&](const std::string& id) {
        auto d = options_.dir / id;
        std::filesystem::create_directories(d);
        return d;
    };
    const auto& log_node = topology_.only("log");
    const auto& orderer_node = topology_.only("orderer");
    const auto& store_node = topology_.only("blockstore");
    const auto& committer_node = topology_.only("committer");

    if (select_(log_node)) {
        log_ = std::make_unique<OrderingLogService>(transport_, log_node.id, log_node.address, dir_of(log_node.id));
        log_->start();
    }
    if (select_(store_node)) {
        store_ = std::make_shared<BlockStore>(dir_of(store_node.id));
        store_service_ = std::make_unique<BlockStoreService>(transport_, store_node.id, store_node.address, store_);
        store_service_->start();
    }
    StateMap genesis = genesis_accounts(options_.accounts);
    for (const auto* n : topology_.with_role("endorser")) {
        if (!select_(*n)) {
            continue;
        }
        auto e = std::make_shared<Endorser>(n->id, Signer(topology_.keys_of(n->id)));
        e->load_genesis(genesis);
        auto svc = std::make_unique<EndorserService>(transport_, n->address, e);
        svc->start();
        endorsers_.push_back(std::move(e));
        endorser_services_.push_back(std::move(svc));
    }
    if (select_(orderer_node)) {
        OrdererConfig oc;
        oc.opt_o1 = options_.toggles.o1;
        oc.opt_o2 = options_.toggles.o2;
        oc.max_block_txs = options_.block_size;
        oc.block_timeout = options_.block_timeout;
        if (options_.intake_pool) {
            oc.intake_pool = *options_.intake_pool;
        }
        oc.validate();
        orderer_ = std::make_unique<Orderer>(transport_, orderer_node.id, orderer_node.address, log_node.id,
                                             ids_.registry, Signer(topology_.keys_of(orderer_node.id)), oc);
        orderer_->start();
    }
    if (select_(committer_node)) {
        const Toggles& t = options_.toggles;
        std::shared_ptr<StateStore> state =
            make_state_store(t.backend(), dir_of(committer_node.id) / "state");
        state->load(genesis);
        committer_ = std::make_shared<Committer>(ids_.registry, pipeline_for(t), orderer_node.id, ids_.policy(),
                                                 std::move(state));
        if (t.p2) {
            auto remote = std::make_shared<RemoteSink>(transport_, store_node.id, committer_node.id);
            sinks_.push_back(remote);
            committer_->set_store(nullptr, remote);
        } else {
            committer_local_ = std::make_shared<BlockStore>(dir_of(committer_node.id) / "blocks");
            committer_->set_store(committer_local_, nullptr);
        }
        for (const auto& e : ids_.endorser_ids) {
            auto sink = std::make_shared<RemoteSink>(transport_, e, committer_node.id);
            sinks_.push_back(sink);
            committer_->add_sink(sink);
        }
        if (options_.on_commit) {
            committer_->on_commit(options_.on_commit);
        }
        committer_node_ = std::make_unique<CommitterNode>(transport_, orderer_node.id, committer_);
        committer_node_->start();
    }
}

void Cluster::stop()
{
    if (!started_) {
        return;
    }
    started_ = false;
    if (committer_node_) {
        committer_node_->stop();
    }
    committer_node_.reset();
    committer_.reset();
    sinks_.clear();
    if (orderer_) {
        orderer_->stop();
    }
    if (log_) {
        log_->stop();
    }
    for (auto& s : endorser_services_) {
        s->stop();
    }
    if (store_service_) {
        store_service_->stop();
    }
}

std::vector<std::string> Cluster::errors() const
{
    std::vector<std::string> out;
    if (orderer_) {
        if (auto e = orderer_->fatal_error()) {
            out.push_back("orderer: " + *e);
        }
    }
    if (committer_node_) {
        if (auto e = committer_node_->error()) {
            out.push_back("committer: " + *e);
        }
    }
    return out;
}

} // namespace eov::bench
