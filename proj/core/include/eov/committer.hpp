// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

// Committing peer: block verification, transaction validation pipeline,
// sequential MVCC commit and fan-out of committed blocks.

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <semaphore>
#include <thread>

#include "eov/blockstore.hpp"
#include "eov/common/sync.hpp"
#include "eov/identity.hpp"
#include "eov/orderer.hpp"
#include "eov/ledger.hpp"
#include "eov/statestore.hpp"
#include "eov/unmarshal_cache.hpp"
#include "eov/validated.hpp"

namespace eov {

struct PipelineConfig {
    std::uint32_t block_shepherds = 31;
    std::uint32_t tx_validators = 25;
    bool opt_p1 = false; // hash-table world state
    bool opt_p2 = false; // multi-block pipeline, persistence offloaded to the block store
    bool opt_p3 = false; // unmarshal cache

    void validate() const;

    /// The 31/25 optimum measured on 24 hardware threads, scaled to `hw`
    /// threads and raised until the two pools together reach 2 x hw.
    static PipelineConfig scaled_to(unsigned hw);
};

struct CommitResult {
    std::uint64_t block_number = 0;
    std::vector<ValidationFlag> flags;
    std::chrono::steady_clock::time_point delivered;
    std::chrono::steady_clock::time_point committed;
};

/// Layer access for one transaction. With a cache entry every layer is
/// decoded at most once per slot occupancy (modulo races); without one each
/// call decodes from the raw envelope bytes again.
class TxLayers {
public:
    TxLayers(ByteView envelope_bytes, CachedTx* cached, UnmarshalCache* stats)
        : bytes_(envelope_bytes), cached_(cached), stats_(stats)
    {
    }

    const RawEnvelope& envelope();
    const PayloadLayer& payload();
    const TxHeader& header();
    const ReadWriteSet& rwset();
    const std::vector<Endorsement>& endorsements();

private:
    template <typename T, typename F>
    const T& via_cache(LazyCell<T>& cell, F&& make);

    ByteView bytes_;
    CachedTx* cached_;
    UnmarshalCache* stats_;
    std::optional<RawEnvelope> env_;
    std::optional<PayloadLayer> payload_;
    std::optional<TxHeader> header_;
    std::optional<ReadWriteSet> rwset_;
    std::optional<std::vector<Endorsement>> endorsements_;
};

/// Pre-MVCC checks: syntax and tx_id derivation, client signature,
/// endorsement policy over rwset bytes plus padding.
ValidationFlag validate_tx(const Registry& registry, const EndorsementPolicy& policy, TxLayers& tx);
ValidationFlag validate_tx(const Registry& registry, const EndorsementPolicy& policy, ByteView envelope);

/// Sequential MVCC check and apply for one block; `rwset_of(i)` supplies the
/// read-write set of tx i (only asked for txs whose pre-flag is Valid).
std::vector<ValidationFlag> mvcc_commit(StateStore& state, std::uint64_t block_number,
                                        std::span<const ValidationFlag> pre_flags,
                                        const std::function<const ReadWriteSet&(std::uint32_t)>& rwset_of);
std::vector<ValidationFlag> mvcc_commit(StateStore& state, const Block& block,
                                        std::span<const ValidationFlag> pre_flags);

class Committer {
public:
    Committer(std::shared_ptr<const Registry> registry, PipelineConfig config, std::string orderer_id,
              EndorsementPolicy policy, std::shared_ptr<StateStore> state,
              BlockHeader genesis = make_genesis().header);
    ~Committer();

    Committer(const Committer&) = delete;
    Committer& operator=(const Committer&) = delete;

    /// Persistence target. With opt_p2 the remote sink receives committed
    /// blocks asynchronously; without it the local store is appended inline
    /// as part of the commit step. Either may be null.
    void set_store(std::shared_ptr<BlockStore> local, std::shared_ptr<BlockSink> remote);
    void add_sink(std::shared_ptr<BlockSink> sink);
    void on_commit(std::function<void(const CommitResult&)> fn) { on_commit_ = std::move(fn); }

    /// Verifies and admits one encoded block. Returns false when the block is
    /// discarded. Must be called from a single thread. Blocks while the
    /// pipeline is full; with opt_p2 off it returns after the commit.
    bool deliver(ByteView encoded);

    /// Waits until every admitted block is committed. Rethrows a pipeline
    /// failure.
    void drain();

    std::uint64_t last_accepted() const { return accepted_.load(); }
    std::uint64_t committed_height() const { return committed_.load(); }
    std::uint64_t discarded() const { return discarded_.load(); }
    StateStore& state() { return *state_; }
    const PipelineConfig& config() const noexcept { return config_; }
    const UnmarshalCache* cache() const { return cache_.get(); }

private:
    struct Job;

    std::optional<Block> verify_block(ByteView encoded);
    void pre_validate(Job& job);
    void commit(Job& job);
    void shepherd_loop();
    void commit_loop();
    void check_fatal();
    void set_fatal(std::exception_ptr e);

    std::shared_ptr<const Registry> registry_;
    PipelineConfig config_;
    std::string orderer_id_;
    EndorsementPolicy policy_;
    std::shared_ptr<StateStore> state_;
    BlockHeader last_accepted_;

    std::shared_ptr<BlockStore> local_store_;
    std::shared_ptr<BlockSink> remote_store_;
    std::vector<std::shared_ptr<BlockSink>> sinks_;
    std::function<void(const CommitResult&)> on_commit_;

    std::unique_ptr<UnmarshalCache> cache_;
    std::unique_ptr<ThreadPool> validators_;
    std::unique_ptr<std::counting_semaphore<>> admission_;
    BlockingQueue<std::unique_ptr<Job>> to_shepherd_;
    std::vector<std::thread> shepherds_;
    std::thread committer_thread_;

    std::mutex mu_;
    std::condition_variable cv_;
    std::map<std::uint64_t, std::unique_ptr<Job>> ready_;
    bool stopping_ = false;
    std::exception_ptr fatal_;

    std::atomic<std::uint64_t> accepted_{0};
    std::atomic<std::uint64_t> committed_{0};
    std::atomic<std::uint64_t> discarded_{0};
};

/// Committer attached to an orderer DELIVER stream. Discarded blocks make it
/// reconnect and ask for redelivery from the first missing block.
class CommitterNode {
public:
    CommitterNode(const Transport& transport, std::string orderer_node, std::shared_ptr<Committer> committer);
    ~CommitterNode();

    void start();
    void stop();
    Committer& committer() { return *committer_; }
    std::uint64_t redeliveries() const { return redeliveries_.load(); }
    std::optional<std::string> error() const;

private:
    void run();

    const Transport& transport_;
    std::string orderer_node_;
    std::shared_ptr<Committer> committer_;
    std::thread thread_;
    std::atomic<bool> stopping_{false};
    std::mutex mu_;
    std::unique_ptr<DeliverStream> stream_;
    std::atomic<std::uint64_t> redeliveries_{0};
    mutable std::mutex err_mu_;
    std::optional<std::string> error_;
};

} // namespace eov
