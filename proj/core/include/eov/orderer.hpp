// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

// Ordering node: admits endorsed envelopes, orders them through the ordering
// log, cuts and signs blocks and streams them to peers.
//
//   SUBMIT  u64 req_id | envelope          -> ACK u64 req_id | u64 offset
//                                           | REJECT u64 req_id | u8 code
//   DELIVER u64 from_block                  -> BLOCK* (encoded block)

#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <set>
#include <thread>
#include <variant>

#include "eov/common/sync.hpp"
#include "eov/identity.hpp"
#include "eov/ledger.hpp"
#include "eov/ordering_log.hpp"

namespace eov {

struct OrdererConfig {
    bool opt_o1 = false; // publish bare tx_ids, keep payloads locally
    bool opt_o2 = false; // concurrent intake
    std::uint32_t max_block_txs = 100;
    std::chrono::milliseconds block_timeout{100};
    std::uint32_t intake_pool = 2 * hardware_threads();
    std::string channel = "ch0";
    /// Blocks kept in memory for DELIVER requests that start in the past.
    std::size_t retained_blocks = 256;

    void validate() const;
};

enum class RejectCode : std::uint8_t {
    Unauthorized = 1,
    Malformed = 2,
    Duplicate = 3,
    LogUnavailable = 4,
};

std::string_view to_string(RejectCode code) noexcept;

struct SubmitAck {
    std::uint64_t offset = 0;
};
using SubmitResult = std::variant<SubmitAck, RejectCode>;

/// tx_id -> envelope bytes for payloads whose ID is in flight through the log.
class PayloadTable {
public:
    /// False if tx_id is already present.
    bool insert(std::string tx_id, Bytes envelope);
    std::optional<Bytes> take(std::string_view tx_id);
    bool erase(std::string_view tx_id);
    std::size_t size() const;

private:
    static constexpr std::size_t kShards = 32;
    struct Shard {
        mutable std::mutex mu;
        std::map<std::string, Bytes, std::less<>> entries;
    };
    Shard& shard_for(std::string_view tx_id);
    Shard shards_[kShards];
};

/// Fixed window of recent encoded blocks plus blocking readers.
class BlockWindow {
public:
    explicit BlockWindow(std::size_t retained) : retained_(retained) {}

    void push(std::uint64_t number, std::shared_ptr<const Bytes> encoded);
    /// Next block at or after `number`; nullptr on close. Throws NotFound if
    /// `number` has already left the window.
    std::shared_ptr<const Bytes> wait(std::uint64_t number);
    std::shared_ptr<const Bytes> wait_for(std::uint64_t number, std::chrono::milliseconds timeout);
    void close();
    std::uint64_t next_number() const;

private:
    std::shared_ptr<const Bytes> get_locked(std::uint64_t number) const;

    std::size_t retained_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::shared_ptr<const Bytes>> blocks_;
    std::uint64_t first_ = 1;
    bool closed_ = false;
};

class Orderer {
public:
    Orderer(Transport& transport, std::string node_id, std::string address, std::string log_node,
            std::shared_ptr<const Registry> registry, Signer signer, OrdererConfig config);
    ~Orderer();

    Orderer(const Orderer&) = delete;
    Orderer& operator=(const Orderer&) = delete;

    void start();
    void stop();

    /// The intake step, also callable directly. Thread-safe.
    SubmitResult handle_submit(ByteView envelope);

    const OrdererConfig& config() const noexcept { return config_; }
    std::uint64_t height() const { return window_.next_number() - 1; }
    /// Set when assembly hit an unrecoverable error (e.g. UnknownTxId).
    std::optional<std::string> fatal_error() const;

    /// Observers for tests: bytes published to the log for each admitted tx.
    void on_publish(std::function<void(ByteView)> hook) { publish_hook_ = std::move(hook); }

private:
    struct Conn;

    void accept_loop();
    void serve(std::shared_ptr<Conn> conn);
    void deliver(Conn& conn, std::uint64_t from);
    void assemble();
    void cut(std::vector<Bytes>& pending);
    void set_fatal(const std::string& msg);

    Transport& transport_;
    std::string node_id_;
    std::string address_;
    std::shared_ptr<const Registry> registry_;
    Signer signer_;
    OrdererConfig config_;
    OrderingLogClient log_;

    PayloadTable payloads_;
    std::mutex pending_mu_;
    std::set<std::string, std::less<>> pending_ids_;
    std::mutex serial_mu_; // baseline intake: one submission at a time

    std::unique_ptr<ThreadPool> intake_;
    BlockWindow window_;
    BlockHeader last_header_;

    std::unique_ptr<Listener> listener_;
    std::thread acceptor_;
    std::thread assembler_;
    std::unique_ptr<LogSubscription> subscription_;
    std::mutex conns_mu_;
    std::vector<std::shared_ptr<Conn>> conns_;
    std::vector<std::thread> workers_;
    std::atomic<bool> stopping_{false};
    mutable std::mutex fatal_mu_;
    std::optional<std::string> fatal_;
    std::function<void(ByteView)> publish_hook_;
};

/// Client side of SUBMIT. One session = one channel; requests may be
/// pipelined, responses come back in completion order.
class SubmitSession {
public:
    SubmitSession(const Transport& transport, const std::string& orderer_node);

    std::uint64_t send(ByteView envelope);
    /// Blocks for the next response.
    std::pair<std::uint64_t, SubmitResult> receive();
    /// Convenience: send then wait for that response (no other requests in flight).
    SubmitResult submit(ByteView envelope);
    void close() { channel_->close(); }

private:
    std::unique_ptr<Channel> channel_;
    std::uint64_t next_req_ = 1;
    Bytes buf_;
};

/// DELIVER stream of encoded blocks.
class DeliverStream {
public:
    DeliverStream(const Transport& transport, const std::string& orderer_node, std::uint64_t from);
    Bytes next();
    std::optional<Bytes> next_for(std::chrono::milliseconds timeout);
    void close() { channel_->close(); }

private:
    std::unique_ptr<Channel> channel_;
};

} // namespace eov
