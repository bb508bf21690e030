// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

// Single-node total-order log reached over the transport.
//
//   PUBLISH   u32 chan_len | chan | u32 len | payload   -> OFFSET u64
//   SUBSCRIBE u32 chan_len | chan | u64 from            -> RECORD* (u64 offset | u32 len | payload)
//
// Failures come back as ERROR u16 errc | u32 len | message.

#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "eov/transport.hpp"

namespace eov {

struct LogRecord {
    std::uint64_t offset = 0;
    Bytes payload;
};

/// Storage engine behind the service. Offsets are dense from 0 per channel.
/// When a directory is given every record is also appended to
/// `<dir>/<channel>.log` as u32 crc32 | u32 len | payload.
class LogStore {
public:
    explicit LogStore(std::filesystem::path dir = {});
    ~LogStore();

    std::uint64_t append(std::string_view channel, ByteView payload);

    /// Copies up to `max` records starting at `from`, waiting up to `wait`
    /// for at least one. Returns an empty vector on timeout or shutdown.
    std::vector<LogRecord> read(std::string_view channel, std::uint64_t from, std::size_t max,
                                std::chrono::milliseconds wait);

    std::uint64_t size(std::string_view channel) const;
    void shutdown();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

class OrderingLogService {
public:
    OrderingLogService(Transport& transport, std::string node_id, std::string address,
                       std::filesystem::path dir = {});
    ~OrderingLogService();

    OrderingLogService(const OrderingLogService&) = delete;
    OrderingLogService& operator=(const OrderingLogService&) = delete;

    void start();
    void stop();

    /// Fault injection: while set, publishes fail and subscriptions end with
    /// LogUnavailable.
    void set_unavailable(bool unavailable) { unavailable_ = unavailable; }

    LogStore& store() { return store_; }
    std::string address() const;

private:
    void accept_loop();
    void serve(std::shared_ptr<Channel> channel);
    void stream(Channel& channel, const std::string& channel_name, std::uint64_t from);

    Transport& transport_;
    std::string node_id_;
    std::string address_;
    LogStore store_;
    std::unique_ptr<Listener> listener_;
    std::thread acceptor_;
    std::mutex conns_mu_;
    std::vector<std::shared_ptr<Channel>> conns_;
    std::vector<std::thread> workers_;
    std::atomic<bool> unavailable_{false};
    std::atomic<bool> stopping_{false};
};

Bytes encode_error(Errc code, std::string_view message);
/// Throws the Error carried by an ERROR message.
[[noreturn]] void throw_error_message(const Message& msg);

class LogSubscription {
public:
    explicit LogSubscription(std::unique_ptr<Channel> channel) : channel_(std::move(channel)) {}
    ~LogSubscription() { close(); }

    /// Blocks for the next record. Throws LogUnavailable if the log fails.
    LogRecord next();
    std::optional<LogRecord> next_for(std::chrono::milliseconds timeout);
    void close() { channel_->close(); }

private:
    LogRecord parse(const Message& msg);
    std::unique_ptr<Channel> channel_;
};

/// Thread-safe publisher. Concurrent publishes use separate pooled channels.
class OrderingLogClient {
public:
    OrderingLogClient(const Transport& transport, std::string log_node);
    ~OrderingLogClient();

    std::uint64_t publish(std::string_view channel, ByteView payload);
    std::unique_ptr<LogSubscription> subscribe(std::string_view channel, std::uint64_t from);

private:
    std::unique_ptr<Channel> checkout();
    void checkin(std::unique_ptr<Channel> ch);

    const Transport& transport_;
    std::string log_node_;
    std::mutex mu_;
    std::vector<std::unique_ptr<Channel>> idle_;
};

} // namespace eov
