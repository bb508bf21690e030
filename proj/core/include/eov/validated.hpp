// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

// Stream of validated blocks from a committer to endorsers and the block
// store.
//
//   sender -> VALIDATED_OPEN u32 len | committer_id
//   sender <- RESUME u64 next_expected
//   sender -> VALIDATED encoded block (flags filled in) ...
//
// The receiver closes the channel when it sees a gap; the sender reconnects
// and resumes from whatever the receiver reports.

#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <thread>

#include "eov/ledger.hpp"
#include "eov/transport.hpp"

namespace eov {

/// Where committed blocks go after commit.
class BlockSink {
public:
    virtual ~BlockSink() = default;
    /// Must not block on the receiver; the committer's commit step calls this.
    virtual void publish(std::uint64_t number, std::shared_ptr<const Bytes> encoded) = 0;
    /// Best effort wait until everything published so far was handed over.
    virtual void flush(std::chrono::milliseconds timeout) { (void)timeout; }
};

/// In-process sink, mostly for tests and mocks.
class CallbackSink final : public BlockSink {
public:
    explicit CallbackSink(std::function<void(std::uint64_t, const Bytes&)> fn) : fn_(std::move(fn)) {}
    void publish(std::uint64_t number, std::shared_ptr<const Bytes> encoded) override { fn_(number, *encoded); }

private:
    std::function<void(std::uint64_t, const Bytes&)> fn_;
};

/// Sink that discards everything (the mocked endorser/store of the peer
/// experiments).
class NullSink final : public BlockSink {
public:
    void publish(std::uint64_t, std::shared_ptr<const Bytes>) override {}
};

/// Pushes blocks to a remote receiver on its own thread, reconnecting with
/// exponential backoff. Keeps the last `retained` blocks for resends.
class RemoteSink final : public BlockSink {
public:
    RemoteSink(const Transport& transport, std::string target_node, std::string committer_id,
               std::size_t retained = 256);
    ~RemoteSink() override;

    void publish(std::uint64_t number, std::shared_ptr<const Bytes> encoded) override;
    void flush(std::chrono::milliseconds timeout) override;

    std::uint64_t reconnects() const noexcept { return reconnects_; }
    const std::string& target() const noexcept { return target_; }

private:
    void run();

    const Transport& transport_;
    std::string target_;
    std::string committer_id_;
    std::size_t retained_;

    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::pair<std::uint64_t, std::shared_ptr<const Bytes>>> blocks_;
    std::uint64_t sent_upto_ = 0; // highest block number handed to the channel
    bool stopping_ = false;
    std::unique_ptr<Channel> channel_;
    std::atomic<std::uint64_t> reconnects_{0};
    std::thread thread_;
};

/// Receiver side. `next_expected` reports the next block number the receiver
/// wants; `apply` gets blocks strictly in order. Returns when the channel
/// closes or a gap is seen.
void serve_validated_stream(Channel& channel, const std::function<std::uint64_t()>& next_expected,
                            const std::function<void(const Block&, ByteView)>& apply);

} // namespace eov
