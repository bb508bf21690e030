// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "eov/validated.hpp"

#include <spdlog/spdlog.h>

#include "eov/ordering_log.hpp"

namespace eov {

RemoteSink::RemoteSink(const Transport& transport, std::string target_node, std::string committer_id,
                       std::size_t retained)
    : transport_(transport),
      target_(std::move(target_node)),
      committer_id_(std::move(committer_id)),
      retained_(std::max<std::size_t>(retained, 1))
{
    thread_ = std::thread([this] { run(); });
}

RemoteSink::~RemoteSink()
{
    {
        std::lock_guard lock(mu_);
        stopping_ = true;
        if (channel_) {
            channel_->close();
        }
    }
    cv_.notify_all();
    thread_.join();
}

void RemoteSink::publish(std::uint64_t number, std::shared_ptr<const Bytes> encoded)
{
    {
        std::lock_guard lock(mu_);
        blocks_.emplace_back(number, std::move(encoded));
        while (blocks_.size() > retained_ && blocks_.front().first <= sent_upto_) {
            blocks_.pop_front();
        }
    }
    cv_.notify_all();
}

void RemoteSink::flush(std::chrono::milliseconds timeout)
{
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, timeout, [&] { return blocks_.empty() || sent_upto_ >= blocks_.back().first; });
}

void RemoteSink::run()
{
    auto backoff = std::chrono::milliseconds(10);
    bool warned_hole = false;
    for (;;) {
        std::unique_ptr<Channel> fresh;
        bool connected;
        {
            std::lock_guard lock(mu_);
            if (stopping_) {
                return;
            }
            connected = channel_ != nullptr;
        }
        if (!connected) {
            try {
                fresh = transport_.connect(target_);
                Bytes open;
                ByteWriter(open).prefixed(committer_id_);
                fresh->send(MsgType::ValidatedOpen, open);
                Message m = fresh->recv();
                if (m.kind() == MsgType::Error) {
                    throw_error_message(m);
                }
                if (m.kind() != MsgType::Resume) {
                    fail(Errc::MalformedFrame, "expected RESUME");
                }
                std::uint64_t next = ByteReader(m.body).u64();
                std::lock_guard lock(mu_);
                if (stopping_) {
                    return;
                }
                channel_ = std::move(fresh);
                sent_upto_ = next == 0 ? 0 : next - 1;
                if (!blocks_.empty() && blocks_.front().first > next && !warned_hole) {
                    spdlog::error("sink {}: receiver wants block {} but only {}.. retained", target_, next,
                                  blocks_.front().first);
                    warned_hole = true;
                }
                backoff = std::chrono::milliseconds(10);
            } catch (const Error& e) {
                ++reconnects_;
                spdlog::warn("sink {}: {}; retrying in {} ms", target_, e.what(), backoff.count());
                std::unique_lock lock(mu_);
                cv_.wait_for(lock, backoff, [&] { return stopping_; });
                backoff = std::min(backoff * 2, std::chrono::milliseconds(1000));
                continue;
            }
        }

        std::shared_ptr<const Bytes> block;
        std::uint64_t number = 0;
        Channel* ch;
        {
            std::unique_lock lock(mu_);
            cv_.wait(lock, [&] { return stopping_ || (!blocks_.empty() && blocks_.back().first > sent_upto_); });
            if (stopping_) {
                return;
            }
            for (auto& [n, b] : blocks_) {
                if (n > sent_upto_) {
                    number = n;
                    block = b;
                    break;
                }
            }
            ch = channel_.get();
        }
        try {
            ch->send(MsgType::Validated, *block);
            std::lock_guard lock(mu_);
            sent_upto_ = number;
        } catch (const Error& e) {
            spdlog::warn("sink {}: send of block {} failed: {}", target_, number, e.what());
            std::lock_guard lock(mu_);
            channel_.reset();
        }
        cv_.notify_all();
    }
}

void serve_validated_stream(Channel& channel, const std::function<std::uint64_t()>& next_expected,
                            const std::function<void(const Block&, ByteView)>& apply)
{
    Bytes resume;
    ByteWriter(resume).u64(next_expected());
    channel.send(MsgType::Resume, resume);
    for (;;) {
        Message msg = channel.recv();
        if (msg.kind() != MsgType::Validated) {
            spdlog::warn("validated stream: unexpected message type {}", msg.type);
            channel.close();
            return;
        }
        Block block = decode_block(msg.body);
        std::uint64_t want = next_expected();
        if (block.number() < want) {
            continue; // already applied
        }
        if (block.number() > want) {
            spdlog::warn("validated stream: got block {} while expecting {}, closing", block.number(), want);
            channel.close();
            return;
        }
        apply(block, msg.body);
    }
}

} // namespace eov
