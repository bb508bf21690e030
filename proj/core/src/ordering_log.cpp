// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "eov/ordering_log.hpp"

#include <fcntl.h>
#include <sys/uio.h>
#include <unistd.h>
#include <zlib.h>

#include <condition_variable>
#include <deque>
#include <map>

#include <spdlog/spdlog.h>

namespace eov {

Bytes encode_error(Errc code, std::string_view message)
{
    Bytes out;
    ByteWriter w(out);
    w.u16(static_cast<std::uint16_t>(code));
    w.prefixed(message);
    return out;
}

void throw_error_message(const Message& msg)
{
    ByteReader r(msg.body);
    auto code = static_cast<Errc>(r.u16());
    throw Error(code, r.prefixed_string());
}

// ---------------------------------------------------------------------------

struct LogStore::Impl {
    struct Chan {
        std::deque<Bytes> records;
        int fd = -1;
    };

    std::filesystem::path dir;
    mutable std::mutex mu;
    std::condition_variable cv;
    std::map<std::string, std::unique_ptr<Chan>, std::less<>> channels;
    bool stopped = false;

    ~Impl()
    {
        for (auto& [name, ch] : channels) {
            if (ch->fd >= 0) {
                ::close(ch->fd);
            }
        }
    }

    Chan& chan_locked(std::string_view name)
    {
        auto it = channels.find(name);
        if (it != channels.end()) {
            return *it->second;
        }
        auto ch = std::make_unique<Chan>();
        if (!dir.empty()) {
            auto path = dir / (std::string(name) + ".log");
            ch->fd = ::open(path.c_str(), O_CREAT | O_WRONLY | O_TRUNC | O_CLOEXEC, 0644);
            if (ch->fd < 0) {
                fail(Errc::StorageFailure, "cannot open " + path.string());
            }
        }
        return *channels.emplace(std::string(name), std::move(ch)).first->second;
    }
};

LogStore::LogStore(std::filesystem::path dir) : impl_(std::make_unique<Impl>())
{
    impl_->dir = std::move(dir);
    if (!impl_->dir.empty()) {
        std::filesystem::create_directories(impl_->dir);
    }
}

LogStore::~LogStore() = default;

std::uint64_t LogStore::append(std::string_view channel, ByteView payload)
{
    std::uint64_t offset;
    {
        std::lock_guard lock(impl_->mu);
        auto& ch = impl_->chan_locked(channel);
        if (ch.fd >= 0) {
            std::uint8_t head[8];
            auto crc = static_cast<std::uint32_t>(
                ::crc32(0, payload.data(), static_cast<uInt>(payload.size())));
            auto len = static_cast<std::uint32_t>(payload.size());
            std::memcpy(head, &crc, 4);
            std::memcpy(head + 4, &len, 4);
            iovec iov[2] = {{head, 8}, {const_cast<std::uint8_t*>(payload.data()), payload.size()}};
            if (::writev(ch.fd, iov, 2) != static_cast<ssize_t>(8 + payload.size())) {
                fail(Errc::StorageFailure, "log append failed");
            }
        }
        offset = ch.records.size();
        ch.records.emplace_back(payload.begin(), payload.end());
    }
    impl_->cv.notify_all();
    return offset;
}

std::vector<LogRecord> LogStore::read(std::string_view channel, std::uint64_t from, std::size_t max,
                                      std::chrono::milliseconds wait)
{
    std::unique_lock lock(impl_->mu);
    auto& ch = impl_->chan_locked(channel);
    impl_->cv.wait_for(lock, wait, [&] { return impl_->stopped || ch.records.size() > from; });
    std::vector<LogRecord> out;
    for (std::uint64_t i = from; i < ch.records.size() && out.size() < max; ++i) {
        out.push_back({i, ch.records[i]});
    }
    return out;
}

std::uint64_t LogStore::size(std::string_view channel) const
{
    std::lock_guard lock(impl_->mu);
    auto it = impl_->channels.find(channel);
    return it == impl_->channels.end() ? 0 : it->second->records.size();
}

void LogStore::shutdown()
{
    {
        std::lock_guard lock(impl_->mu);
        impl_->stopped = true;
    }
    impl_->cv.notify_all();
}

// ---------------------------------------------------------------------------

OrderingLogService::OrderingLogService(Transport& transport, std::string node_id, std::string address,
                                       std::filesystem::path dir)
    : transport_(transport), node_id_(std::move(node_id)), address_(std::move(address)), store_(std::move(dir))
{
}

OrderingLogService::~OrderingLogService() { stop(); }

void OrderingLogService::start()
{
    listener_ = transport_.listen(node_id_, address_);
    address_ = listener_->address();
    acceptor_ = std::thread([this] { accept_loop(); });
}

std::string OrderingLogService::address() const { return address_; }

void OrderingLogService::stop()
{
    if (stopping_.exchange(true)) {
        return;
    }
    store_.shutdown();
    if (listener_) {
        listener_->close();
    }
    if (acceptor_.joinable()) {
        acceptor_.join();
    }
    std::vector<std::thread> workers;
    {
        std::lock_guard lock(conns_mu_);
        for (auto& c : conns_) {
            c->close();
        }
        workers.swap(workers_);
    }
    for (auto& t : workers) {
        t.join();
    }
}

void OrderingLogService::accept_loop()
{
    while (auto ch = listener_->accept()) {
        std::shared_ptr<Channel> shared(std::move(ch));
        std::lock_guard lock(conns_mu_);
        if (stopping_) {
            shared->close();
            break;
        }
        conns_.push_back(shared);
        workers_.emplace_back([this, shared] { serve(shared); });
    }
}

void OrderingLogService::serve(std::shared_ptr<Channel> channel)
{
    try {
        for (;;) {
            Message msg = channel->recv();
            ByteReader r(msg.body);
            switch (msg.kind()) {
            case MsgType::Publish: {
                auto chan = as_chars(r.prefixed());
                auto payload = r.prefixed();
                if (unavailable_) {
                    channel->send(MsgType::Error, encode_error(Errc::LogUnavailable, "log unavailable"));
                    break;
                }
                std::uint64_t off = store_.append(chan, payload);
                Bytes reply;
                ByteWriter(reply).u64(off);
                channel->send(MsgType::Offset, reply);
                break;
            }
            case MsgType::Subscribe: {
                std::string chan(as_chars(r.prefixed()));
                std::uint64_t from = r.u64();
                stream(*channel, chan, from);
                return;
            }
            default:
                channel->send(MsgType::Error, encode_error(Errc::MalformedFrame, "unexpected message"));
            }
        }
    } catch (const Error& e) {
        if (e.code() != Errc::ChannelClosed) {
            spdlog::warn("ordering log connection ended: {}", e.what());
        }
    }
}

void OrderingLogService::stream(Channel& channel, const std::string& chan, std::uint64_t from)
{
    std::uint64_t next = from;
    Bytes body;
    while (!stopping_) {
        if (unavailable_) {
            channel.send(MsgType::Error, encode_error(Errc::LogUnavailable, "log unavailable"));
            return;
        }
        auto records = store_.read(chan, next, 256, std::chrono::milliseconds(50));
        if (records.empty()) {
            // subscribers never send after SUBSCRIBE; this only notices a close
            channel.recv_for(std::chrono::milliseconds(0));
            continue;
        }
        for (auto& rec : records) {
            body.clear();
            body.reserve(12 + rec.payload.size());
            ByteWriter w(body);
            w.u64(rec.offset);
            w.prefixed(rec.payload);
            channel.send(MsgType::Record, body);
            next = rec.offset + 1;
        }
    }
}

// ---------------------------------------------------------------------------

LogRecord LogSubscription::parse(const Message& msg)
{
    if (msg.kind() == MsgType::Error) {
        throw_error_message(msg);
    }
    if (msg.kind() != MsgType::Record) {
        fail(Errc::MalformedFrame, "expected RECORD");
    }
    ByteReader r(msg.body);
    LogRecord rec;
    rec.offset = r.u64();
    rec.payload = r.prefixed_bytes();
    return rec;
}

LogRecord LogSubscription::next()
{
    try {
        return parse(channel_->recv());
    } catch (const Error& e) {
        if (e.code() == Errc::ChannelClosed) {
            fail(Errc::LogUnavailable, "log subscription closed");
        }
        throw;
    }
}

std::optional<LogRecord> LogSubscription::next_for(std::chrono::milliseconds timeout)
{
    try {
        auto msg = channel_->recv_for(timeout);
        if (!msg) {
            return std::nullopt;
        }
        return parse(*msg);
    } catch (const Error& e) {
        if (e.code() == Errc::ChannelClosed) {
            fail(Errc::LogUnavailable, "log subscription closed");
        }
        throw;
    }
}

OrderingLogClient::OrderingLogClient(const Transport& transport, std::string log_node)
    : transport_(transport), log_node_(std::move(log_node))
{
}

OrderingLogClient::~OrderingLogClient() = default;

std::unique_ptr<Channel> OrderingLogClient::checkout()
{
    {
        std::lock_guard lock(mu_);
        if (!idle_.empty()) {
            auto ch = std::move(idle_.back());
            idle_.pop_back();
            return ch;
        }
    }
    try {
        return transport_.connect(log_node_);
    } catch (const Error& e) {
        fail(Errc::LogUnavailable, e.what());
    }
}

void OrderingLogClient::checkin(std::unique_ptr<Channel> ch)
{
    std::lock_guard lock(mu_);
    idle_.push_back(std::move(ch));
}

std::uint64_t OrderingLogClient::publish(std::string_view channel, ByteView payload)
{
    auto ch = checkout();
    Bytes body;
    body.reserve(8 + channel.size() + payload.size());
    ByteWriter w(body);
    w.prefixed(channel);
    w.prefixed(payload);
    Message reply;
    try {
        ch->send(MsgType::Publish, body);
        reply = ch->recv();
    } catch (const Error& e) {
        if (e.code() == Errc::ChannelClosed) {
            fail(Errc::LogUnavailable, "log connection lost");
        }
        throw;
    }
    if (reply.kind() == MsgType::Error) {
        checkin(std::move(ch));
        throw_error_message(reply);
    }
    ByteReader r(reply.body);
    std::uint64_t off = r.u64();
    checkin(std::move(ch));
    return off;
}

std::unique_ptr<LogSubscription> OrderingLogClient::subscribe(std::string_view channel, std::uint64_t from)
{
    std::unique_ptr<Channel> ch;
    try {
        ch = transport_.connect(log_node_);
    } catch (const Error& e) {
        fail(Errc::LogUnavailable, e.what());
    }
    Bytes body;
    ByteWriter w(body);
    w.prefixed(channel);
    w.u64(from);
    ch->send(MsgType::Subscribe, body);
    return std::make_unique<LogSubscription>(std::move(ch));
}

} // namespace eov
