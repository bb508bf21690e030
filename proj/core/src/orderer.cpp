// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "eov/orderer.hpp"

#include <spdlog/spdlog.h>

namespace eov {

void OrdererConfig::validate() const
{
    if (max_block_txs < 1) {
        fail(Errc::InvalidArgument, "max_block_txs must be >= 1");
    }
    if (intake_pool < 1) {
        fail(Errc::InvalidArgument, "intake_pool must be >= 1");
    }
    if (block_timeout.count() <= 0) {
        fail(Errc::InvalidArgument, "block_timeout must be positive");
    }
}

std::string_view to_string(RejectCode code) noexcept
{
    switch (code) {
    case RejectCode::Unauthorized: return "RejectUnauthorized";
    case RejectCode::Malformed: return "RejectMalformed";
    case RejectCode::Duplicate: return "RejectDuplicate";
    case RejectCode::LogUnavailable: return "RejectLogUnavailable";
    }
    return "RejectUnknown";
}

// ---------------------------------------------------------------------------

PayloadTable::Shard& PayloadTable::shard_for(std::string_view tx_id)
{
    return shards_[std::hash<std::string_view>{}(tx_id) % kShards];
}

bool PayloadTable::insert(std::string tx_id, Bytes envelope)
{
    auto& s = shard_for(tx_id);
    std::lock_guard lock(s.mu);
    return s.entries.emplace(std::move(tx_id), std::move(envelope)).second;
}

std::optional<Bytes> PayloadTable::take(std::string_view tx_id)
{
    auto& s = shard_for(tx_id);
    std::lock_guard lock(s.mu);
    auto it = s.entries.find(tx_id);
    if (it == s.entries.end()) {
        return std::nullopt;
    }
    Bytes out = std::move(it->second);
    s.entries.erase(it);
    return out;
}

bool PayloadTable::erase(std::string_view tx_id)
{
    auto& s = shard_for(tx_id);
    std::lock_guard lock(s.mu);
    auto it = s.entries.find(tx_id);
    if (it == s.entries.end()) {
        return false;
    }
    s.entries.erase(it);
    return true;
}

std::size_t PayloadTable::size() const
{
    std::size_t n = 0;
    for (const auto& s : shards_) {
        std::lock_guard lock(s.mu);
        n += s.entries.size();
    }
    return n;
}

// ---------------------------------------------------------------------------

void BlockWindow::push(std::uint64_t number, std::shared_ptr<const Bytes> encoded)
{
    {
        std::lock_guard lock(mu_);
        if (number != first_ + blocks_.size()) {
            fail(Errc::GapDetected, "block window expected " + std::to_string(first_ + blocks_.size()));
        }
        blocks_.push_back(std::move(encoded));
        if (blocks_.size() > retained_) {
            blocks_.pop_front();
            ++first_;
        }
    }
    cv_.notify_all();
}

std::shared_ptr<const Bytes> BlockWindow::get_locked(std::uint64_t number) const
{
    if (number < first_) {
        fail(Errc::NotFound, "block " + std::to_string(number) + " no longer retained");
    }
    if (number >= first_ + blocks_.size()) {
        return nullptr;
    }
    return blocks_[number - first_];
}

std::shared_ptr<const Bytes> BlockWindow::wait(std::uint64_t number)
{
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return closed_ || number < first_ + blocks_.size(); });
    return closed_ ? nullptr : get_locked(number);
}

std::shared_ptr<const Bytes> BlockWindow::wait_for(std::uint64_t number, std::chrono::milliseconds timeout)
{
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, timeout, [&] { return closed_ || number < first_ + blocks_.size(); });
    return closed_ ? nullptr : get_locked(number);
}

void BlockWindow::close()
{
    {
        std::lock_guard lock(mu_);
        closed_ = true;
    }
    cv_.notify_all();
}

std::uint64_t BlockWindow::next_number() const
{
    std::lock_guard lock(mu_);
    return first_ + blocks_.size();
}

// ---------------------------------------------------------------------------

struct Orderer::Conn {
    explicit Conn(std::unique_ptr<Channel> c) : channel(std::move(c)) {}
    std::unique_ptr<Channel> channel;
    std::mutex send_mu;

    void send(MsgType type, ByteView body)
    {
        std::lock_guard lock(send_mu);
        channel->send(type, body);
    }
};

Orderer::Orderer(Transport& transport, std::string node_id, std::string address, std::string log_node,
                 std::shared_ptr<const Registry> registry, Signer signer, OrdererConfig config)
    : transport_(transport),
      node_id_(std::move(node_id)),
      address_(std::move(address)),
      registry_(std::move(registry)),
      signer_(std::move(signer)),
      config_(std::move(config)),
      log_(transport, std::move(log_node)),
      window_(config_.retained_blocks)
{
    config_.validate();
    last_header_ = make_genesis().header;
}

Orderer::~Orderer() { stop(); }

void Orderer::start()
{
    if (config_.opt_o2) {
        intake_ = std::make_unique<ThreadPool>(config_.intake_pool);
    }
    subscription_ = log_.subscribe(config_.channel, 0);
    assembler_ = std::thread([this] { assemble(); });
    listener_ = transport_.listen(node_id_, address_);
    address_ = listener_->address();
    acceptor_ = std::thread([this] { accept_loop(); });
}

void Orderer::stop()
{
    if (stopping_.exchange(true)) {
        return;
    }
    if (listener_) {
        listener_->close();
    }
    if (acceptor_.joinable()) {
        acceptor_.join();
    }
    window_.close();
    if (subscription_) {
        subscription_->close();
    }
    if (assembler_.joinable()) {
        assembler_.join();
    }
    std::vector<std::thread> workers;
    {
        std::lock_guard lock(conns_mu_);
        for (auto& c : conns_) {
            c->channel->close();
        }
        workers.swap(workers_);
    }
    for (auto& t : workers) {
        t.join();
    }
    intake_.reset();
}

std::optional<std::string> Orderer::fatal_error() const
{
    std::lock_guard lock(fatal_mu_);
    return fatal_;
}

void Orderer::set_fatal(const std::string& msg)
{
    spdlog::error("orderer {}: {}", node_id_, msg);
    std::lock_guard lock(fatal_mu_);
    if (!fatal_) {
        fatal_ = msg;
    }
}

SubmitResult Orderer::handle_submit(ByteView envelope)
{
    std::unique_lock serial(serial_mu_, std::defer_lock);
    if (!config_.opt_o2) {
        serial.lock();
    }
    TxHeader header;
    try {
        header = peek_header(envelope);
    } catch (const Error&) {
        return RejectCode::Malformed;
    }
    if (!registry_->is_authorized_client(header.creator)) {
        return RejectCode::Unauthorized;
    }

    ByteView published;
    if (config_.opt_o1) {
        if (!payloads_.insert(header.tx_id, Bytes(envelope.begin(), envelope.end()))) {
            return RejectCode::Duplicate;
        }
        published = as_bytes(header.tx_id);
    } else {
        std::lock_guard lock(pending_mu_);
        if (!pending_ids_.insert(header.tx_id).second) {
            return RejectCode::Duplicate;
        }
        published = envelope;
    }
    if (publish_hook_) {
        publish_hook_(published);
    }
    try {
        std::uint64_t offset = log_.publish(config_.channel, published);
        return SubmitAck{offset};
    } catch (const Error& e) {
        spdlog::warn("orderer {}: publish failed: {}", node_id_, e.what());
        if (config_.opt_o1) {
            payloads_.erase(header.tx_id);
        } else {
            std::lock_guard lock(pending_mu_);
            pending_ids_.erase(header.tx_id);
        }
        return RejectCode::LogUnavailable;
    }
}

void Orderer::accept_loop()
{
    while (auto ch = listener_->accept()) {
        auto conn = std::make_shared<Conn>(std::move(ch));
        std::lock_guard lock(conns_mu_);
        if (stopping_) {
            conn->channel->close();
            break;
        }
        conns_.push_back(conn);
        workers_.emplace_back([this, conn] { serve(conn); });
    }
}

namespace {

Bytes encode_response(std::uint64_t req, const SubmitResult& result, MsgType& type)
{
    Bytes out;
    ByteWriter w(out);
    w.u64(req);
    if (const auto* ack = std::get_if<SubmitAck>(&result)) {
        type = MsgType::Ack;
        w.u64(ack->offset);
    } else {
        type = MsgType::Reject;
        w.u8(static_cast<std::uint8_t>(std::get<RejectCode>(result)));
    }
    return out;
}

} // namespace

void Orderer::serve(std::shared_ptr<Conn> conn)
{
    try {
        for (;;) {
            Message msg = conn->channel->recv();
            if (msg.kind() == MsgType::Deliver) {
                ByteReader r(msg.body);
                deliver(*conn, r.u64());
                return;
            }
            if (msg.kind() != MsgType::Submit) {
                conn->send(MsgType::Error, encode_error(Errc::MalformedFrame, "unexpected message"));
                continue;
            }
            if (msg.body.size() < 8) {
                conn->send(MsgType::Error, encode_error(Errc::MalformedFrame, "short SUBMIT"));
                continue;
            }
            std::uint64_t req = ByteReader(msg.body).u64();
            if (intake_) {
                intake_->submit([this, conn, req, body = std::move(msg.body)] {
                    auto result = handle_submit(ByteView(body).subspan(8));
                    MsgType type;
                    Bytes reply = encode_response(req, result, type);
                    try {
                        conn->send(type, reply);
                    } catch (const Error&) {
                    }
                });
            } else {
                auto result = handle_submit(ByteView(msg.body).subspan(8));
                MsgType type;
                Bytes reply = encode_response(req, result, type);
                conn->send(type, reply);
            }
        }
    } catch (const Error& e) {
        if (e.code() != Errc::ChannelClosed) {
            spdlog::warn("orderer {}: connection ended: {}", node_id_, e.what());
        }
    }
}

void Orderer::deliver(Conn& conn, std::uint64_t from)
{
    std::uint64_t n = std::max<std::uint64_t>(from, 1);
    try {
        while (auto block = window_.wait(n)) {
            conn.send(MsgType::BlockMsg, *block);
            ++n;
        }
    } catch (const Error& e) {
        if (e.code() == Errc::NotFound) {
            conn.send(MsgType::Error, encode_error(e.code(), e.what()));
            return;
        }
        throw;
    }
}

void Orderer::assemble()
{
    using Clock = std::chrono::steady_clock;
    std::vector<Bytes> pending;
    pending.reserve(config_.max_block_txs);
    Clock::time_point deadline{};
    while (!stopping_) {
        std::chrono::milliseconds wait(50);
        if (!pending.empty()) {
            wait = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
            if (wait.count() < 0) {
                wait = std::chrono::milliseconds(0);
            }
        }
        std::optional<LogRecord> rec;
        try {
            rec = subscription_->next_for(wait);
        } catch (const Error& e) {
            if (!stopping_) {
                set_fatal(std::string("log subscription failed: ") + e.what());
            }
            return;
        }
        if (rec) {
            Bytes envelope;
            if (config_.opt_o1) {
                std::string_view tx_id = as_chars(rec->payload);
                auto stored = payloads_.take(tx_id);
                if (!stored) {
                    set_fatal(std::string(to_string(Errc::UnknownTxId)) + ": no payload for tx " +
                              std::string(tx_id));
                    return;
                }
                envelope = std::move(*stored);
            } else {
                envelope = std::move(rec->payload);
                std::string tx_id = peek_tx_id(envelope);
                std::lock_guard lock(pending_mu_);
                pending_ids_.erase(tx_id);
            }
            if (pending.empty()) {
                deadline = Clock::now() + config_.block_timeout;
            }
            pending.push_back(std::move(envelope));
            if (pending.size() >= config_.max_block_txs) {
                cut(pending);
            }
        } else if (!pending.empty() && Clock::now() >= deadline) {
            cut(pending);
        }
    }
}

void Orderer::cut(std::vector<Bytes>& pending)
{
    Block block = make_block(last_header_, std::move(pending), signer_);
    pending.clear();
    pending.reserve(config_.max_block_txs);
    last_header_ = block.header;
    window_.push(block.header.number, std::make_shared<const Bytes>(encode_block(block)));
}

// ---------------------------------------------------------------------------

SubmitSession::SubmitSession(const Transport& transport, const std::string& orderer_node)
    : channel_(transport.connect(orderer_node))
{
}

std::uint64_t SubmitSession::send(ByteView envelope)
{
    std::uint64_t req = next_req_++;
    buf_.clear();
    buf_.reserve(8 + envelope.size());
    ByteWriter w(buf_);
    w.u64(req);
    w.raw(envelope);
    channel_->send(MsgType::Submit, buf_);
    return req;
}

std::pair<std::uint64_t, SubmitResult> SubmitSession::receive()
{
    Message msg = channel_->recv();
    if (msg.kind() == MsgType::Error) {
        throw_error_message(msg);
    }
    ByteReader r(msg.body);
    std::uint64_t req = r.u64();
    if (msg.kind() == MsgType::Ack) {
        return {req, SubmitAck{r.u64()}};
    }
    if (msg.kind() == MsgType::Reject) {
        return {req, static_cast<RejectCode>(r.u8())};
    }
    fail(Errc::MalformedFrame, "unexpected submit response type " + std::to_string(msg.type));
}

SubmitResult SubmitSession::submit(ByteView envelope)
{
    std::uint64_t req = send(envelope);
    auto [got, result] = receive();
    if (got != req) {
        fail(Errc::MalformedFrame, "response for unexpected request");
    }
    return result;
}

DeliverStream::DeliverStream(const Transport& transport, const std::string& orderer_node, std::uint64_t from)
    : channel_(transport.connect(orderer_node))
{
    Bytes body;
    ByteWriter(body).u64(from);
    channel_->send(MsgType::Deliver, body);
}

Bytes DeliverStream::next()
{
    Message msg = channel_->recv();
    if (msg.kind() == MsgType::Error) {
        throw_error_message(msg);
    }
    return std::move(msg.body);
}

std::optional<Bytes> DeliverStream::next_for(std::chrono::milliseconds timeout)
{
    auto msg = channel_->recv_for(timeout);
    if (!msg) {
        return std::nullopt;
    }
    if (msg->kind() == MsgType::Error) {
        throw_error_message(*msg);
    }
    return std::move(msg->body);
}

} // namespace eov
