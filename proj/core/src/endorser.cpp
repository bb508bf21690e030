// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "eov/endorser.hpp"

#include <spdlog/spdlog.h>

#include "eov/ordering_log.hpp"
#include "eov/validated.hpp"

namespace eov {

Bytes encode_balance(std::uint64_t balance)
{
    Bytes out;
    ByteWriter(out).u64(balance);
    return out;
}

std::uint64_t decode_balance(ByteView value)
{
    if (value.size() != 8) {
        fail(Errc::InvalidArgument, "balance value must be 8 bytes");
    }
    return ByteReader(value).u64();
}

Bytes EndorsedTx::to_envelope(const Signer& client) const
{
    return encode_envelope(header, rwset, std::span(&endorsement, 1), padding_len, client);
}

Endorser::Endorser(std::string node_id, Signer signer, std::string channel_id)
    : node_id_(std::move(node_id)), signer_(std::move(signer)), channel_id_(std::move(channel_id))
{
}

void Endorser::load_genesis(const StateMap& accounts)
{
    std::lock_guard lock(apply_mu_);
    state_.load(accounts);
    applied_ = 0;
}

EndorsedTx Endorser::endorse(const TransferProposal& p, const std::string& client, std::uint64_t nonce) const
{
    if (p.from_account == p.to_account) {
        fail(Errc::InvalidArgument, "transfer to the same account");
    }
    if (p.amount == 0) {
        fail(Errc::InvalidArgument, "transfer amount must be >= 1");
    }
    auto from = state_.get(p.from_account);
    auto to = state_.get(p.to_account);
    if (!from) {
        fail(Errc::EndorseUnknownAccount, p.from_account);
    }
    if (!to) {
        fail(Errc::EndorseUnknownAccount, p.to_account);
    }
    std::uint64_t from_balance = decode_balance(from->value);
    std::uint64_t to_balance = decode_balance(to->value);
    if (from_balance < p.amount) {
        fail(Errc::EndorseInsufficientFunds,
             p.from_account + " holds " + std::to_string(from_balance) + ", needs " + std::to_string(p.amount));
    }

    EndorsedTx tx;
    tx.header.tx_id = make_tx_id(client, nonce);
    tx.header.channel_id = channel_id_;
    tx.header.creator = client;
    tx.header.nonce = nonce;
    tx.rwset.reads = {{p.from_account, from->version}, {p.to_account, to->version}};
    tx.rwset.writes = {{p.from_account, encode_balance(from_balance - p.amount)},
                       {p.to_account, encode_balance(to_balance + p.amount)}};
    tx.padding_len = p.padding_len;
    tx.endorsement.endorser = node_id_;
    tx.endorsement.signature = signer_.sign(endorsement_message(encode_rwset(tx.rwset), p.padding_len));
    return tx;
}

void Endorser::apply_validated(const Block& block)
{
    BlockEvent ev;
    {
        std::lock_guard lock(apply_mu_);
        std::uint64_t applied = applied_.load();
        if (block.number() <= applied) {
            return;
        }
        if (block.number() > applied + 1) {
            fail(Errc::GapDetected, "endorser at block " + std::to_string(applied) + " got block " +
                                        std::to_string(block.number()));
        }
        if (block.flags.size() != block.envelopes.size()) {
            fail(Errc::InvalidArgument, "validated block without flags");
        }
        ev.block_number = block.number();
        ev.txs.reserve(block.envelopes.size());
        for (std::uint32_t i = 0; i < block.envelopes.size(); ++i) {
            std::string tx_id;
            try {
                tx_id = peek_tx_id(block.envelopes[i]);
            } catch (const Error&) {
            }
            ev.txs.emplace_back(std::move(tx_id), block.flags[i]);
            if (block.flags[i] != ValidationFlag::Valid) {
                continue;
            }
            ByteReader env(block.envelopes[i]);
            env.skip_prefixed();
            PayloadLayer payload = decode_payload(env.prefixed());
            ReadWriteSet rw = decode_rwset(payload.rwset_bytes);
            state_.apply_writes(rw.writes, Version{block.number(), i});
        }
        applied_ = block.number();
    }
    if (on_applied_) {
        on_applied_(ev);
    }
}

// ---------------------------------------------------------------------------

namespace {

Bytes encode_event(const BlockEvent& ev)
{
    Bytes out;
    ByteWriter w(out);
    w.u64(ev.block_number);
    w.u32(static_cast<std::uint32_t>(ev.txs.size()));
    for (const auto& [id, flag] : ev.txs) {
        w.prefixed(id);
        w.u8(static_cast<std::uint8_t>(flag));
    }
    return out;
}

BlockEvent decode_event(ByteView body)
{
    ByteReader r(body);
    BlockEvent ev;
    ev.block_number = r.u64();
    std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
        std::string id = r.prefixed_string();
        auto flag = static_cast<ValidationFlag>(r.u8());
        ev.txs.emplace_back(std::move(id), flag);
    }
    return ev;
}

} // namespace

EndorserService::EndorserService(Transport& transport, std::string address, std::shared_ptr<Endorser> endorser)
    : transport_(transport), address_(std::move(address)), endorser_(std::move(endorser))
{
    endorser_->on_applied([this](const BlockEvent& ev) { publish_event(ev); });
}

EndorserService::~EndorserService()
{
    stop();
    endorser_->on_applied(nullptr);
}

void EndorserService::start()
{
    listener_ = transport_.listen(endorser_->id(), address_);
    acceptor_ = std::thread([this] { accept_loop(); });
}

void EndorserService::stop()
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

void EndorserService::accept_loop()
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

void EndorserService::publish_event(const BlockEvent& ev)
{
    Bytes body = encode_event(ev);
    std::lock_guard lock(subs_mu_);
    for (auto it = subscribers_.begin(); it != subscribers_.end();) {
        try {
            (*it)->send(MsgType::Event, body);
            ++it;
        } catch (const Error&) {
            it = subscribers_.erase(it);
        }
    }
}

void EndorserService::serve(std::shared_ptr<Channel> ch)
{
    try {
        for (;;) {
            Message msg = ch->recv();
            switch (msg.kind()) {
            case MsgType::Endorse: {
                Bytes reply;
                try {
                    ByteReader r(msg.body);
                    TransferProposal p;
                    p.from_account = r.prefixed_string();
                    p.to_account = r.prefixed_string();
                    p.amount = r.u64();
                    p.padding_len = r.u32();
                    std::string client = r.prefixed_string();
                    std::uint64_t nonce = r.u64();
                    EndorsedTx tx = endorser_->endorse(p, client, nonce);
                    ByteWriter w(reply);
                    w.prefixed(encode_header(tx.header));
                    w.prefixed(encode_rwset(tx.rwset));
                    w.prefixed(tx.endorsement.endorser);
                    w.prefixed(tx.endorsement.signature);
                } catch (const Error& e) {
                    ch->send(MsgType::EndorseErr, encode_error(e.code(), e.what()));
                    break;
                }
                ch->send(MsgType::EndorseOk, reply);
                break;
            }
            case MsgType::ValidatedOpen:
                serve_validated_stream(
                    *ch, [this] { return endorser_->applied_height() + 1; },
                    [this](const Block& b, ByteView) { endorser_->apply_validated(b); });
                return;
            case MsgType::SubscribeEvents: {
                {
                    std::lock_guard lock(subs_mu_);
                    subscribers_.push_back(ch);
                }
                // nothing else arrives on this channel; recv returns when it closes
                ch->recv();
                return;
            }
            default:
                ch->send(MsgType::Error, encode_error(Errc::MalformedFrame, "unexpected message"));
            }
        }
    } catch (const Error& e) {
        if (e.code() != Errc::ChannelClosed) {
            spdlog::warn("endorser {}: connection ended: {}", endorser_->id(), e.what());
        }
    }
}

// ---------------------------------------------------------------------------

EndorserClient::EndorserClient(const Transport& transport, const std::string& endorser_node)
    : channel_(transport.connect(endorser_node))
{
}

void EndorserClient::send(const TransferProposal& p, const std::string& client, std::uint64_t nonce)
{
    Bytes body;
    ByteWriter w(body);
    w.prefixed(p.from_account);
    w.prefixed(p.to_account);
    w.u64(p.amount);
    w.u32(static_cast<std::uint32_t>(p.padding_len));
    w.prefixed(client);
    w.u64(nonce);
    {
        std::lock_guard lock(padding_mu_);
        padding_.push_back(p.padding_len);
    }
    channel_->send(MsgType::Endorse, body);
}

EndorsedTx EndorserClient::receive()
{
    Message msg = channel_->recv();
    std::size_t padding = 0;
    {
        std::lock_guard lock(padding_mu_);
        if (!padding_.empty()) {
            padding = padding_.front();
            padding_.pop_front();
        }
    }
    if (msg.kind() == MsgType::EndorseErr || msg.kind() == MsgType::Error) {
        throw_error_message(msg);
    }
    if (msg.kind() != MsgType::EndorseOk) {
        fail(Errc::MalformedFrame, "unexpected endorse reply");
    }
    ByteReader r(msg.body);
    EndorsedTx tx;
    tx.header = decode_header(r.prefixed());
    tx.rwset = decode_rwset(r.prefixed());
    tx.endorsement.endorser = r.prefixed_string();
    tx.endorsement.signature = r.prefixed_bytes();
    tx.padding_len = padding;
    return tx;
}

EndorsedTx EndorserClient::endorse(const TransferProposal& p, const std::string& client, std::uint64_t nonce)
{
    send(p, client, nonce);
    return receive();
}

EventStream::EventStream(const Transport& transport, const std::string& endorser_node)
    : channel_(transport.connect(endorser_node))
{
    channel_->send(MsgType::SubscribeEvents, {});
}

BlockEvent EventStream::next()
{
    Message m = channel_->recv();
    if (m.kind() != MsgType::Event) {
        fail(Errc::MalformedFrame, "expected EVENT");
    }
    return decode_event(m.body);
}

std::optional<BlockEvent> EventStream::next_for(std::chrono::milliseconds timeout)
{
    auto m = channel_->recv_for(timeout);
    if (!m) {
        return std::nullopt;
    }
    if (m->kind() != MsgType::Event) {
        fail(Errc::MalformedFrame, "expected EVENT");
    }
    return decode_event(m->body);
}

} // namespace eov
