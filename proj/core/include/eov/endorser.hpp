// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

// Endorsing node: runs the transfer chaincode against a replica of the world
// state and keeps that replica current from the committer's validated
// blocks, without validating them again.
//
//   ENDORSE  u32 len | from | u32 len | to | u64 amount | u32 padding
//            | u32 len | client | u64 nonce
//        ->  ENDORSE_OK u32 len | header | u32 len | rwset | u32 len | endorser | u32 len | sig
//          | ENDORSE_ERR u16 errc | u32 len | message
//   SUBSCRIBE_EVENTS -> EVENT* (u64 block | u32 n | (u32 len | tx_id | u8 flag)*)
//   VALIDATED_OPEN ... (see validated.hpp)

#pragma once

#include <atomic>
#include <deque>
#include <functional>
#include <thread>

#include "eov/identity.hpp"
#include "eov/ledger.hpp"
#include "eov/statestore.hpp"
#include "eov/transport.hpp"

namespace eov {

struct TransferProposal {
    std::string from_account;
    std::string to_account;
    std::uint64_t amount = 0;
    std::size_t padding_len = 0;
};

struct EndorsedTx {
    TxHeader header;
    ReadWriteSet rwset;
    Endorsement endorsement;
    std::size_t padding_len = 0;

    /// Envelope signed by the client, ready for SUBMIT.
    Bytes to_envelope(const Signer& client) const;
};

struct BlockEvent {
    std::uint64_t block_number = 0;
    std::vector<std::pair<std::string, ValidationFlag>> txs;
};

Bytes encode_balance(std::uint64_t balance);
std::uint64_t decode_balance(ByteView value);

class Endorser {
public:
    Endorser(std::string node_id, Signer signer, std::string channel_id = "ch0");

    /// Bootstrap from a genesis state map (accounts at version (0,0)).
    void load_genesis(const StateMap& accounts);

    /// Read-only simulation of a transfer. Throws EndorseUnknownAccount,
    /// EndorseInsufficientFunds or InvalidArgument.
    EndorsedTx endorse(const TransferProposal& proposal, const std::string& client, std::uint64_t nonce) const;

    /// Applies the writes of Valid txs. Blocks at or below the applied
    /// height are ignored; a block beyond height + 1 throws GapDetected.
    void apply_validated(const Block& block);

    std::uint64_t applied_height() const { return applied_.load(); }
    StateStore& state() { return state_; }
    const std::string& id() const noexcept { return node_id_; }

    void on_applied(std::function<void(const BlockEvent&)> fn) { on_applied_ = std::move(fn); }

private:
    std::string node_id_;
    Signer signer_;
    std::string channel_id_;
    MemoryStateStore state_;
    std::mutex apply_mu_;
    std::atomic<std::uint64_t> applied_{0};
    std::function<void(const BlockEvent&)> on_applied_;
};

class EndorserService {
public:
    EndorserService(Transport& transport, std::string address, std::shared_ptr<Endorser> endorser);
    ~EndorserService();

    void start();
    void stop();
    Endorser& endorser() { return *endorser_; }

private:
    void accept_loop();
    void serve(std::shared_ptr<Channel> ch);
    void publish_event(const BlockEvent& ev);

    Transport& transport_;
    std::string address_;
    std::shared_ptr<Endorser> endorser_;
    std::unique_ptr<Listener> listener_;
    std::thread acceptor_;
    std::mutex conns_mu_;
    std::vector<std::shared_ptr<Channel>> conns_;
    std::vector<std::thread> workers_;
    std::mutex subs_mu_;
    std::vector<std::shared_ptr<Channel>> subscribers_;
    std::atomic<bool> stopping_{false};
};

/// ENDORSE client. Requests may be pipelined on the one channel; replies come
/// back in request order. One thread may send while another receives.
class EndorserClient {
public:
    EndorserClient(const Transport& transport, const std::string& endorser_node);

    void send(const TransferProposal& proposal, const std::string& client, std::uint64_t nonce);
    /// Reply to the oldest outstanding request; throws the endorser's error.
    EndorsedTx receive();
    EndorsedTx endorse(const TransferProposal& proposal, const std::string& client, std::uint64_t nonce);
    void close() { channel_->close(); }

private:
    std::unique_ptr<Channel> channel_;
    std::mutex padding_mu_;
    std::deque<std::size_t> padding_;
};

class EventStream {
public:
    EventStream(const Transport& transport, const std::string& endorser_node);
    BlockEvent next();
    std::optional<BlockEvent> next_for(std::chrono::milliseconds timeout);
    void close() { channel_->close(); }

private:
    std::unique_ptr<Channel> channel_;
};

} // namespace eov
