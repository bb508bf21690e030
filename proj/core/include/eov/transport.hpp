// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

// Framed, ordered, reliable channels between nodes.
//
// Every message travels as  u16 type | u32 len | body  (little-endian), both
// over TCP and in-process, so the two modes behave the same at the message
// level and per-message cost grows with the body size in both.

#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "eov/common/bytes.hpp"

namespace eov {

/// Message type tags shared by every service.
enum class MsgType : std::uint16_t {
    Error = 1,
    // ordering log
    Publish = 10,
    Offset = 11,
    Subscribe = 12,
    Record = 13,
    // orderer
    Submit = 20,
    Ack = 21,
    Reject = 22,
    Deliver = 23,
    BlockMsg = 24,
    // validated block streams (committer -> endorser / block store)
    ValidatedOpen = 30,
    Resume = 31,
    Validated = 32,
    // block store queries
    GetBlock = 40,
    BlockReply = 41,
    GetTx = 42,
    TxReply = 43,
    NotFound = 44,
    StateSnapshot = 45,
    SnapshotAck = 46,
    // endorser
    Endorse = 50,
    EndorseOk = 51,
    EndorseErr = 52,
    SubscribeEvents = 53,
    Event = 54,
};

struct Message {
    std::uint16_t type = 0;
    Bytes body;

    MsgType kind() const noexcept { return static_cast<MsgType>(type); }
};

inline constexpr std::size_t kFrameHeaderBytes = 6;
inline constexpr std::uint32_t kMaxMessageBytes = 512u << 20;

Bytes encode_frame(std::uint16_t type, ByteView body);

/// One end of a bidirectional channel. One thread may send while another
/// receives; concurrent senders (or receivers) must serialise externally.
class Channel {
public:
    virtual ~Channel() = default;

    /// Throws ChannelClosed when either side has closed.
    virtual void send(std::uint16_t type, ByteView body) = 0;
    void send(MsgType type, ByteView body) { send(static_cast<std::uint16_t>(type), body); }

    /// Blocks for the next message. Throws ChannelClosed once the peer has
    /// closed and everything it sent has been received.
    virtual Message recv() = 0;

    /// As recv(), but returns nullopt when nothing arrives within `timeout`.
    virtual std::optional<Message> recv_for(std::chrono::milliseconds timeout) = 0;

    /// Idempotent; wakes blocked senders and receivers on both ends.
    virtual void close() = 0;
};

class Listener {
public:
    virtual ~Listener() = default;
    /// Blocks for the next inbound channel; nullptr after close().
    virtual std::unique_ptr<Channel> accept() = 0;
    virtual void close() = 0;
    /// Address peers dial, with the actual port for tcp://host:0 listeners.
    virtual std::string address() const = 0;
};

class InprocHub;

/// Address book plus the in-process rendezvous point. Addresses are either
/// `inproc://<name>` or `tcp://<host>:<port>`.
class Transport {
public:
    Transport();
    ~Transport();

    void set_address(const std::string& node_id, const std::string& address);
    std::optional<std::string> address_of(const std::string& node_id) const;

    /// Binds `address`; for tcp listeners on port 0 the address book entry of
    /// `node_id` is updated with the bound port.
    std::unique_ptr<Listener> listen(const std::string& node_id, const std::string& address);
    std::unique_ptr<Listener> listen(const std::string& node_id);

    /// Throws PeerUnreachable for unknown peers or refused connections.
    std::unique_ptr<Channel> connect(const std::string& node_id) const;

    std::unique_ptr<Channel> dial(const std::string& address) const;

private:
    mutable std::mutex mu_;
    std::map<std::string, std::string> addresses_;
    std::shared_ptr<InprocHub> hub_;
};

/// In-process channel pair, exposed for tests.
std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_inproc_pair(std::size_t capacity = 1024);

} // namespace eov
