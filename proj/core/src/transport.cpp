// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "eov/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/uio.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>

#include "eov/common/sync.hpp"

namespace eov {

Bytes encode_frame(std::uint16_t type, ByteView body)
{
    if (body.size() > kMaxMessageBytes) {
        fail(Errc::InvalidArgument, "message body of " + std::to_string(body.size()) + " bytes");
    }
    Bytes frame;
    frame.reserve(kFrameHeaderBytes + body.size());
    ByteWriter w(frame);
    w.u16(type);
    w.u32(static_cast<std::uint32_t>(body.size()));
    w.raw(body);
    return frame;
}

namespace {

Message decode_frame(ByteView frame)
{
    ByteReader r(frame);
    Message m;
    m.type = r.u16();
    auto body = r.take(r.u32());
    m.body.assign(body.begin(), body.end());
    return m;
}

// ---------------------------------------------------------------------------
// In-process

struct InprocPipe {
    explicit InprocPipe(std::size_t capacity) : lanes{BlockingQueue<Bytes>(capacity), BlockingQueue<Bytes>(capacity)} {}
    BlockingQueue<Bytes> lanes[2];

    void close()
    {
        lanes[0].close();
        lanes[1].close();
    }
};

class InprocChannel final : public Channel {
public:
    InprocChannel(std::shared_ptr<InprocPipe> pipe, int side) : pipe_(std::move(pipe)), side_(side) {}
    ~InprocChannel() override { close(); }

    void send(std::uint16_t type, ByteView body) override
    {
        if (!outbound().push(encode_frame(type, body))) {
            fail(Errc::ChannelClosed, "in-process channel closed");
        }
    }

    Message recv() override
    {
        auto frame = inbound().pop();
        if (!frame) {
            fail(Errc::ChannelClosed, "in-process channel closed");
        }
        return decode_frame(*frame);
    }

    std::optional<Message> recv_for(std::chrono::milliseconds timeout) override
    {
        auto frame = inbound().pop_for(timeout);
        if (!frame) {
            if (inbound().closed()) {
                fail(Errc::ChannelClosed, "in-process channel closed");
            }
            return std::nullopt;
        }
        return decode_frame(*frame);
    }

    void close() override { pipe_->close(); }

private:
    BlockingQueue<Bytes>& outbound() { return pipe_->lanes[side_]; }
    BlockingQueue<Bytes>& inbound() { return pipe_->lanes[1 - side_]; }

    std::shared_ptr<InprocPipe> pipe_;
    int side_;
};

// ---------------------------------------------------------------------------
// TCP

class TcpChannel final : public Channel {
public:
    explicit TcpChannel(int fd) : fd_(fd)
    {
        int one = 1;
        ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    }

    ~TcpChannel() override
    {
        close();
        ::close(fd_);
    }

    void send(std::uint16_t type, ByteView body) override
    {
        if (body.size() > kMaxMessageBytes) {
            fail(Errc::InvalidArgument, "message too large");
        }
        std::uint8_t header[kFrameHeaderBytes];
        header[0] = static_cast<std::uint8_t>(type);
        header[1] = static_cast<std::uint8_t>(type >> 8);
        auto len = static_cast<std::uint32_t>(body.size());
        for (int i = 0; i < 4; ++i) {
            header[2 + i] = static_cast<std::uint8_t>(len >> (8 * i));
        }
        iovec iov[2] = {{header, kFrameHeaderBytes},
                        {const_cast<std::uint8_t*>(body.data()), body.size()}};
        std::size_t total = kFrameHeaderBytes + body.size();
        std::size_t sent = 0;
        while (sent < total) {
            msghdr msg{};
            iovec cur[2];
            int n_iov = 0;
            std::size_t skip = sent;
            for (auto& v : iov) {
                if (skip >= v.iov_len) {
                    skip -= v.iov_len;
                    continue;
                }
                cur[n_iov++] = {static_cast<std::uint8_t*>(v.iov_base) + skip, v.iov_len - skip};
                skip = 0;
            }
            msg.msg_iov = cur;
            msg.msg_iovlen = static_cast<std::size_t>(n_iov);
            ssize_t n = ::sendmsg(fd_, &msg, MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) continue;
                fail(Errc::ChannelClosed, std::string("tcp send: ") + std::strerror(errno));
            }
            sent += static_cast<std::size_t>(n);
        }
    }

    Message recv() override
    {
        std::uint8_t header[kFrameHeaderBytes];
        read_exact(header, sizeof(header));
        ByteReader r(ByteView(header, sizeof(header)));
        Message m;
        m.type = r.u16();
        std::uint32_t len = r.u32();
        if (len > kMaxMessageBytes) {
            fail(Errc::MalformedFrame, "tcp frame of " + std::to_string(len) + " bytes");
        }
        m.body.resize(len);
        read_exact(m.body.data(), len);
        return m;
    }

    std::optional<Message> recv_for(std::chrono::milliseconds timeout) override
    {
        pollfd p{fd_, POLLIN, 0};
        int rc;
        do {
            rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
        } while (rc < 0 && errno == EINTR);
        if (rc == 0) {
            return std::nullopt;
        }
        return recv();
    }

    void close() override
    {
        if (!closed_.exchange(true)) {
            ::shutdown(fd_, SHUT_RDWR);
        }
    }

private:
    void read_exact(std::uint8_t* out, std::size_t len)
    {
        std::size_t got = 0;
        while (got < len) {
            ssize_t n = ::recv(fd_, out + got, len - got, 0);
            if (n < 0) {
                if (errno == EINTR) continue;
                fail(Errc::ChannelClosed, std::string("tcp recv: ") + std::strerror(errno));
            }
            if (n == 0) {
                fail(Errc::ChannelClosed, "tcp peer closed");
            }
            got += static_cast<std::size_t>(n);
        }
    }

    int fd_;
    std::atomic<bool> closed_{false};
};

struct HostPort {
    std::string host;
    std::uint16_t port = 0;
};

HostPort parse_tcp(std::string_view address)
{
    constexpr std::string_view kPrefix = "tcp://";
    auto rest = address.substr(kPrefix.size());
    auto colon = rest.rfind(':');
    if (colon == std::string_view::npos) {
        fail(Errc::TopologyError, "tcp address needs host:port: " + std::string(address));
    }
    HostPort hp;
    hp.host = std::string(rest.substr(0, colon));
    hp.port = static_cast<std::uint16_t>(std::stoul(std::string(rest.substr(colon + 1))));
    return hp;
}

bool starts_with(std::string_view s, std::string_view prefix)
{
    return s.substr(0, prefix.size()) == prefix;
}

class TcpListener final : public Listener {
public:
    explicit TcpListener(const std::string& address)
    {
        auto hp = parse_tcp(address);
        fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
        if (fd_ < 0) {
            fail(Errc::TopologyError, std::string("socket: ") + std::strerror(errno));
        }
        int one = 1;
        ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(hp.port);
        if (::inet_pton(AF_INET, hp.host == "localhost" ? "127.0.0.1" : hp.host.c_str(), &addr.sin_addr) != 1) {
            ::close(fd_);
            fail(Errc::TopologyError, "bad listen host " + hp.host);
        }
        if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(fd_, 128) != 0) {
            std::string err = std::strerror(errno);
            ::close(fd_);
            fail(Errc::TopologyError, "cannot listen on " + address + ": " + err);
        }
        socklen_t len = sizeof(addr);
        ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
        address_ = "tcp://" + hp.host + ":" + std::to_string(ntohs(addr.sin_port));
    }

    ~TcpListener() override
    {
        close();
        ::close(fd_);
    }

    std::unique_ptr<Channel> accept() override
    {
        while (!closed_) {
            int c = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
            if (c >= 0) {
                return std::make_unique<TcpChannel>(c);
            }
            if (errno == EINTR || errno == ECONNABORTED) continue;
            break;
        }
        return nullptr;
    }

    void close() override
    {
        if (!closed_.exchange(true)) {
            ::shutdown(fd_, SHUT_RDWR);
        }
    }

    std::string address() const override { return address_; }

private:
    int fd_ = -1;
    std::atomic<bool> closed_{false};
    std::string address_;
};

std::unique_ptr<Channel> tcp_dial(const std::string& address)
{
    auto hp = parse_tcp(address);
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(hp.host.c_str(), std::to_string(hp.port).c_str(), &hints, &res) != 0 || res == nullptr) {
        fail(Errc::PeerUnreachable, "cannot resolve " + address);
    }
    int fd = ::socket(res->ai_family, res->ai_socktype | SOCK_CLOEXEC, res->ai_protocol);
    if (fd < 0) {
        ::freeaddrinfo(res);
        fail(Errc::PeerUnreachable, std::string("socket: ") + std::strerror(errno));
    }
    int rc;
    do {
        rc = ::connect(fd, res->ai_addr, res->ai_addrlen);
    } while (rc != 0 && errno == EINTR);
    ::freeaddrinfo(res);
    if (rc != 0) {
        std::string err = std::strerror(errno);
        ::close(fd);
        fail(Errc::PeerUnreachable, "connect " + address + ": " + err);
    }
    return std::make_unique<TcpChannel>(fd);
}

} // namespace

// ---------------------------------------------------------------------------
// In-process rendezvous

class InprocHub {
public:
    class HubListener final : public Listener {
    public:
        HubListener(std::shared_ptr<InprocHub> hub, std::string name)
            : hub_(std::move(hub)), name_(std::move(name))
        {
        }
        ~HubListener() override { close(); }

        std::unique_ptr<Channel> accept() override
        {
            auto c = pending_.pop();
            return c ? std::move(*c) : nullptr;
        }

        void close() override
        {
            if (!closed_.exchange(true)) {
                hub_->remove(name_, this);
                pending_.close();
            }
        }

        std::string address() const override { return "inproc://" + name_; }

        bool offer(std::unique_ptr<Channel> c) { return pending_.push(std::move(c)); }

    private:
        std::shared_ptr<InprocHub> hub_;
        std::string name_;
        BlockingQueue<std::unique_ptr<Channel>> pending_;
        std::atomic<bool> closed_{false};
    };

    std::unique_ptr<Listener> listen(std::shared_ptr<InprocHub> self, const std::string& name)
    {
        std::lock_guard lock(mu_);
        if (listeners_.contains(name)) {
            fail(Errc::TopologyError, "inproc://" + name + " already bound");
        }
        auto l = std::make_unique<HubListener>(std::move(self), name);
        listeners_[name] = l.get();
        return l;
    }

    std::unique_ptr<Channel> dial(const std::string& name)
    {
        std::lock_guard lock(mu_);
        auto it = listeners_.find(name);
        if (it == listeners_.end()) {
            fail(Errc::PeerUnreachable, "nothing listening on inproc://" + name);
        }
        auto [a, b] = make_inproc_pair();
        if (!it->second->offer(std::move(b))) {
            fail(Errc::PeerUnreachable, "inproc://" + name + " is closing");
        }
        return std::move(a);
    }

    void remove(const std::string& name, HubListener* l)
    {
        std::lock_guard lock(mu_);
        auto it = listeners_.find(name);
        if (it != listeners_.end() && it->second == l) {
            listeners_.erase(it);
        }
    }

private:
    std::mutex mu_;
    std::map<std::string, HubListener*> listeners_;
};

std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_inproc_pair(std::size_t capacity)
{
    auto pipe = std::make_shared<InprocPipe>(capacity);
    return {std::make_unique<InprocChannel>(pipe, 0), std::make_unique<InprocChannel>(pipe, 1)};
}

Transport::Transport() : hub_(std::make_shared<InprocHub>()) {}
Transport::~Transport() = default;

void Transport::set_address(const std::string& node_id, const std::string& address)
{
    std::lock_guard lock(mu_);
    addresses_[node_id] = address;
}

std::optional<std::string> Transport::address_of(const std::string& node_id) const
{
    std::lock_guard lock(mu_);
    auto it = addresses_.find(node_id);
    if (it == addresses_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::unique_ptr<Listener> Transport::listen(const std::string& node_id, const std::string& address)
{
    std::unique_ptr<Listener> l;
    if (starts_with(address, "inproc://")) {
        l = hub_->listen(hub_, address.substr(9));
    } else if (starts_with(address, "tcp://")) {
        l = std::make_unique<TcpListener>(address);
    } else {
        fail(Errc::TopologyError, "unsupported address scheme: " + address);
    }
    set_address(node_id, l->address());
    return l;
}

std::unique_ptr<Listener> Transport::listen(const std::string& node_id)
{
    auto addr = address_of(node_id);
    if (!addr) {
        fail(Errc::TopologyError, "no address configured for " + node_id);
    }
    return listen(node_id, *addr);
}

std::unique_ptr<Channel> Transport::connect(const std::string& node_id) const
{
    auto addr = address_of(node_id);
    if (!addr) {
        fail(Errc::PeerUnreachable, "no address known for node '" + node_id + "'");
    }
    return dial(*addr);
}

std::unique_ptr<Channel> Transport::dial(const std::string& address) const
{
    if (starts_with(address, "inproc://")) {
        return hub_->dial(address.substr(9));
    }
    if (starts_with(address, "tcp://")) {
        return tcp_dial(address);
    }
    fail(Errc::PeerUnreachable, "unsupported address scheme: " + address);
}

} // namespace eov
