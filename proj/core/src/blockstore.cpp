// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "eov/blockstore.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>
#include <zlib.h>

#include <cinttypes>
#include <cstdio>
#include <shared_mutex>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "eov/ordering_log.hpp"
#include "eov/validated.hpp"

namespace eov {

namespace {

constexpr std::size_t kIndexEntry = 28;
constexpr std::size_t kRecordHeader = 8;

std::uint32_t crc_of(ByteView b)
{
    return static_cast<std::uint32_t>(::crc32(0, b.data(), static_cast<uInt>(b.size())));
}

[[noreturn]] void io_fail(const std::string& what)
{
    fail(Errc::StorageFailure, what + ": " + std::strerror(errno));
}

void pwrite_all(int fd, ByteView data, std::uint64_t offset)
{
    std::size_t done = 0;
    while (done < data.size()) {
        ssize_t n = ::pwrite(fd, data.data() + done, data.size() - done, static_cast<off_t>(offset + done));
        if (n < 0) {
            if (errno == EINTR) continue;
            io_fail("block store write");
        }
        done += static_cast<std::size_t>(n);
    }
}

bool pread_all(int fd, std::uint8_t* out, std::size_t len, std::uint64_t offset)
{
    std::size_t done = 0;
    while (done < len) {
        ssize_t n = ::pread(fd, out + done, len - done, static_cast<off_t>(offset + done));
        if (n < 0) {
            if (errno == EINTR) continue;
            io_fail("block store read");
        }
        if (n == 0) {
            return false;
        }
        done += static_cast<std::size_t>(n);
    }
    return true;
}

std::uint64_t file_size(int fd)
{
    struct stat st {};
    if (::fstat(fd, &st) != 0) {
        io_fail("fstat");
    }
    return static_cast<std::uint64_t>(st.st_size);
}

int open_rw(const std::filesystem::path& p)
{
    int fd = ::open(p.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0) {
        io_fail("open " + p.string());
    }
    return fd;
}

void sync_fd(int fd, bool enabled)
{
    if (enabled && ::fdatasync(fd) != 0) {
        io_fail("fdatasync");
    }
}

std::vector<std::string> tx_ids_of(std::span<const Bytes> envelopes)
{
    std::vector<std::string> ids;
    ids.reserve(envelopes.size());
    for (const auto& env : envelopes) {
        try {
            ids.push_back(peek_tx_id(env));
        } catch (const Error&) {
            ids.emplace_back(); // malformed envelopes stay in the block but are not indexed
        }
    }
    return ids;
}

Bytes tx_record(std::uint64_t number, const std::vector<std::string>& ids)
{
    Bytes body;
    ByteWriter w(body);
    w.u64(number);
    w.u32(static_cast<std::uint32_t>(ids.size()));
    for (const auto& id : ids) {
        w.prefixed(id);
    }
    Bytes rec;
    ByteWriter r(rec);
    r.u32(crc_of(body));
    r.prefixed(body);
    return rec;
}

} // namespace

struct BlockStore::Impl {
    struct Entry {
        std::uint32_t segment;
        std::uint64_t offset;
        std::uint32_t length;
    };

    std::filesystem::path dir;
    BlockStoreOptions opts;
    mutable std::shared_mutex mu;
    std::vector<int> segments;
    int idx_fd = -1;
    int tx_fd = -1;
    std::uint64_t tx_end = 0;
    std::vector<Entry> entries;
    std::unordered_map<std::string, TxLocation> txs;
    CrashPoint crash = CrashPoint::None;

    ~Impl()
    {
        for (int fd : segments) {
            ::close(fd);
        }
        if (idx_fd >= 0) ::close(idx_fd);
        if (tx_fd >= 0) ::close(tx_fd);
    }

    std::filesystem::path segment_path(std::uint32_t seg) const
    {
        char name[32];
        std::snprintf(name, sizeof(name), "seg-%06u.dat", seg);
        return dir / name;
    }

    int segment_fd(std::uint32_t seg)
    {
        while (segments.size() <= seg) {
            segments.push_back(open_rw(segment_path(static_cast<std::uint32_t>(segments.size()))));
        }
        return segments[seg];
    }

    std::uint32_t segment_of(std::uint64_t number) const
    {
        return static_cast<std::uint32_t>(number / opts.blocks_per_segment);
    }

    std::uint64_t next_offset(std::uint64_t number) const
    {
        if (number == 0 || number % opts.blocks_per_segment == 0) {
            return 0;
        }
        const auto& prev = entries[number - 1];
        return prev.offset + kRecordHeader + prev.length;
    }

    /// Reads and checks the record at (seg, offset); nullopt if torn or corrupt.
    std::optional<Bytes> read_record(std::uint32_t seg, std::uint64_t offset) const
    {
        if (seg >= segments.size()) {
            return std::nullopt;
        }
        std::uint8_t head[kRecordHeader];
        if (!pread_all(segments[seg], head, kRecordHeader, offset)) {
            return std::nullopt;
        }
        ByteReader r(ByteView(head, kRecordHeader));
        std::uint32_t crc = r.u32();
        std::uint32_t len = r.u32();
        if (offset + kRecordHeader + len > file_size(segments[seg])) {
            return std::nullopt;
        }
        Bytes data(len);
        if (!pread_all(segments[seg], data.data(), len, offset + kRecordHeader) || crc_of(data) != crc) {
            return std::nullopt;
        }
        return data;
    }

    Bytes index_entry(std::uint64_t number, const Entry& e) const
    {
        Bytes out;
        ByteWriter w(out);
        w.u64(number);
        w.u32(e.segment);
        w.u64(e.offset);
        w.u32(e.length);
        w.u32(crc_of(out));
        return out;
    }

    void note_txs(std::uint64_t number, const std::vector<std::string>& ids)
    {
        for (std::uint32_t i = 0; i < ids.size(); ++i) {
            if (!ids[i].empty()) {
                txs.emplace(ids[i], TxLocation{number, i});
            }
        }
    }

    void open()
    {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) {
            fail(Errc::StorageFailure, "cannot create " + dir.string() + ": " + ec.message());
        }
        std::uint32_t n_segs = 0;
        while (std::filesystem::exists(segment_path(n_segs))) {
            ++n_segs;
        }
        for (std::uint32_t s = 0; s < n_segs; ++s) {
            segment_fd(s);
        }
        idx_fd = open_rw(dir / "blocks.idx");
        tx_fd = open_rw(dir / "txs.idx");
        recover_block_index();
        recover_segments();
        recover_tx_index();
    }

    void recover_block_index()
    {
        std::uint64_t size = file_size(idx_fd);
        std::uint64_t n = size / kIndexEntry;
        Bytes buf(n * kIndexEntry);
        if (n > 0 && !pread_all(idx_fd, buf.data(), buf.size(), 0)) {
            n = 0;
        }
        for (std::uint64_t i = 0; i < n; ++i) {
            ByteView raw(buf.data() + i * kIndexEntry, kIndexEntry);
            ByteReader r(raw);
            std::uint64_t number = r.u64();
            Entry e{r.u32(), r.u64(), r.u32()};
            std::uint32_t crc = r.u32();
            if (crc != crc_of(raw.first(24)) || number != i || e.segment != segment_of(i) ||
                e.offset != next_offset(i)) {
                break;
            }
            auto rec = read_record(e.segment, e.offset);
            if (!rec || rec->size() != e.length) {
                break;
            }
            entries.push_back(e);
        }
        if (entries.size() * kIndexEntry != size) {
            spdlog::warn("block store {}: block index cut back to {} entries", dir.string(), entries.size());
            if (::ftruncate(idx_fd, static_cast<off_t>(entries.size() * kIndexEntry)) != 0) {
                io_fail("truncate block index");
            }
        }
    }

    void recover_segments()
    {
        bool changed = false;
        for (;;) {
            std::uint64_t n = entries.size();
            std::uint32_t seg = segment_of(n);
            std::uint64_t off = next_offset(n);
            auto rec = read_record(seg, off);
            bool ok = false;
            if (rec) {
                try {
                    ok = ByteReader(*rec).u64() == n;
                } catch (const Error&) {
                }
            }
            if (!ok) {
                // cut the torn tail and drop anything past it
                if (seg < segments.size() && file_size(segments[seg]) > off) {
                    spdlog::warn("block store {}: truncating torn tail of segment {} at {}", dir.string(), seg, off);
                    if (::ftruncate(segments[seg], static_cast<off_t>(off)) != 0) {
                        io_fail("truncate segment");
                    }
                    changed = true;
                }
                while (segments.size() > seg + 1u) {
                    ::close(segments.back());
                    std::filesystem::remove(segment_path(static_cast<std::uint32_t>(segments.size() - 1)));
                    segments.pop_back();
                }
                break;
            }
            Entry e{seg, off, static_cast<std::uint32_t>(rec->size())};
            entries.push_back(e);
            pwrite_all(idx_fd, index_entry(n, e), n * kIndexEntry);
            changed = true;
            spdlog::info("block store {}: re-indexed block {}", dir.string(), n);
        }
        if (changed) {
            for (int fd : segments) {
                sync_fd(fd, opts.fsync);
            }
            sync_fd(idx_fd, opts.fsync);
        }
    }

    void recover_tx_index()
    {
        std::uint64_t size = file_size(tx_fd);
        Bytes buf(size);
        if (size > 0 && !pread_all(tx_fd, buf.data(), size, 0)) {
            buf.clear();
        }
        ByteReader r(buf);
        std::uint64_t covered = 0;
        std::uint64_t good_end = 0;
        try {
            while (!r.done() && covered < entries.size()) {
                std::uint32_t crc = r.u32();
                ByteView body = r.prefixed();
                if (crc != crc_of(body)) {
                    break;
                }
                ByteReader b(body);
                std::uint64_t number = b.u64();
                if (number != covered) {
                    break;
                }
                std::uint32_t n = b.u32();
                std::vector<std::string> ids;
                ids.reserve(n);
                for (std::uint32_t i = 0; i < n; ++i) {
                    ids.push_back(b.prefixed_string());
                }
                note_txs(number, ids);
                ++covered;
                good_end = r.position();
            }
        } catch (const Error&) {
        }
        tx_end = good_end;
        if (good_end != size) {
            if (::ftruncate(tx_fd, static_cast<off_t>(good_end)) != 0) {
                io_fail("truncate tx index");
            }
        }
        for (std::uint64_t n = covered; n < entries.size(); ++n) {
            auto rec = read_record(entries[n].segment, entries[n].offset);
            Block b = decode_block(*rec);
            auto ids = tx_ids_of(b.envelopes);
            Bytes txr = tx_record(n, ids);
            pwrite_all(tx_fd, txr, tx_end);
            tx_end += txr.size();
            note_txs(n, ids);
        }
        if (covered != entries.size() || good_end != size) {
            spdlog::info("block store {}: tx index rebuilt from block {}", dir.string(), covered);
            sync_fd(tx_fd, opts.fsync);
        }
    }

    void append(std::uint64_t number, ByteView encoded, std::span<const Bytes> envelopes)
    {
        if (number != entries.size()) {
            fail(Errc::GapDetected, "block store at height " + std::to_string(entries.size()) +
                                        " cannot append block " + std::to_string(number));
        }
        std::uint32_t seg = segment_of(number);
        std::uint64_t off = next_offset(number);
        int fd = segment_fd(seg);

        Bytes rec;
        rec.reserve(kRecordHeader + encoded.size());
        ByteWriter w(rec);
        w.u32(crc_of(encoded));
        w.prefixed(encoded);
        if (crash == CrashPoint::TornSegmentWrite) {
            pwrite_all(fd, ByteView(rec).first(rec.size() / 2), off);
            crash = CrashPoint::None;
            fail(Errc::SimulatedCrash, "torn segment write");
        }
        pwrite_all(fd, rec, off);
        sync_fd(fd, opts.fsync);
        if (crash == CrashPoint::AfterSegmentWrite) {
            crash = CrashPoint::None;
            fail(Errc::SimulatedCrash, "after segment write");
        }

        Entry e{seg, off, static_cast<std::uint32_t>(encoded.size())};
        pwrite_all(idx_fd, index_entry(number, e), number * kIndexEntry);
        sync_fd(idx_fd, opts.fsync);
        if (crash == CrashPoint::AfterIndexWrite) {
            crash = CrashPoint::None;
            fail(Errc::SimulatedCrash, "after index write");
        }

        auto ids = tx_ids_of(envelopes);
        Bytes txr = tx_record(number, ids);
        pwrite_all(tx_fd, txr, tx_end);
        sync_fd(tx_fd, opts.fsync);

        std::unique_lock lock(mu);
        tx_end += txr.size();
        entries.push_back(e);
        note_txs(number, ids);
    }
};

BlockStore::BlockStore(std::filesystem::path dir, BlockStoreOptions options) : impl_(std::make_unique<Impl>())
{
    if (options.blocks_per_segment == 0) {
        fail(Errc::InvalidArgument, "blocks_per_segment must be positive");
    }
    impl_->dir = std::move(dir);
    impl_->opts = options;
    impl_->open();
}

BlockStore::~BlockStore() = default;

void BlockStore::append(const Block& block)
{
    impl_->append(block.number(), encode_block(block), block.envelopes);
}

void BlockStore::append_encoded(std::uint64_t number, ByteView encoded)
{
    Block b = decode_block(encoded);
    if (b.number() != number) {
        fail(Errc::InvalidArgument, "encoded block number mismatch");
    }
    impl_->append(number, encoded, b.envelopes);
}

Bytes BlockStore::get_block_bytes(std::uint64_t number) const
{
    Impl::Entry e;
    {
        std::shared_lock lock(impl_->mu);
        if (number >= impl_->entries.size()) {
            fail(Errc::NotFound, "block " + std::to_string(number));
        }
        e = impl_->entries[number];
    }
    auto rec = impl_->read_record(e.segment, e.offset);
    if (!rec) {
        fail(Errc::StorageFailure, "block " + std::to_string(number) + " unreadable");
    }
    return std::move(*rec);
}

Block BlockStore::get_block(std::uint64_t number) const
{
    return decode_block(get_block_bytes(number));
}

TxLocation BlockStore::get_tx(std::string_view tx_id) const
{
    std::shared_lock lock(impl_->mu);
    auto it = impl_->txs.find(std::string(tx_id));
    if (it == impl_->txs.end()) {
        fail(Errc::NotFound, "tx " + std::string(tx_id));
    }
    return it->second;
}

std::uint64_t BlockStore::next_number() const
{
    std::shared_lock lock(impl_->mu);
    return impl_->entries.size();
}

ChainScan BlockStore::verify_chain() const
{
    ChainScan scan;
    std::uint64_t n = next_number();
    std::optional<BlockHeader> prev;
    for (std::uint64_t i = 0; i < n; ++i) {
        bool good = false;
        try {
            Block b = get_block(i);
            good = b.number() == i && b.header.data_hash == compute_data_hash(b.envelopes) &&
                   (!prev || link_check(*prev, b.header));
            prev = b.header;
        } catch (const Error&) {
        }
        ++scan.blocks;
        if (!good) {
            scan.ok = false;
            scan.first_bad = i;
            break;
        }
    }
    return scan;
}

void BlockStore::save_state_snapshot(std::uint64_t after_block, ByteView snapshot)
{
    auto final_path = impl_->dir / ("state-" + std::to_string(after_block) + ".snap");
    auto tmp = final_path;
    tmp += ".tmp";
    int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) {
        io_fail("open " + tmp.string());
    }
    pwrite_all(fd, snapshot, 0);
    sync_fd(fd, impl_->opts.fsync);
    ::close(fd);
    std::filesystem::rename(tmp, final_path);
}

std::optional<std::pair<std::uint64_t, Bytes>> BlockStore::latest_state_snapshot() const
{
    std::optional<std::uint64_t> best;
    for (const auto& entry : std::filesystem::directory_iterator(impl_->dir)) {
        std::string name = entry.path().filename().string();
        std::uint64_t n;
        if (name.ends_with(".snap") && std::sscanf(name.c_str(), "state-%" SCNu64 ".snap", &n) == 1) {
            if (!best || n > *best) {
                best = n;
            }
        }
    }
    if (!best) {
        return std::nullopt;
    }
    auto path = impl_->dir / ("state-" + std::to_string(*best) + ".snap");
    int fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
    if (fd < 0) {
        io_fail("open " + path.string());
    }
    Bytes data(file_size(fd));
    bool ok = data.empty() || pread_all(fd, data.data(), data.size(), 0);
    ::close(fd);
    if (!ok) {
        fail(Errc::StorageFailure, "short read of " + path.string());
    }
    return std::make_pair(*best, std::move(data));
}

void BlockStore::inject_crash(CrashPoint point)
{
    impl_->crash = point;
}

const std::filesystem::path& BlockStore::dir() const noexcept
{
    return impl_->dir;
}

// ---------------------------------------------------------------------------

BlockStoreService::BlockStoreService(Transport& transport, std::string node_id, std::string address,
                                     std::shared_ptr<BlockStore> store)
    : transport_(transport), node_id_(std::move(node_id)), address_(std::move(address)), store_(std::move(store))
{
    if (store_->empty()) {
        store_->append(make_genesis());
    }
}

BlockStoreService::~BlockStoreService() { stop(); }

void BlockStoreService::start()
{
    listener_ = transport_.listen(node_id_, address_);
    acceptor_ = std::thread([this] { accept_loop(); });
}

void BlockStoreService::stop()
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

void BlockStoreService::accept_loop()
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

void BlockStoreService::serve(std::shared_ptr<Channel> ch)
{
    try {
        for (;;) {
            Message msg = ch->recv();
            ByteReader r(msg.body);
            switch (msg.kind()) {
            case MsgType::ValidatedOpen:
                serve_validated_stream(
                    *ch, [this] { return store_->next_number(); },
                    [this](const Block& b, ByteView raw) {
                        std::lock_guard lock(append_mu_);
                        store_->append_encoded(b.number(), raw);
                    });
                return;
            case MsgType::GetBlock:
                try {
                    ch->send(MsgType::BlockReply, store_->get_block_bytes(r.u64()));
                } catch (const Error& e) {
                    if (e.code() != Errc::NotFound) throw;
                    ch->send(MsgType::NotFound, {});
                }
                break;
            case MsgType::GetTx:
                try {
                    auto loc = store_->get_tx(as_chars(r.prefixed()));
                    Bytes out;
                    ByteWriter w(out);
                    w.u64(loc.block_number);
                    w.u32(loc.tx_index);
                    ch->send(MsgType::TxReply, out);
                } catch (const Error& e) {
                    if (e.code() != Errc::NotFound) throw;
                    ch->send(MsgType::NotFound, {});
                }
                break;
            case MsgType::StateSnapshot: {
                std::uint64_t n = r.u64();
                store_->save_state_snapshot(n, r.rest());
                ch->send(MsgType::SnapshotAck, {});
                break;
            }
            default:
                ch->send(MsgType::Error, encode_error(Errc::MalformedFrame, "unexpected message"));
            }
        }
    } catch (const Error& e) {
        if (e.code() != Errc::ChannelClosed) {
            spdlog::warn("block store {}: connection ended: {}", node_id_, e.what());
        }
    }
}

BlockStoreClient::BlockStoreClient(const Transport& transport, const std::string& store_node)
    : channel_(transport.connect(store_node))
{
}

Message BlockStoreClient::call(MsgType type, ByteView body)
{
    channel_->send(type, body);
    Message m = channel_->recv();
    if (m.kind() == MsgType::Error) {
        throw_error_message(m);
    }
    return m;
}

Block BlockStoreClient::get_block(std::uint64_t number)
{
    Bytes body;
    ByteWriter(body).u64(number);
    Message m = call(MsgType::GetBlock, body);
    if (m.kind() == MsgType::NotFound) {
        fail(Errc::NotFound, "block " + std::to_string(number));
    }
    return decode_block(m.body);
}

TxLocation BlockStoreClient::get_tx(std::string_view tx_id)
{
    Bytes body;
    ByteWriter(body).prefixed(tx_id);
    Message m = call(MsgType::GetTx, body);
    if (m.kind() == MsgType::NotFound) {
        fail(Errc::NotFound, "tx " + std::string(tx_id));
    }
    ByteReader r(m.body);
    TxLocation loc;
    loc.block_number = r.u64();
    loc.tx_index = r.u32();
    return loc;
}

void BlockStoreClient::put_state_snapshot(std::uint64_t after_block, ByteView snapshot)
{
    Bytes body;
    ByteWriter w(body);
    w.u64(after_block);
    w.raw(snapshot);
    call(MsgType::StateSnapshot, body);
}

} // namespace eov
