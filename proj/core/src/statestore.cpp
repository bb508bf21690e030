// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "eov/statestore.hpp"

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include <cerrno>
#include <cstring>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>

namespace eov {

std::string_view to_string(StateBackend backend) noexcept
{
    return backend == StateBackend::Memory ? "memory" : "durable";
}

StateBackend parse_state_backend(std::string_view name)
{
    if (name == "memory") return StateBackend::Memory;
    if (name == "durable") return StateBackend::Durable;
    fail(Errc::InvalidArgument, "unknown state backend '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Snapshot format

Bytes encode_snapshot(const StateMap& entries)
{
    Bytes out;
    ByteWriter w(out);
    w.u64(entries.size());
    for (const auto& [key, entry] : entries) {
        w.prefixed(key);
        w.prefixed(entry.value);
        w.u64(entry.version.block_num);
        w.u32(entry.version.tx_num);
    }
    return out;
}

StateMap decode_snapshot(ByteView bytes)
{
    ByteReader r(bytes);
    std::uint64_t n = r.u64();
    StateMap out;
    for (std::uint64_t i = 0; i < n; ++i) {
        std::string key = r.prefixed_string();
        StateEntry e;
        e.value = r.prefixed_bytes();
        e.version.block_num = r.u64();
        e.version.tx_num = r.u32();
        out.insert_or_assign(std::move(key), std::move(e));
    }
    if (!r.done()) {
        fail(Errc::MalformedFrame, "snapshot has " + std::to_string(r.remaining()) + " trailing bytes");
    }
    return out;
}

Bytes StateStore::snapshot() const
{
    return encode_snapshot(dump());
}

void StateStore::restore(ByteView bytes)
{
    load(decode_snapshot(bytes));
}

namespace {

void check_write_bounds(const WriteEntry& w)
{
    if (w.key.size() > kMaxKeyBytes || w.value.size() > kMaxValueBytes) {
        fail(Errc::InvalidArgument, "state entry exceeds key/value size limits");
    }
}

} // namespace

// ---------------------------------------------------------------------------
// In-memory hash table

struct MemoryStateStore::Shard {
    mutable std::shared_mutex mu;
    std::unordered_map<std::string, StateEntry> map;
};

MemoryStateStore::MemoryStateStore() : shards_(std::make_unique<Shard[]>(kShards)) {}
MemoryStateStore::~MemoryStateStore() = default;

MemoryStateStore::Shard& MemoryStateStore::shard_for(std::string_view key) const
{
    return shards_[std::hash<std::string_view>{}(key) % kShards];
}

std::optional<StateEntry> MemoryStateStore::get(std::string_view key) const
{
    auto& shard = shard_for(key);
    std::shared_lock lock(shard.mu);
    auto it = shard.map.find(std::string(key));
    if (it == shard.map.end()) {
        return std::nullopt;
    }
    return it->second;
}

void MemoryStateStore::apply_writes(std::span<const WriteEntry> writes, Version version)
{
    for (const auto& w : writes) {
        check_write_bounds(w);
        auto& shard = shard_for(w.key);
        std::unique_lock lock(shard.mu);
        shard.map.insert_or_assign(w.key, StateEntry{w.value, version});
    }
}

std::size_t MemoryStateStore::size() const
{
    std::size_t n = 0;
    for (std::size_t i = 0; i < kShards; ++i) {
        std::shared_lock lock(shards_[i].mu);
        n += shards_[i].map.size();
    }
    return n;
}

StateMap MemoryStateStore::dump() const
{
    StateMap out;
    for (std::size_t i = 0; i < kShards; ++i) {
        std::shared_lock lock(shards_[i].mu);
        for (const auto& [k, v] : shards_[i].map) {
            out.emplace(k, v);
        }
    }
    return out;
}

void MemoryStateStore::load(const StateMap& entries)
{
    for (std::size_t i = 0; i < kShards; ++i) {
        std::unique_lock lock(shards_[i].mu);
        shards_[i].map.clear();
    }
    for (const auto& [k, v] : entries) {
        auto& shard = shard_for(k);
        std::unique_lock lock(shard.mu);
        shard.map.emplace(k, v);
    }
}

// ---------------------------------------------------------------------------
// Durable log-structured store
//
// Record := u32 crc32(body) | u32 body_len | body
// body   := u32 key_len | key | u32 val_len | val | u64 block_num | u32 tx_num

namespace {

constexpr std::size_t kRecordHeader = 8;
constexpr std::uint64_t kCompactionFloor = 4u << 20;

[[noreturn]] void io_fail(const std::string& what)
{
    fail(Errc::StorageFailure, what + ": " + std::strerror(errno));
}

void append_record(Bytes& out, std::string_view key, ByteView value, Version version)
{
    Bytes body;
    body.reserve(4 + key.size() + 4 + value.size() + 12);
    ByteWriter b(body);
    b.prefixed(key);
    b.prefixed(value);
    b.u64(version.block_num);
    b.u32(version.tx_num);
    ByteWriter w(out);
    w.u32(static_cast<std::uint32_t>(crc32(0, body.data(), static_cast<uInt>(body.size()))));
    w.u32(static_cast<std::uint32_t>(body.size()));
    w.raw(body);
}

struct ParsedRecord {
    std::string key;
    StateEntry entry;
};

// Parses one record at the front of `in`; nullopt if torn or corrupt.
std::optional<ParsedRecord> parse_record(ByteView in, std::size_t& consumed)
{
    if (in.size() < kRecordHeader) {
        return std::nullopt;
    }
    ByteReader r(in);
    std::uint32_t crc = r.u32();
    std::uint32_t len = r.u32();
    if (len > r.remaining()) {
        return std::nullopt;
    }
    auto body = r.take(len);
    if (crc32(0, body.data(), static_cast<uInt>(body.size())) != crc) {
        return std::nullopt;
    }
    try {
        ByteReader br(body);
        ParsedRecord rec;
        rec.key = br.prefixed_string();
        rec.entry.value = br.prefixed_bytes();
        rec.entry.version.block_num = br.u64();
        rec.entry.version.tx_num = br.u32();
        if (!br.done()) {
            return std::nullopt;
        }
        consumed = kRecordHeader + len;
        return rec;
    } catch (const Error&) {
        return std::nullopt;
    }
}

void pwrite_all(int fd, ByteView data, std::uint64_t offset)
{
    std::size_t done = 0;
    while (done < data.size()) {
        ssize_t n = ::pwrite(fd, data.data() + done, data.size() - done,
                             static_cast<off_t>(offset + done));
        if (n < 0) {
            if (errno == EINTR) continue;
            io_fail("state log write");
        }
        done += static_cast<std::size_t>(n);
    }
}

void pread_all(int fd, std::uint8_t* out, std::size_t len, std::uint64_t offset)
{
    std::size_t done = 0;
    while (done < len) {
        ssize_t n = ::pread(fd, out + done, len - done, static_cast<off_t>(offset + done));
        if (n < 0) {
            if (errno == EINTR) continue;
            io_fail("state log read");
        }
        if (n == 0) {
            fail(Errc::StorageFailure, "state log truncated under reader");
        }
        done += static_cast<std::size_t>(n);
    }
}

} // namespace

struct DurableStateStore::Impl {
    struct Location {
        std::uint64_t offset;
        std::uint32_t length;
    };

    std::filesystem::path dir;
    std::filesystem::path path;
    int fd = -1;
    mutable std::shared_mutex mu;
    std::unordered_map<std::string, Location> index;
    std::uint64_t end = 0;
    std::uint64_t live_bytes = 0;
    std::uint64_t dead_bytes = 0;

    explicit Impl(std::filesystem::path d) : dir(std::move(d)), path(dir / "state.log")
    {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) {
            fail(Errc::StorageFailure, "cannot create " + dir.string() + ": " + ec.message());
        }
        open_and_replay();
    }

    ~Impl()
    {
        if (fd >= 0) {
            ::close(fd);
        }
    }

    void open_and_replay()
    {
        fd = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
        if (fd < 0) {
            io_fail("open " + path.string());
        }
        off_t size = ::lseek(fd, 0, SEEK_END);
        if (size < 0) {
            io_fail("seek " + path.string());
        }
        Bytes contents(static_cast<std::size_t>(size));
        if (size > 0) {
            pread_all(fd, contents.data(), contents.size(), 0);
        }
        std::uint64_t pos = 0;
        while (pos < contents.size()) {
            std::size_t consumed = 0;
            auto rec = parse_record(ByteView(contents).subspan(pos), consumed);
            if (!rec) {
                break;
            }
            note_write(rec->key, Location{pos, static_cast<std::uint32_t>(consumed)});
            pos += consumed;
        }
        end = pos;
        if (pos < contents.size() && ::ftruncate(fd, static_cast<off_t>(pos)) != 0) {
            io_fail("truncate torn state log tail");
        }
    }

    void note_write(const std::string& key, Location loc)
    {
        auto [it, inserted] = index.try_emplace(key, loc);
        if (!inserted) {
            dead_bytes += it->second.length;
            live_bytes -= it->second.length;
            it->second = loc;
        }
        live_bytes += loc.length;
    }

    StateEntry read_at(Location loc) const
    {
        Bytes buf(loc.length);
        pread_all(fd, buf.data(), buf.size(), loc.offset);
        std::size_t consumed = 0;
        auto rec = parse_record(buf, consumed);
        if (!rec) {
            fail(Errc::StorageFailure, "corrupt state record at offset " + std::to_string(loc.offset));
        }
        return std::move(rec->entry);
    }

    // Caller holds `mu` exclusively.
    void rewrite(const StateMap& entries)
    {
        auto tmp = path;
        tmp += ".tmp";
        int out = ::open(tmp.c_str(), O_RDWR | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
        if (out < 0) {
            io_fail("open " + tmp.string());
        }
        Bytes buf;
        std::unordered_map<std::string, Location> fresh;
        std::uint64_t pos = 0;
        for (const auto& [key, entry] : entries) {
            std::size_t before = buf.size();
            append_record(buf, key, entry.value, entry.version);
            auto len = static_cast<std::uint32_t>(buf.size() - before);
            fresh.emplace(key, Location{pos + before, len});
            if (buf.size() > (1u << 20)) {
                pwrite_all(out, buf, pos);
                pos += buf.size();
                buf.clear();
            }
        }
        pwrite_all(out, buf, pos);
        pos += buf.size();
        if (::fdatasync(out) != 0) {
            ::close(out);
            io_fail("sync " + tmp.string());
        }
        if (::rename(tmp.c_str(), path.c_str()) != 0) {
            ::close(out);
            io_fail("rename " + tmp.string());
        }
        ::close(fd);
        fd = out;
        index = std::move(fresh);
        end = pos;
        live_bytes = pos;
        dead_bytes = 0;
    }

    StateMap dump_locked() const
    {
        StateMap out;
        for (const auto& [key, loc] : index) {
            out.emplace(key, read_at(loc));
        }
        return out;
    }
};

DurableStateStore::DurableStateStore(std::filesystem::path dir)
    : impl_(std::make_unique<Impl>(std::move(dir)))
{
}

DurableStateStore::~DurableStateStore() = default;

std::optional<StateEntry> DurableStateStore::get(std::string_view key) const
{
    std::shared_lock lock(impl_->mu);
    auto it = impl_->index.find(std::string(key));
    if (it == impl_->index.end()) {
        return std::nullopt;
    }
    return impl_->read_at(it->second);
}

void DurableStateStore::apply_writes(std::span<const WriteEntry> writes, Version version)
{
    Bytes buf;
    std::vector<Impl::Location> locs;
    locs.reserve(writes.size());
    std::uint64_t base = impl_->end;
    for (const auto& w : writes) {
        check_write_bounds(w);
        std::size_t before = buf.size();
        append_record(buf, w.key, w.value, version);
        locs.push_back({base + before, static_cast<std::uint32_t>(buf.size() - before)});
    }
    pwrite_all(impl_->fd, buf, base);

    std::unique_lock lock(impl_->mu);
    for (std::size_t i = 0; i < writes.size(); ++i) {
        impl_->note_write(writes[i].key, locs[i]);
    }
    impl_->end = base + buf.size();
}

void DurableStateStore::sync()
{
    if (::fdatasync(impl_->fd) != 0) {
        io_fail("sync state log");
    }
    if (impl_->dead_bytes > kCompactionFloor && impl_->dead_bytes > impl_->live_bytes) {
        std::unique_lock lock(impl_->mu);
        impl_->rewrite(impl_->dump_locked());
    }
}

std::size_t DurableStateStore::size() const
{
    std::shared_lock lock(impl_->mu);
    return impl_->index.size();
}

StateMap DurableStateStore::dump() const
{
    std::shared_lock lock(impl_->mu);
    return impl_->dump_locked();
}

void DurableStateStore::load(const StateMap& entries)
{
    std::unique_lock lock(impl_->mu);
    impl_->rewrite(entries);
}

std::uint64_t DurableStateStore::log_bytes() const
{
    std::shared_lock lock(impl_->mu);
    return impl_->end;
}

std::unique_ptr<StateStore> make_state_store(StateBackend backend, const std::filesystem::path& dir)
{
    if (backend == StateBackend::Memory) {
        return std::make_unique<MemoryStateStore>();
    }
    if (dir.empty()) {
        fail(Errc::InvalidArgument, "durable state store needs a directory");
    }
    return std::make_unique<DurableStateStore>(dir);
}

} // namespace eov
