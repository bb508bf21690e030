// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "eov/wire.hpp"

namespace eov {

struct StateEntry {
    Bytes value;
    Version version;
    bool operator==(const StateEntry&) const = default;
};

using StateMap = std::map<std::string, StateEntry, std::less<>>;

inline constexpr std::size_t kMaxKeyBytes = 256;
inline constexpr std::size_t kMaxValueBytes = 64 * 1024;

enum class StateBackend { Memory, Durable };

std::string_view to_string(StateBackend backend) noexcept;
StateBackend parse_state_backend(std::string_view name);

/// Versioned world state. Any number of concurrent readers; exactly one
/// writer. A reader racing apply_writes sees each key either before or after
/// the write, never a torn entry.
class StateStore {
public:
    virtual ~StateStore() = default;

    virtual std::optional<StateEntry> get(std::string_view key) const = 0;

    /// Writes every entry with `version`. Throws StorageFailure on I/O error.
    virtual void apply_writes(std::span<const WriteEntry> writes, Version version) = 0;

    /// Block boundary: makes everything applied so far durable.
    virtual void sync() {}

    virtual std::size_t size() const = 0;

    /// Sorted copy of every entry.
    virtual StateMap dump() const = 0;

    /// Replaces the whole content. No concurrent writers allowed.
    virtual void load(const StateMap& entries) = 0;

    /// u64 n_entries | (u32 key_len | key | u32 val_len | val | u64 block_num | u32 tx_num)*,
    /// sorted by key.
    Bytes snapshot() const;
    /// Throws MalformedFrame on truncated or corrupt input; leaves the store
    /// untouched in that case.
    void restore(ByteView bytes);
};

Bytes encode_snapshot(const StateMap& entries);
StateMap decode_snapshot(ByteView bytes);

/// Hash table sharded by key hash, each shard guarded by a reader/writer lock.
class MemoryStateStore final : public StateStore {
public:
    MemoryStateStore();
    ~MemoryStateStore() override;

    std::optional<StateEntry> get(std::string_view key) const override;
    void apply_writes(std::span<const WriteEntry> writes, Version version) override;
    std::size_t size() const override;
    StateMap dump() const override;
    void load(const StateMap& entries) override;

private:
    struct Shard;
    Shard& shard_for(std::string_view key) const;

    static constexpr std::size_t kShards = 64;
    std::unique_ptr<Shard[]> shards_;
};

/// Append-only record log plus an in-memory index of file offsets. Reads go
/// to the file; writes append immediately and become durable at sync(),
/// which fdatasyncs once per block. The log is compacted when dead records
/// outweigh live ones. Reopening a directory replays the log, stopping at the
/// first torn or corrupt record.
class DurableStateStore final : public StateStore {
public:
    explicit DurableStateStore(std::filesystem::path dir);
    ~DurableStateStore() override;

    std::optional<StateEntry> get(std::string_view key) const override;
    void apply_writes(std::span<const WriteEntry> writes, Version version) override;
    void sync() override;
    std::size_t size() const override;
    StateMap dump() const override;
    void load(const StateMap& entries) override;

    std::uint64_t log_bytes() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::unique_ptr<StateStore> make_state_store(StateBackend backend,
                                             const std::filesystem::path& dir = {});

} // namespace eov
