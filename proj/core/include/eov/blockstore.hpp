// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

// Append-only block persistence.
//
// Layout of a store directory:
//   seg-NNNNNN.dat   blocks [N*per_segment, (N+1)*per_segment), each record
//                    u32 crc32 | u32 len | encoded block
//   blocks.idx       one 28-byte entry per block:
//                    u64 number | u32 segment | u64 offset | u32 len | u32 crc32(first 24 bytes)
//   txs.idx          per block: u32 crc32 | u32 len | u64 number | u32 n | (u32 id_len | id)*
//   state-<n>.snap   world-state snapshot taken after block n
//
// Segments are the source of truth. On open the index files are checked
// against them, torn tails are cut off and missing index entries rebuilt.

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <thread>

#include "eov/ledger.hpp"
#include "eov/transport.hpp"

namespace eov {

/// Abort points for crash-recovery tests. The next append throws
/// SimulatedCrash at the chosen point; the store must then be reopened.
enum class CrashPoint {
    None,
    TornSegmentWrite,  // half of the segment record written
    AfterSegmentWrite, // record durable, no index entry
    AfterIndexWrite,   // block index written, tx index not
};

struct BlockStoreOptions {
    std::uint64_t blocks_per_segment = 10000;
    bool fsync = true;
};

struct TxLocation {
    std::uint64_t block_number = 0;
    std::uint32_t tx_index = 0;
    bool operator==(const TxLocation&) const = default;
};

struct ChainScan {
    bool ok = true;
    std::uint64_t blocks = 0;
    /// Number of the first block that fails its link or data hash.
    std::optional<std::uint64_t> first_bad;
};

class BlockStore {
public:
    explicit BlockStore(std::filesystem::path dir, BlockStoreOptions options = {});
    ~BlockStore();

    BlockStore(const BlockStore&) = delete;
    BlockStore& operator=(const BlockStore&) = delete;

    /// Throws GapDetected unless block.number == next_number().
    void append(const Block& block);
    void append_encoded(std::uint64_t number, ByteView encoded);

    Block get_block(std::uint64_t number) const;
    Bytes get_block_bytes(std::uint64_t number) const;
    TxLocation get_tx(std::string_view tx_id) const;

    std::uint64_t next_number() const;
    bool empty() const { return next_number() == 0; }

    ChainScan verify_chain() const;

    void save_state_snapshot(std::uint64_t after_block, ByteView snapshot);
    std::optional<std::pair<std::uint64_t, Bytes>> latest_state_snapshot() const;

    void inject_crash(CrashPoint point);

    const std::filesystem::path& dir() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Network front of a BlockStore: accepts validated-block streams and
/// answers GETBLOCK / GETTX / STATE_SNAPSHOT.
///
///   GETBLOCK u64 n            -> BLOCK_REPLY encoded block | NOT_FOUND
///   GETTX    u32 len | tx_id  -> TX_REPLY u64 block | u32 index | NOT_FOUND
///   STATE_SNAPSHOT u64 n | snapshot bytes -> SNAPSHOT_ACK
class BlockStoreService {
public:
    BlockStoreService(Transport& transport, std::string node_id, std::string address,
                      std::shared_ptr<BlockStore> store);
    ~BlockStoreService();

    void start();
    void stop();
    BlockStore& store() { return *store_; }

private:
    void accept_loop();
    void serve(std::shared_ptr<Channel> ch);

    Transport& transport_;
    std::string node_id_;
    std::string address_;
    std::shared_ptr<BlockStore> store_;
    std::mutex append_mu_;
    std::unique_ptr<Listener> listener_;
    std::thread acceptor_;
    std::mutex conns_mu_;
    std::vector<std::shared_ptr<Channel>> conns_;
    std::vector<std::thread> workers_;
    std::atomic<bool> stopping_{false};
};

class BlockStoreClient {
public:
    BlockStoreClient(const Transport& transport, const std::string& store_node);

    Block get_block(std::uint64_t number);
    TxLocation get_tx(std::string_view tx_id);
    void put_state_snapshot(std::uint64_t after_block, ByteView snapshot);

private:
    Message call(MsgType type, ByteView body);
    std::unique_ptr<Channel> channel_;
};

} // namespace eov
