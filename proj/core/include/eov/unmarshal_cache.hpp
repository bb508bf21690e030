// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

// Cyclic buffer of lazily decoded transaction layers, one slot per block in
// the validation pipeline. Readers take no locks: a layer is decoded on
// first use and published with an atomic exchange. Two workers racing on the
// same layer both decode; the later store wins and the loser's copy is kept
// alive until the slot is released, so references handed out stay valid.

#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "eov/wire.hpp"

namespace eov {

template <typename T>
class LazyCell {
public:
    LazyCell() = default;
    LazyCell(const LazyCell&) = delete;
    LazyCell& operator=(const LazyCell&) = delete;
    ~LazyCell() { delete ptr_.load(std::memory_order_acquire); }

    /// Returns the stored value, decoding with `make` if none is stored yet.
    /// `hit` is set to whether a stored value was found.
    template <typename F>
    const T& get(F&& make, bool& hit)
    {
        if (T* p = ptr_.load(std::memory_order_acquire)) {
            hit = true;
            return *p;
        }
        hit = false;
        auto fresh = std::make_unique<T>(make());
        T* raw = fresh.release();
        if (T* old = ptr_.exchange(raw, std::memory_order_acq_rel)) {
            std::lock_guard lock(retired_mu_);
            retired_.emplace_back(old);
        }
        return *raw;
    }

    bool filled() const { return ptr_.load(std::memory_order_acquire) != nullptr; }

private:
    std::atomic<T*> ptr_{nullptr};
    std::mutex retired_mu_;
    std::vector<std::unique_ptr<T>> retired_;
};

struct CachedTx {
    LazyCell<RawEnvelope> envelope;
    LazyCell<PayloadLayer> payload;
    LazyCell<TxHeader> header;
    LazyCell<ReadWriteSet> rwset;
    LazyCell<std::vector<Endorsement>> endorsements;
};

class UnmarshalCache {
public:
    static constexpr std::uint64_t kEmpty = ~std::uint64_t{0};

    explicit UnmarshalCache(std::size_t slots) : slots_(slots == 0 ? 1 : slots) {}

    std::size_t slots() const noexcept { return slots_.size(); }

    /// Claims slot block_number mod slots. Throws logic_error if the previous
    /// occupant has not been released.
    void admit(std::uint64_t block_number, std::size_t n_txs)
    {
        Slot& s = slots_[block_number % slots_.size()];
        if (s.block.load(std::memory_order_acquire) != kEmpty) {
            throw std::logic_error("unmarshal cache slot still holds block " +
                                   std::to_string(s.block.load()));
        }
        s.txs = std::make_unique<CachedTx[]>(n_txs);
        s.n = n_txs;
        s.block.store(block_number, std::memory_order_release);
    }

    void release(std::uint64_t block_number)
    {
        Slot& s = slots_[block_number % slots_.size()];
        if (s.block.load(std::memory_order_acquire) != block_number) {
            throw std::logic_error("releasing a slot that holds another block");
        }
        s.txs.reset();
        s.n = 0;
        s.block.store(kEmpty, std::memory_order_release);
    }

    /// Entry for tx `index` of `block_number`; throws logic_error if the slot
    /// holds a different block.
    CachedTx& tx(std::uint64_t block_number, std::uint32_t index)
    {
        Slot& s = slots_[block_number % slots_.size()];
        if (s.block.load(std::memory_order_acquire) != block_number || index >= s.n) {
            throw std::logic_error("unmarshal cache slot does not hold block " + std::to_string(block_number));
        }
        return s.txs[index];
    }

    std::uint64_t occupant(std::size_t slot) const { return slots_[slot].block.load(std::memory_order_acquire); }

    void count(bool hit) noexcept { (hit ? hits_ : decodes_).fetch_add(1, std::memory_order_relaxed); }
    std::uint64_t hits() const noexcept { return hits_.load(); }
    std::uint64_t decodes() const noexcept { return decodes_.load(); }

private:
    struct Slot {
        std::atomic<std::uint64_t> block{kEmpty};
        std::unique_ptr<CachedTx[]> txs;
        std::size_t n = 0;
    };

    std::vector<Slot> slots_;
    std::atomic<std::uint64_t> hits_{0};
    std::atomic<std::uint64_t> decodes_{0};
};

} // namespace eov
