// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "eov/committer.hpp"

#include <latch>

#include <spdlog/spdlog.h>

namespace eov {

void PipelineConfig::validate() const
{
    if (block_shepherds < 1 || tx_validators < 1) {
        fail(Errc::InvalidArgument, "block_shepherds and tx_validators must be >= 1");
    }
}

PipelineConfig PipelineConfig::scaled_to(unsigned hw)
{
    hw = std::max(hw, 1u);
    PipelineConfig c;
    c.block_shepherds = std::max(1u, (31 * hw + 12) / 24);
    c.tx_validators = std::max(1u, (25 * hw + 12) / 24);
    while (c.block_shepherds + c.tx_validators < 2 * hw) {
        if (c.block_shepherds <= c.tx_validators) {
            ++c.block_shepherds;
        } else {
            ++c.tx_validators;
        }
    }
    return c;
}

// ---------------------------------------------------------------------------

template <typename T, typename F>
const T& TxLayers::via_cache(LazyCell<T>& cell, F&& make)
{
    bool hit = false;
    const T& v = cell.get(std::forward<F>(make), hit);
    if (stats_) {
        stats_->count(hit);
    }
    return v;
}

const RawEnvelope& TxLayers::envelope()
{
    if (cached_) {
        return via_cache(cached_->envelope, [&] { return decode_envelope(bytes_); });
    }
    env_ = decode_envelope(bytes_);
    return *env_;
}

const PayloadLayer& TxLayers::payload()
{
    if (cached_) {
        return via_cache(cached_->payload, [&] { return decode_payload(envelope().payload_bytes); });
    }
    payload_ = decode_payload(decode_envelope(bytes_).payload_bytes);
    return *payload_;
}

const TxHeader& TxLayers::header()
{
    if (cached_) {
        return via_cache(cached_->header, [&] { return decode_header(payload().header_bytes); });
    }
    header_ = decode_header(decode_payload(decode_envelope(bytes_).payload_bytes).header_bytes);
    return *header_;
}

const ReadWriteSet& TxLayers::rwset()
{
    if (cached_) {
        return via_cache(cached_->rwset, [&] { return decode_rwset(payload().rwset_bytes); });
    }
    rwset_ = decode_rwset(decode_payload(decode_envelope(bytes_).payload_bytes).rwset_bytes);
    return *rwset_;
}

const std::vector<Endorsement>& TxLayers::endorsements()
{
    if (cached_) {
        return via_cache(cached_->endorsements, [&] { return decode_endorsements(payload().endorsements_bytes); });
    }
    endorsements_ = decode_endorsements(decode_payload(decode_envelope(bytes_).payload_bytes).endorsements_bytes);
    return *endorsements_;
}

ValidationFlag validate_tx(const Registry& registry, const EndorsementPolicy& policy, TxLayers& tx)
{
    std::string creator;
    try {
        const TxHeader& h = tx.header();
        if (h.tx_id != make_tx_id(h.creator, h.nonce)) {
            return ValidationFlag::Malformed;
        }
        creator = h.creator;
        if (!has_unique_keys(tx.rwset())) {
            return ValidationFlag::Malformed;
        }
        tx.endorsements();
    } catch (const Error&) {
        return ValidationFlag::Malformed;
    }

    const RawEnvelope& env = tx.envelope();
    if (!registry.is_authorized_client(creator) ||
        !registry.verify(creator, env.payload_bytes, env.signature)) {
        return ValidationFlag::BadEnvelopeSig;
    }

    const PayloadLayer& payload = tx.payload();
    Bytes signed_bytes = endorsement_message(payload.rwset_bytes, payload.padding);
    if (!check_policy(registry, policy, tx.endorsements(), signed_bytes)) {
        return ValidationFlag::BadEndorsement;
    }
    return ValidationFlag::Valid;
}

ValidationFlag validate_tx(const Registry& registry, const EndorsementPolicy& policy, ByteView envelope)
{
    TxLayers tx(envelope, nullptr, nullptr);
    return validate_tx(registry, policy, tx);
}

std::vector<ValidationFlag> mvcc_commit(StateStore& state, std::uint64_t block_number,
                                        std::span<const ValidationFlag> pre_flags,
                                        const std::function<const ReadWriteSet&(std::uint32_t)>& rwset_of)
{
    static std::atomic<bool> noted{false};
    std::vector<ValidationFlag> flags(pre_flags.begin(), pre_flags.end());
    for (std::uint32_t i = 0; i < flags.size(); ++i) {
        if (flags[i] != ValidationFlag::Valid) {
            continue;
        }
        const ReadWriteSet& rw = rwset_of(i);
        bool current = true;
        for (const auto& read : rw.reads) {
            auto entry = state.get(read.key);
            Version now = entry ? entry->version : kGenesisVersion;
            if (now != read.version) {
                current = false;
                break;
            }
        }
        if (!current) {
            flags[i] = ValidationFlag::MvccConflict;
            continue;
        }
        if (!noted.load(std::memory_order_relaxed)) {
            for (const auto& w : rw.writes) {
                bool read_too = std::any_of(rw.reads.begin(), rw.reads.end(),
                                            [&](const ReadEntry& r) { return r.key == w.key; });
                if (!read_too && !noted.exchange(true)) {
                    spdlog::info("conformance: tx {} of block {} writes key '{}' it did not read; "
                                 "only read versions are checked",
                                 i, block_number, w.key);
                }
            }
        }
        state.apply_writes(rw.writes, Version{block_number, i});
    }
    return flags;
}

std::vector<ValidationFlag> mvcc_commit(StateStore& state, const Block& block, std::span<const ValidationFlag> pre_flags)
{
    ReadWriteSet current;
    return mvcc_commit(state, block.number(), pre_flags, [&](std::uint32_t i) -> const ReadWriteSet& {
        TxLayers tx(block.envelopes[i], nullptr, nullptr);
        current = tx.rwset();
        return current;
    });
}

// ---------------------------------------------------------------------------

struct Committer::Job {
    Block block;
    std::vector<ValidationFlag> pre;
    std::chrono::steady_clock::time_point delivered;
};

Committer::Committer(std::shared_ptr<const Registry> registry, PipelineConfig config, std::string orderer_id,
                     EndorsementPolicy policy, std::shared_ptr<StateStore> state, BlockHeader genesis)
    : registry_(std::move(registry)),
      config_(config),
      orderer_id_(std::move(orderer_id)),
      policy_(std::move(policy)),
      state_(std::move(state)),
      last_accepted_(genesis)
{
    config_.validate();
    policy_.validate();
    accepted_ = genesis.number;
    committed_ = genesis.number;
    if (config_.opt_p3) {
        cache_ = std::make_unique<UnmarshalCache>(config_.opt_p2 ? config_.block_shepherds : 1);
    }
    validators_ = std::make_unique<ThreadPool>(config_.tx_validators);
    if (config_.opt_p2) {
        admission_ = std::make_unique<std::counting_semaphore<>>(config_.block_shepherds);
        for (std::uint32_t i = 0; i < config_.block_shepherds; ++i) {
            shepherds_.emplace_back([this] { shepherd_loop(); });
        }
        committer_thread_ = std::thread([this] { commit_loop(); });
    }
}

Committer::~Committer()
{
    {
        std::lock_guard lock(mu_);
        stopping_ = true;
    }
    cv_.notify_all();
    to_shepherd_.close();
    for (auto& t : shepherds_) {
        t.join();
    }
    if (committer_thread_.joinable()) {
        committer_thread_.join();
    }
}

void Committer::set_store(std::shared_ptr<BlockStore> local, std::shared_ptr<BlockSink> remote)
{
    local_store_ = std::move(local);
    remote_store_ = std::move(remote);
    if (local_store_ && local_store_->empty()) {
        local_store_->append(make_genesis());
    }
}

void Committer::add_sink(std::shared_ptr<BlockSink> sink)
{
    sinks_.push_back(std::move(sink));
}

std::optional<Block> Committer::verify_block(ByteView encoded)
{
    Block b;
    try {
        b = decode_block(encoded);
    } catch (const Error& e) {
        spdlog::warn("committer: discarding undecodable block: {}", e.what());
        return std::nullopt;
    }
    const char* why = nullptr;
    if (!b.flags.empty()) {
        why = "block already carries validation flags";
    } else if (!registry_->has_role(orderer_id_, Role::Orderer) ||
               !registry_->verify(orderer_id_, encode_block_header(b.header), b.orderer_signature)) {
        why = "bad orderer signature";
    } else if (b.header.data_hash != compute_data_hash(b.envelopes)) {
        why = "data hash mismatch";
    } else if (!link_check(last_accepted_, b.header)) {
        why = "does not extend the last accepted block";
    }
    if (why) {
        spdlog::warn("committer: discarding block {} (expected {}): {}", b.number(), last_accepted_.number + 1, why);
        return std::nullopt;
    }
    return b;
}

void Committer::check_fatal()
{
    std::lock_guard lock(mu_);
    if (fatal_) {
        std::rethrow_exception(fatal_);
    }
}

void Committer::set_fatal(std::exception_ptr e)
{
    {
        std::lock_guard lock(mu_);
        if (!fatal_) {
            fatal_ = e;
        }
    }
    try {
        std::rethrow_exception(e);
    } catch (const std::exception& ex) {
        spdlog::error("committer pipeline halted: {}", ex.what());
    }
    cv_.notify_all();
    if (admission_) {
        admission_->release(config_.block_shepherds);
    }
}

bool Committer::deliver(ByteView encoded)
{
    check_fatal();
    // latency starts once the pipeline takes the block, not while it waits
    // for a free shepherd
    if (admission_) {
        admission_->acquire();
        check_fatal();
    }
    auto delivered = std::chrono::steady_clock::now();
    auto block = verify_block(encoded);
    if (!block) {
        if (admission_) {
            admission_->release();
        }
        ++discarded_;
        return false;
    }
    auto job = std::make_unique<Job>();
    job->block = std::move(*block);
    job->delivered = delivered;
    last_accepted_ = job->block.header;
    std::uint64_t number = job->block.number();

    if (!config_.opt_p2) {
        accepted_ = number;
        if (cache_) {
            cache_->admit(number, job->block.envelopes.size());
        }
        try {
            pre_validate(*job);
            commit(*job);
        } catch (...) {
            set_fatal(std::current_exception());
            throw;
        }
        return true;
    }

    if (cache_) {
        cache_->admit(number, job->block.envelopes.size());
    }
    accepted_ = number;
    to_shepherd_.push(std::move(job));
    return true;
}

void Committer::pre_validate(Job& job)
{
    const std::size_t n = job.block.envelopes.size();
    job.pre.assign(n, ValidationFlag::Valid);
    if (n == 0) {
        return;
    }
    const std::size_t workers = std::min<std::size_t>(config_.tx_validators, n);
    std::atomic<std::size_t> next{0};
    std::latch done(static_cast<std::ptrdiff_t>(workers));
    std::exception_ptr error;
    std::mutex error_mu;
    const std::uint64_t number = job.block.number();
    for (std::size_t w = 0; w < workers; ++w) {
        validators_->submit([&] {
            try {
                for (std::size_t i; (i = next.fetch_add(1)) < n;) {
                    CachedTx* cached = cache_ ? &cache_->tx(number, static_cast<std::uint32_t>(i)) : nullptr;
                    TxLayers tx(job.block.envelopes[i], cached, cache_.get());
                    job.pre[i] = validate_tx(*registry_, policy_, tx);
                }
            } catch (...) {
                std::lock_guard lock(error_mu);
                error = std::current_exception();
            }
            done.count_down();
        });
    }
    done.wait();
    if (error) {
        std::rethrow_exception(error);
    }
}

void Committer::commit(Job& job)
{
    Block& b = job.block;
    const std::uint64_t number = b.number();
    std::optional<TxLayers> current;
    b.flags = mvcc_commit(*state_, number, job.pre, [&](std::uint32_t i) -> const ReadWriteSet& {
        CachedTx* cached = cache_ ? &cache_->tx(number, i) : nullptr;
        current.emplace(b.envelopes[i], cached, cache_.get());
        return current->rwset();
    });
    state_->sync();

    auto encoded = std::make_shared<const Bytes>(encode_block(b));
    if (!config_.opt_p2 && local_store_) {
        local_store_->append_encoded(number, *encoded);
    }
    if (config_.opt_p2 && remote_store_) {
        remote_store_->publish(number, encoded);
    }
    for (auto& sink : sinks_) {
        sink->publish(number, encoded);
    }
    if (cache_) {
        current.reset();
        cache_->release(number);
    }

    CommitResult result;
    result.block_number = number;
    result.flags = b.flags;
    result.delivered = job.delivered;
    result.committed = std::chrono::steady_clock::now();
    // before committed_ moves, so drain() also covers the callback
    if (on_commit_) {
        on_commit_(result);
    }
    {
        std::lock_guard lock(mu_);
        committed_ = number;
    }
    cv_.notify_all();
    if (admission_) {
        admission_->release();
    }
}

void Committer::shepherd_loop()
{
    while (auto job = to_shepherd_.pop()) {
        try {
            pre_validate(**job);
        } catch (...) {
            set_fatal(std::current_exception());
            return;
        }
        std::uint64_t number = (*job)->block.number();
        {
            std::lock_guard lock(mu_);
            ready_.emplace(number, std::move(*job));
        }
        cv_.notify_all();
    }
}

void Committer::commit_loop()
{
    for (;;) {
        std::unique_ptr<Job> job;
        {
            std::unique_lock lock(mu_);
            cv_.wait(lock, [&] { return stopping_ || fatal_ || ready_.contains(committed_ + 1); });
            auto it = ready_.find(committed_ + 1);
            if (it == ready_.end() || fatal_) {
                return;
            }
            job = std::move(it->second);
            ready_.erase(it);
        }
        try {
            commit(*job);
        } catch (...) {
            set_fatal(std::current_exception());
            return;
        }
    }
}

void Committer::drain()
{
    {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return fatal_ || committed_ >= accepted_; });
    }
    check_fatal();
}

// ---------------------------------------------------------------------------

CommitterNode::CommitterNode(const Transport& transport, std::string orderer_node, std::shared_ptr<Committer> committer)
    : transport_(transport), orderer_node_(std::move(orderer_node)), committer_(std::move(committer))
{
}

CommitterNode::~CommitterNode() { stop(); }

void CommitterNode::start()
{
    thread_ = std::thread([this] { run(); });
}

void CommitterNode::stop()
{
    if (stopping_.exchange(true)) {
        return;
    }
    {
        std::lock_guard lock(mu_);
        if (stream_) {
            stream_->close();
        }
    }
    if (thread_.joinable()) {
        thread_.join();
    }
}

std::optional<std::string> CommitterNode::error() const
{
    std::lock_guard lock(err_mu_);
    return error_;
}

void CommitterNode::run()
{
    while (!stopping_) {
        try {
            {
                std::lock_guard lock(mu_);
                if (stopping_) {
                    return;
                }
                stream_ = std::make_unique<DeliverStream>(transport_, orderer_node_, committer_->last_accepted() + 1);
            }
            for (;;) {
                Bytes block = stream_->next();
                if (!committer_->deliver(block)) {
                    ++redeliveries_;
                    spdlog::info("committer: requesting redelivery from block {}", committer_->last_accepted() + 1);
                    break;
                }
            }
        } catch (const Error& e) {
            if (stopping_) {
                return;
            }
            if (e.code() == Errc::ChannelClosed || e.code() == Errc::PeerUnreachable) {
                spdlog::warn("committer: deliver stream lost ({}), reconnecting", e.what());
                std::this_thread::sleep_for(std::chrono::milliseconds(50));
                continue;
            }
            std::lock_guard lock(err_mu_);
            error_ = e.what();
            return;
        } catch (const std::exception& e) {
            std::lock_guard lock(err_mu_);
            error_ = e.what();
            return;
        }
    }
}

} // namespace eov
