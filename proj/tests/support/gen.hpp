// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

// Seeded generators and small fixtures shared by the tests.

#pragma once

#include <filesystem>
#include <random>
#include <set>

#include "eov/bench/workload.hpp"
#include "eov/ledger.hpp"
#include "eov/wire.hpp"

namespace eov::test {

/// Base seed; override with EOV_TEST_SEED to replay a failure.
std::uint64_t base_seed();

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    std::mt19937_64& rng() { return rng_; }
    std::uint64_t u64() { return rng_(); }
    std::uint64_t range(std::uint64_t lo, std::uint64_t hi) // inclusive
    {
        return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng_);
    }
    bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }

    Bytes bytes(std::size_t max_len);
    std::string str(std::size_t max_len, std::size_t min_len = 0);
    Version version();
    /// Unique keys within reads and within writes.
    ReadWriteSet rwset(std::size_t max_reads = 6, std::size_t max_writes = 6);
    TxHeader header();
    std::vector<Endorsement> endorsements(std::size_t max = 4);

private:
    std::mt19937_64 rng_;
};

class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& sub) const { return path_ / sub; }

private:
    std::filesystem::path path_;
};

/// Standard deployment keys (MAC scheme unless asked otherwise).
bench::Identities identities(std::size_t endorsers = 1, SignatureScheme scheme = SignatureScheme::Mac,
                             std::uint64_t seed = 7);

/// Envelope endorsed by endorser `e` and signed by the client.
Bytes make_tx(const bench::Identities& ids, std::uint64_t nonce, const ReadWriteSet& rw,
              std::size_t endorser = 0, std::size_t padding = 0);

} // namespace eov::test
