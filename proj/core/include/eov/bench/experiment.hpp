// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

// Experiment matrix.
//
//   E1_transport        pre-built blocks pushed through a channel and dropped
//   E2_orderer_payload  ordering service alone, payload sweep, block consumer drops
//   E3_peer_cumulative  pre-built valid blocks into the committer, presets
//                       baseline < P-I < P-II < P-III
//   E4_param_grid       shepherds x validators grid at P-III
//   E5_blocksize        block size sweep at P-III
//   E6_end2end          every role wired together, client driving transfers
//
// Throughput is tx_count / (last commit - first delivery); block latency is
// the delivered -> committed time of each block. E1 and E2 have no committer:
// E1 uses first send -> last receive and per-block send -> receive, E2 uses
// first submission -> last block received and block inter-arrival time.

#pragma once

#include <filesystem>
#include <functional>
#include <optional>

#include "eov/bench/topology.hpp"
#include "eov/statestore.hpp"

namespace eov::bench {

enum class Experiment { Transport, OrdererPayload, PeerCumulative, ParamGrid, BlockSize, EndToEnd };

std::string_view to_string(Experiment e) noexcept;
/// Accepts the full name, its prefix ("E3", "e3") or its suffix ("blocksize").
Experiment parse_experiment(std::string_view name);

struct Toggles {
    std::string name;
    bool o1 = false;
    bool o2 = false;
    bool p1 = false;
    bool p2 = false;
    bool p3 = false;
    std::optional<std::uint32_t> shepherds;
    std::optional<std::uint32_t> validators;
    std::optional<StateBackend> state_backend; // default: memory iff p1
    std::optional<std::string> transport;      // E1 only

    StateBackend backend() const { return state_backend.value_or(p1 ? StateBackend::Memory : StateBackend::Durable); }
    /// Name if set, else "o1+p2+..." or "none".
    std::string label() const;
};

/// Presets: baseline | none | all-off, P-I, P-II, P-III (cumulative), all-on,
/// or a '+'-separated list of o1 o2 p1 p2 p3. Presets may be followed by
/// "+flag" to add more, e.g. "P-III+o2".
Toggles parse_toggles(std::string_view text);

struct ExperimentSpec {
    Experiment experiment = Experiment::PeerCumulative;
    std::vector<Toggles> toggle_sets; // empty: experiment default
    std::uint64_t tx_count = 10'000;
    std::vector<std::size_t> payloads;      // empty: experiment default
    std::vector<std::uint32_t> block_sizes; // empty: experiment default
    std::uint32_t repeats = 1;
    std::uint64_t seed = 42;
    SignatureScheme scheme = SignatureScheme::Ed25519;
    std::string transport = "inproc";
    std::optional<Topology> topology;
    std::size_t accounts = 10'000;
    std::vector<std::uint32_t> grid_shepherds{1, 4, 16, 32};
    std::vector<std::uint32_t> grid_validators{1, 4, 16, 32};
    std::uint32_t window = 1000;   // E6 client in-flight transactions
    std::size_t endorsers = 0;     // E6, 0: scaled to the machine
    std::optional<std::uint32_t> intake_pool;
    std::chrono::milliseconds block_timeout{100};
    std::filesystem::path workdir; // empty: a fresh temp directory
    bool keep_workdir = false;

    /// Throws InvalidArgument when an invariant does not hold.
    void validate() const;
};

struct RunChecks {
    std::uint64_t valid = 0;
    std::uint64_t mvcc_conflicts = 0;
    std::uint64_t other_invalid = 0;
    std::uint64_t rejected = 0;
    std::optional<bool> conservation;
    std::optional<bool> chain_ok;
    std::optional<bool> exactly_once;
    std::optional<bool> expected_state; // pre-built workloads know the final state

    bool ok() const;
    std::string describe() const;
};

struct RunResult {
    std::string experiment;
    std::string toggle_set;
    std::uint32_t block_size = 0;
    std::size_t payload = 0;
    std::uint32_t repeat = 0;
    double throughput_tx_s = 0;
    double block_latency_ms_mean = 0;
    double block_latency_ms_std = 0;

    std::uint64_t tx_count = 0;
    std::uint64_t blocks = 0;
    double seconds = 0;
    RunChecks checks;
    std::string values_digest; // empty where no world state exists
    std::string state_digest;
};

using ProgressFn = std::function<void(const RunResult&)>;

/// Runs every (toggle set, block size, payload, repeat) combination.
std::vector<RunResult> run(const ExperimentSpec& spec, const ProgressFn& progress = {});

/// Endorser count used when ExperimentSpec::endorsers is 0.
std::size_t default_endorsers();

} // namespace eov::bench
