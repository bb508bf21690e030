// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

// CSV rows and per-configuration summary.
//
// CSV: '#'-prefixed metadata lines (seed, scheme, transport, host threads),
// then the header
//   experiment,toggle_set,block_size,payload,repeat,throughput_tx_s,
//   block_latency_ms_mean,block_latency_ms_std
// and one row per run.

#pragma once

#include <iosfwd>
#include <map>

#include "eov/bench/experiment.hpp"

namespace eov::bench {

double mean(std::span<const double> xs);
/// n - 1 denominator; 0 for fewer than two samples.
double sample_stddev(std::span<const double> xs);

inline constexpr std::string_view kCsvHeader =
    "experiment,toggle_set,block_size,payload,repeat,throughput_tx_s,block_latency_ms_mean,block_latency_ms_std";

void write_csv(std::ostream& out, const std::vector<RunResult>& results,
               const std::map<std::string, std::string>& metadata = {});

struct SummaryRow {
    std::string experiment;
    std::string toggle_set;
    std::uint32_t block_size = 0;
    std::size_t payload = 0;
    std::size_t runs = 0;
    double throughput_mean = 0;
    double throughput_std = 0;
    double latency_mean = 0;
    double latency_std = 0;
};

/// One row per (experiment, toggle set, block size, payload) in first-seen
/// order. Throws InvalidArgument on an empty result set.
std::vector<SummaryRow> summarize(const std::vector<RunResult>& results);
std::string format_summary(const std::vector<SummaryRow>& rows);

} // namespace eov::bench
