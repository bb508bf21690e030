// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "eov/bench/report.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <tuple>

namespace eov::bench {

double mean(std::span<const double> xs)
{
    if (xs.empty()) {
        return 0;
    }
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_stddev(std::span<const double> xs)
{
    if (xs.size() < 2) {
        return 0;
    }
    double m = mean(xs);
    double ss = 0;
    for (double x : xs) {
        ss += (x - m) * (x - m);
    }
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

namespace {

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + "\"";
}

std::string num(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

} // namespace

void write_csv(std::ostream& out, const std::vector<RunResult>& results,
               const std::map<std::string, std::string>& metadata)
{
    for (const auto& [k, v] : metadata) {
        out << "# " << k << ": " << v << "\n";
    }
    out << kCsvHeader << "\n";
    for (const auto& r : results) {
        out << csv_field(r.experiment) << ',' << csv_field(r.toggle_set) << ',' << r.block_size << ','
            << r.payload << ',' << r.repeat << ',' << num(r.throughput_tx_s) << ','
            << num(r.block_latency_ms_mean) << ',' << num(r.block_latency_ms_std) << "\n";
    }
}

std::vector<SummaryRow> summarize(const std::vector<RunResult>& results)
{
    if (results.empty()) {
        fail(Errc::InvalidArgument, "no results to summarize");
    }
    using Key = std::tuple<std::string, std::string, std::uint32_t, std::size_t>;
    std::vector<Key> order;
    std::map<Key, std::pair<std::vector<double>, std::vector<double>>> groups;
    for (const auto& r : results) {
        Key k{r.experiment, r.toggle_set, r.block_size, r.payload};
        auto [it, fresh] = groups.try_emplace(k);
        if (fresh) {
            order.push_back(k);
        }
        it->second.first.push_back(r.throughput_tx_s);
        it->second.second.push_back(r.block_latency_ms_mean);
    }
    std::vector<SummaryRow> rows;
    for (const auto& k : order) {
        const auto& [tp, lat] = groups.at(k);
        SummaryRow row;
        std::tie(row.experiment, row.toggle_set, row.block_size, row.payload) = k;
        row.runs = tp.size();
        row.throughput_mean = mean(tp);
        row.throughput_std = sample_stddev(tp);
        row.latency_mean = mean(lat);
        row.latency_std = sample_stddev(lat);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string format_summary(const std::vector<SummaryRow>& rows)
{
    std::string out;
    char buf[512];
    std::snprintf(buf, sizeof buf, "%-20s %-16s %6s %7s %4s %24s %22s\n", "experiment", "toggles", "block",
                  "payload", "runs", "throughput tx/s", "block latency ms");
    out += buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-20s %-16s %6u %7zu %4zu %13.1f ± %-8.1f %11.2f ± %-8.2f\n",
                      r.experiment.c_str(), r.toggle_set.c_str(), r.block_size, r.payload, r.runs,
                      r.throughput_mean, r.throughput_std, r.latency_mean, r.latency_std);
        out += buf;
    }
    return out;
}

} // namespace eov::bench
