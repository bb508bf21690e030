// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

// bench: runs the experiment matrix, or hosts one node of a topology.

#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "eov/bench/cluster.hpp"
#include "eov/bench/experiment.hpp"
#include "eov/bench/report.hpp"

namespace {

using namespace eov;
using namespace eov::bench;

struct CommonFlags {
    std::vector<std::string> toggles;
    bool o1 = false, o2 = false, p1 = false, p2 = false, p3 = false;
    std::optional<std::uint32_t> shepherds, validators, intake_pool;
    std::optional<std::string> state_backend;
    std::uint32_t block_timeout_ms = 100;
    std::size_t accounts = kDefaultAccounts;
    std::string topology;

    void add_to(CLI::App& app)
    {
        app.add_option("--toggles", toggles,
                       "toggle sets: baseline, P-I, P-II, P-III, all-off, all-on or flags like o1+p2")
            ->delimiter(',');
        app.add_flag("--opt-o1", o1, "orderer publishes tx ids only");
        app.add_flag("--opt-o2", o2, "concurrent orderer intake");
        app.add_flag("--opt-p1", p1, "in-memory hash-table world state");
        app.add_flag("--opt-p2", p2, "multi-block pipeline, block store offloaded");
        app.add_flag("--opt-p3", p3, "unmarshal cache");
        app.add_option("--shepherds", shepherds, "block shepherd threads")->check(CLI::PositiveNumber);
        app.add_option("--tx-validators", validators, "transaction validator threads")->check(CLI::PositiveNumber);
        app.add_option("--intake-pool", intake_pool, "orderer intake workers")->check(CLI::PositiveNumber);
        app.add_option("--state-backend", state_backend, "memory or durable (default: memory iff p1)")
            ->check(CLI::IsMember({"memory", "durable"}));
        app.add_option("--block-timeout-ms", block_timeout_ms, "orderer block cut timeout")
            ->check(CLI::PositiveNumber);
        app.add_option("--accounts", accounts, "genesis accounts")->check(CLI::Range(2, 100'000'000));
        app.add_option("--topology", topology, "topology file")->check(CLI::ExistingFile);
    }

    bool any_flag() const { return o1 || o2 || p1 || p2 || p3; }

    Toggles apply(Toggles t) const
    {
        bool extra = any_flag();
        t.o1 |= o1;
        t.o2 |= o2;
        t.p1 |= p1;
        t.p2 |= p2;
        t.p3 |= p3;
        if (shepherds) t.shepherds = shepherds;
        if (validators) t.validators = validators;
        if (state_backend) t.state_backend = parse_state_backend(*state_backend);
        if (extra && !t.name.empty()) {
            t.name.clear(); // label now lists the flags
        }
        return t;
    }

    std::vector<Toggles> toggle_sets() const
    {
        std::vector<Toggles> out;
        for (const auto& s : toggles) {
            out.push_back(apply(parse_toggles(s)));
        }
        if (out.empty() && (any_flag() || shepherds || validators || state_backend)) {
            out.push_back(apply(Toggles{}));
        }
        return out;
    }
};

int run_command(const std::string& experiment, const CommonFlags& common, std::uint64_t txs,
                const std::vector<std::size_t>& payloads, const std::vector<std::uint32_t>& block_sizes,
                std::uint32_t repeats, std::uint64_t seed, const std::string& csv, const std::string& scheme,
                const std::string& transport, std::uint32_t window, std::size_t endorsers,
                const std::string& workdir, bool keep, bool quiet)
{
    ExperimentSpec spec;
    spec.experiment = parse_experiment(experiment);
    spec.toggle_sets = common.toggle_sets();
    spec.tx_count = txs;
    spec.payloads = payloads;
    spec.block_sizes = block_sizes;
    spec.repeats = repeats;
    spec.seed = seed;
    spec.scheme = parse_scheme(scheme);
    spec.transport = transport;
    spec.window = window;
    spec.endorsers = endorsers;
    spec.accounts = common.accounts;
    spec.intake_pool = common.intake_pool;
    spec.block_timeout = std::chrono::milliseconds(common.block_timeout_ms);
    spec.workdir = workdir;
    spec.keep_workdir = keep;
    if (!common.topology.empty()) {
        spec.topology = Topology::load(common.topology);
        spec.scheme = spec.topology->scheme;
        spec.seed = spec.topology->seed;
    }

    bool checks_ok = true;
    auto results = run(spec, [&](const RunResult& r) {
        checks_ok = checks_ok && r.checks.ok();
        if (!quiet) {
            std::cerr << r.experiment << " " << r.toggle_set << " block=" << r.block_size
                      << " payload=" << r.payload << " repeat=" << r.repeat << ": " << r.throughput_tx_s
                      << " tx/s, " << r.block_latency_ms_mean << " ms/block [" << r.checks.describe() << "]\n";
        }
    });

    std::map<std::string, std::string> meta{
        {"experiment", std::string(to_string(spec.experiment))},
        {"seed", std::to_string(spec.seed)},
        {"scheme", std::string(to_string(spec.scheme))},
        {"transport", spec.transport},
        {"tx_count", std::to_string(spec.tx_count)},
        {"hardware_threads", std::to_string(hardware_threads())},
    };
    if (csv.empty()) {
        write_csv(std::cout, results, meta);
        std::cout << "\n";
    } else {
        std::ofstream f(csv);
        if (!f) {
            throw std::runtime_error("cannot write " + csv);
        }
        write_csv(f, results, meta);
    }
    std::cout << format_summary(summarize(results));
    if (!checks_ok) {
        std::cerr << "one or more runs failed their consistency checks\n";
        return 3;
    }
    return 0;
}

int node_command(const CommonFlags& common, const std::string& id, std::uint32_t block_size,
                 const std::string& dir)
{
    if (common.topology.empty()) {
        throw std::runtime_error("--topology is required");
    }
    Topology topo = Topology::load(common.topology);
    const TopologyNode* self = topo.find(id);
    if (!self) {
        fail(Errc::TopologyError, "no node '" + id + "' in the topology");
    }
    if (self->role == "client") {
        fail(Errc::TopologyError, "clients are driven by `bench run`, not hosted");
    }
    auto sets = common.toggle_sets();
    ClusterOptions co;
    co.toggles = sets.empty() ? Toggles{} : sets.front();
    co.block_size = block_size;
    co.block_timeout = std::chrono::milliseconds(common.block_timeout_ms);
    co.intake_pool = common.intake_pool;
    co.accounts = common.accounts;
    co.dir = dir.empty() ? std::filesystem::current_path() / "eov-node-data" : std::filesystem::path(dir);

    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    Transport tr;
    Cluster cluster(tr, topo, co, [&](const TopologyNode& n) { return n.id == id; });
    cluster.start();
    spdlog::info("node {} ({}) up at {}", id, self->role, tr.address_of(id).value_or(self->address));
    int sig = 0;
    sigwait(&set, &sig);
    spdlog::info("node {} stopping", id);
    cluster.stop();
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"eovledger benchmark harness"};
    app.require_subcommand(1);
    std::string log_level = "warn";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

    CommonFlags common;

    auto* run_cmd = app.add_subcommand("run", "run an experiment");
    std::string experiment;
    std::uint64_t txs = 10'000;
    std::vector<std::size_t> payloads;
    std::vector<std::uint32_t> block_sizes;
    std::uint32_t repeats = 1;
    std::uint64_t seed = 42;
    std::string csv, scheme = "ed25519", transport = "inproc", workdir;
    std::uint32_t window = 1000;
    std::size_t endorsers = 0;
    bool keep = false, quiet = false;
    run_cmd->add_option("experiment", experiment, "E1..E6 or the full experiment name")->required();
    run_cmd->add_option("--txs", txs, "transactions per run")->check(CLI::PositiveNumber);
    run_cmd->add_option("--payload", payloads, "payload bytes per transaction")->delimiter(',');
    run_cmd->add_option("--block-size", block_sizes, "transactions per block")->delimiter(',');
    run_cmd->add_option("--repeats", repeats, "repeats per configuration")->check(CLI::PositiveNumber);
    run_cmd->add_option("--seed", seed, "workload and key seed");
    run_cmd->add_option("--csv", csv, "CSV output path (default: stdout)");
    run_cmd->add_option("--scheme", scheme, "signature scheme")->check(CLI::IsMember({"ed25519", "mac"}));
    run_cmd->add_option("--transport", transport, "inproc or tcp")->check(CLI::IsMember({"inproc", "tcp"}));
    run_cmd->add_option("--window", window, "end-to-end client in-flight window")->check(CLI::PositiveNumber);
    run_cmd->add_option("--endorsers", endorsers, "end-to-end endorser count (default: scaled to cores)");
    run_cmd->add_option("--workdir", workdir, "directory for run data (default: temp)");
    run_cmd->add_flag("--keep-workdir", keep, "keep run data");
    run_cmd->add_flag("-q,--quiet", quiet, "no per-run progress lines");
    common.add_to(*run_cmd);

    auto* node_cmd = app.add_subcommand("node", "host one node of a topology until SIGINT/SIGTERM");
    std::string node_id, node_dir;
    std::uint32_t node_block_size = 100;
    node_cmd->add_option("--id", node_id, "node id")->required();
    node_cmd->add_option("--block-size", node_block_size, "orderer block size")->check(CLI::PositiveNumber);
    node_cmd->add_option("--dir", node_dir, "data directory");
    common.add_to(*node_cmd);

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::from_str(log_level));

    try {
        if (*run_cmd) {
            return run_command(experiment, common, txs, payloads, block_sizes, repeats, seed, csv, scheme,
                               transport, window, endorsers, workdir, keep, quiet);
        }
        return node_command(common, node_id, node_block_size, node_dir);
    } catch (const eov::Error& e) {
        std::cerr << "error: " << e.what() << "\n"; // what() already names the code
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
