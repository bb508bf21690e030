// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "scenarios.hpp"

#include <mutex>
#include <set>
#include <variant>

#include "eov/orderer.hpp"
#include "eov/ordering_log.hpp"
#include "oracle.hpp"

namespace eov::test {

using namespace std::chrono_literals;

Workload random_workload(Gen& g, const bench::Identities& ids, std::size_t txs, std::uint64_t& nonce)
{
    Workload w;
    std::vector<std::string> keys;
    for (std::size_t k = g.range(2, 12); k > 0; --k) {
        keys.push_back("key" + std::to_string(k));
    }
    oracle::NaiveState view;
    std::size_t left = txs;
    std::uint64_t number = 1;
    while (left > 0) {
        std::size_t n = std::min<std::size_t>(left, g.range(1, 40));
        std::vector<Bytes> envs;
        std::vector<ReadWriteSet> rws;
        for (std::size_t i = 0; i < n; ++i) {
            ReadWriteSet rw;
            std::set<std::string> used;
            for (std::size_t r = g.range(0, 3); r > 0; --r) {
                const auto& k = keys[g.range(0, keys.size() - 1)];
                if (!used.insert(k).second) {
                    continue;
                }
                auto it = view.entries.find(k);
                Version v = it == view.entries.end() ? kGenesisVersion : it->second.version;
                if (g.coin(0.05)) {
                    v = g.version();
                }
                rw.reads.push_back({k, v});
            }
            used.clear();
            for (std::size_t r = g.range(0, 3); r > 0; --r) {
                const auto& k = keys[g.range(0, keys.size() - 1)];
                if (used.insert(k).second) {
                    rw.writes.push_back({k, g.bytes(16)});
                }
            }
            Bytes env = make_tx(ids, nonce++, rw);
            if (g.coin(0.03)) {
                env[env.size() - 1 - g.range(0, 20)] ^= 0x10; // breaks a signature
            }
            envs.push_back(std::move(env));
            rws.push_back(std::move(rw));
        }
        if (g.coin(0.5)) {
            std::vector<ValidationFlag> pre;
            for (const auto& e : envs) {
                pre.push_back(oracle::validate(*ids.registry, ids.policy(), e));
            }
            view.run_block(number, rws, pre);
        }
        w.blocks.push_back(std::move(envs));
        left -= n;
        ++number;
    }
    return w;
}

std::pair<FlagMap, StateMap> naive_execute(const bench::Identities& ids, const Workload& w)
{
    oracle::NaiveState state;
    FlagMap flags;
    for (std::size_t b = 0; b < w.blocks.size(); ++b) {
        std::vector<ValidationFlag> pre;
        std::vector<ReadWriteSet> rws;
        for (const auto& env : w.blocks[b]) {
            pre.push_back(oracle::validate(*ids.registry, ids.policy(), env));
            auto parsed = oracle::parse_tx(env);
            rws.push_back(parsed ? parsed->rwset : ReadWriteSet{});
        }
        flags[b + 1] = state.run_block(b + 1, rws, pre);
    }
    return {flags, state.as_state_map()};
}

std::vector<Bytes> chain_blocks(const bench::Identities& ids, const std::vector<std::vector<Bytes>>& blocks)
{
    std::vector<Bytes> out;
    BlockHeader last = make_genesis().header;
    for (const auto& envs : blocks) {
        Block b = make_block(last, envs, ids.orderer);
        last = b.header;
        out.push_back(encode_block(b));
    }
    return out;
}

std::vector<Bytes> ordered_stream(const bench::Identities& ids, const std::vector<Bytes>& envs, bool o1, bool o2,
                                  std::uint32_t block_size)
{
    Transport transport;
    OrderingLogService log(transport, "log", "inproc://log");
    log.start();
    OrdererConfig cfg;
    cfg.opt_o1 = o1;
    cfg.opt_o2 = o2;
    cfg.max_block_txs = block_size;
    cfg.block_timeout = 20s; // cut by count only, so boundaries are fixed
    cfg.intake_pool = 3;
    Orderer orderer(transport, ids.orderer_id, "inproc://orderer", "log", ids.registry, ids.orderer, cfg);
    orderer.start();
    {
        SubmitSession session(transport, ids.orderer_id);
        for (const auto& e : envs) {
            if (!std::holds_alternative<SubmitAck>(session.submit(e))) {
                fail(Errc::InvalidArgument, "orderer refused a submission");
            }
        }
    }
    std::vector<Bytes> out;
    DeliverStream stream(transport, ids.orderer_id, 1);
    for (std::size_t i = 0; i < envs.size() / block_size; ++i) {
        auto b = stream.next_for(10s);
        if (!b) {
            break;
        }
        out.push_back(std::move(*b));
    }
    stream.close();
    orderer.stop();
    log.stop();
    if (out.size() != envs.size() / block_size) {
        fail(Errc::NotFound, "orderer delivered " + std::to_string(out.size()) + " blocks");
    }
    return out;
}

PipelineConfig pipeline(bool p1, bool p2, bool p3, std::uint32_t s, std::uint32_t v)
{
    PipelineConfig c;
    c.block_shepherds = s;
    c.tx_validators = v;
    c.opt_p1 = p1;
    c.opt_p2 = p2;
    c.opt_p3 = p3;
    return c;
}

FlagMap commit_all(const bench::Identities& ids, const PipelineConfig& cfg, std::shared_ptr<StateStore> state,
                   const std::vector<Bytes>& blocks)
{
    std::mutex mu;
    FlagMap flags;
    Committer committer(ids.registry, cfg, ids.orderer_id, ids.policy(), std::move(state));
    committer.on_commit([&](const CommitResult& r) {
        std::lock_guard lock(mu);
        flags[r.block_number] = r.flags;
    });
    for (const auto& b : blocks) {
        if (!committer.deliver(b)) {
            fail(Errc::InvalidArgument, "committer discarded a block");
        }
    }
    committer.drain();
    return flags;
}

} // namespace eov::test
