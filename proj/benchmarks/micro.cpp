// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

// Per-operation costs of the pieces the experiments are built from.

#include <benchmark/benchmark.h>

#include <filesystem>
#include <unistd.h>

#include "eov/bench/topology.hpp"
#include "eov/bench/workload.hpp"
#include "eov/committer.hpp"
#include "eov/crypto.hpp"
#include "eov/endorser.hpp"
#include "eov/statestore.hpp"
#include "eov/wire.hpp"

namespace {

using namespace eov;

const bench::Identities& ids(SignatureScheme scheme = SignatureScheme::Mac)
{
    static const bench::Identities mac =
        bench::Identities::from(bench::default_topology(SignatureScheme::Mac, 7, 1, "inproc"));
    static const bench::Identities ed =
        bench::Identities::from(bench::default_topology(SignatureScheme::Ed25519, 7, 1, "inproc"));
    return scheme == SignatureScheme::Mac ? mac : ed;
}

Bytes sample_envelope(std::size_t payload, SignatureScheme scheme = SignatureScheme::Mac)
{
    return bench::build_envelopes(ids(scheme), 1, payload, 1, 100).front();
}

void BM_ContentHash(benchmark::State& state)
{
    Bytes data(static_cast<std::size_t>(state.range(0)), 0x5a);
    for (auto _ : state) {
        benchmark::DoNotOptimize(content_hash(data));
    }
    state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ContentHash)->Arg(64)->Arg(4096)->Arg(65536);

void BM_Sign(benchmark::State& state)
{
    auto scheme = static_cast<SignatureScheme>(state.range(0));
    const Signer& s = ids(scheme).client;
    Bytes msg(256, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(s.sign(msg));
    }
    state.SetLabel(std::string(to_string(scheme)));
}
BENCHMARK(BM_Sign)->Arg(static_cast<int>(SignatureScheme::Mac))->Arg(static_cast<int>(SignatureScheme::Ed25519));

void BM_Verify(benchmark::State& state)
{
    auto scheme = static_cast<SignatureScheme>(state.range(0));
    const Signer& s = ids(scheme).client;
    Bytes msg(256, 1);
    Bytes sig = s.sign(msg);
    for (auto _ : state) {
        benchmark::DoNotOptimize(verify_signature(scheme, s.public_key(), msg, sig));
    }
    state.SetLabel(std::string(to_string(scheme)));
}
BENCHMARK(BM_Verify)->Arg(static_cast<int>(SignatureScheme::Mac))->Arg(static_cast<int>(SignatureScheme::Ed25519));

void BM_DecodeEnvelopeLayers(benchmark::State& state)
{
    Bytes env = sample_envelope(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto raw = decode_envelope(env);
        auto pl = decode_payload(raw.payload_bytes);
        benchmark::DoNotOptimize(decode_header(pl.header_bytes));
        benchmark::DoNotOptimize(decode_rwset(pl.rwset_bytes));
        benchmark::DoNotOptimize(decode_endorsements(pl.endorsements_bytes));
    }
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(env.size()));
}
BENCHMARK(BM_DecodeEnvelopeLayers)->Arg(0)->Arg(2900);

void BM_PeekTxId(benchmark::State& state)
{
    Bytes env = sample_envelope(2900);
    for (auto _ : state) {
        benchmark::DoNotOptimize(peek_tx_id(env));
    }
}
BENCHMARK(BM_PeekTxId);

void BM_EncodeBlock(benchmark::State& state)
{
    std::vector<Bytes> envs(static_cast<std::size_t>(state.range(0)), sample_envelope(2900));
    Block b = make_block(make_genesis().header, envs, ids().orderer);
    for (auto _ : state) {
        benchmark::DoNotOptimize(encode_block(b));
    }
}
BENCHMARK(BM_EncodeBlock)->Arg(100);

void BM_ValidateTx(benchmark::State& state)
{
    auto scheme = static_cast<SignatureScheme>(state.range(0));
    Bytes env = sample_envelope(2900, scheme);
    const auto& id = ids(scheme);
    auto policy = id.policy();
    for (auto _ : state) {
        benchmark::DoNotOptimize(validate_tx(*id.registry, policy, env));
    }
    state.SetLabel(std::string(to_string(scheme)));
}
BENCHMARK(BM_ValidateTx)->Arg(static_cast<int>(SignatureScheme::Mac))->Arg(static_cast<int>(SignatureScheme::Ed25519));

void BM_StateApplyBlock(benchmark::State& state)
{
    auto backend = static_cast<StateBackend>(state.range(0));
    auto dir = std::filesystem::temp_directory_path() / ("eov-microbench-" + std::to_string(::getpid()));
    {
        auto store = make_state_store(backend, dir);
        store->load(bench::genesis_accounts(10'000));
        std::uint64_t number = 1;
        for (auto _ : state) {
            // one block of 100 two-account transfers, then a sync
            for (std::uint32_t i = 0; i < 100; ++i) {
                WriteEntry w[2] = {{bench::account_key((number * 100 + i) % 10'000), encode_balance(i)},
                                   {bench::account_key((number * 100 + i + 1) % 10'000), encode_balance(i)}};
                store->apply_writes(w, Version{number, i});
            }
            store->sync();
            ++number;
        }
        state.SetLabel(std::string(to_string(backend)));
    }
    std::filesystem::remove_all(dir);
}
BENCHMARK(BM_StateApplyBlock)
    ->Arg(static_cast<int>(StateBackend::Memory))
    ->Arg(static_cast<int>(StateBackend::Durable));

void BM_StateGet(benchmark::State& state)
{
    auto backend = static_cast<StateBackend>(state.range(0));
    auto dir = std::filesystem::temp_directory_path() / ("eov-microbench-get-" + std::to_string(::getpid()));
    {
        auto store = make_state_store(backend, dir);
        store->load(bench::genesis_accounts(10'000));
        std::size_t i = 0;
        for (auto _ : state) {
            benchmark::DoNotOptimize(store->get(bench::account_key(i++ % 10'000)));
        }
        state.SetLabel(std::string(to_string(backend)));
    }
    std::filesystem::remove_all(dir);
}
BENCHMARK(BM_StateGet)->Arg(static_cast<int>(StateBackend::Memory))->Arg(static_cast<int>(StateBackend::Durable));

} // namespace

BENCHMARK_MAIN();
