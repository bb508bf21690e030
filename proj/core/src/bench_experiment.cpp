// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "eov/bench/experiment.hpp"

#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <deque>
#include <unordered_map>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "eov/bench/cluster.hpp"
#include "eov/bench/report.hpp"

namespace eov::bench {

namespace {

using Clock = std::chrono::steady_clock;

double ms_between(Clock::time_point a, Clock::time_point b)
{
    return std::chrono::duration<double, std::milli>(b - a).count();
}

std::string lower(std::string_view s)
{
    std::string out(s);
    for (auto& c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

constexpr std::pair<Experiment, std::string_view> kNames[] = {
    {Experiment::Transport, "E1_transport"},          {Experiment::OrdererPayload, "E2_orderer_payload"},
    {Experiment::PeerCumulative, "E3_peer_cumulative"}, {Experiment::ParamGrid, "E4_param_grid"},
    {Experiment::BlockSize, "E5_blocksize"},          {Experiment::EndToEnd, "E6_end2end"},
};

} // namespace

std::string_view to_string(Experiment e) noexcept
{
    for (const auto& [k, v] : kNames) {
        if (k == e) {
            return v;
        }
    }
    return "unknown";
}

Experiment parse_experiment(std::string_view name)
{
    std::string n = lower(name);
    for (const auto& [k, v] : kNames) {
        std::string full = lower(v);
        auto us = full.find('_');
        if (n == full || n == full.substr(0, us) || n == full.substr(us + 1)) {
            return k;
        }
    }
    fail(Errc::InvalidArgument, "unknown experiment '" + std::string(name) + "'");
}

std::string Toggles::label() const
{
    std::string suffix;
    if (state_backend && *state_backend != (p1 ? StateBackend::Memory : StateBackend::Durable)) {
        suffix = "/" + std::string(to_string(*state_backend));
    }
    if (!name.empty()) {
        return name + suffix;
    }
    std::string out;
    auto add = [&](bool on, const char* flag) {
        if (on) {
            out += out.empty() ? "" : "+";
            out += flag;
        }
    };
    add(o1, "o1");
    add(o2, "o2");
    add(p1, "p1");
    add(p2, "p2");
    add(p3, "p3");
    return (out.empty() ? "none" : out) + suffix;
}

Toggles parse_toggles(std::string_view text)
{
    Toggles t;
    bool preset = false;
    std::string s = lower(text);
    std::size_t pos = 0;
    bool first = true;
    while (pos <= s.size()) {
        auto plus = s.find('+', pos);
        std::string tok = s.substr(pos, plus == std::string::npos ? std::string::npos : plus - pos);
        pos = plus == std::string::npos ? s.size() + 1 : plus + 1;
        if (first && (tok == "baseline" || tok == "none" || tok == "all-off")) {
            preset = true;
        } else if (first && (tok == "p-i" || tok == "pi")) {
            t.p1 = preset = true;
        } else if (first && (tok == "p-ii" || tok == "pii")) {
            t.p1 = t.p2 = preset = true;
        } else if (first && (tok == "p-iii" || tok == "piii")) {
            t.p1 = t.p2 = t.p3 = preset = true;
        } else if (first && tok == "all-on") {
            t.o1 = t.o2 = t.p1 = t.p2 = t.p3 = preset = true;
        } else if (tok == "o1") {
            t.o1 = true;
        } else if (tok == "o2") {
            t.o2 = true;
        } else if (tok == "p1") {
            t.p1 = true;
        } else if (tok == "p2") {
            t.p2 = true;
        } else if (tok == "p3") {
            t.p3 = true;
        } else {
            fail(Errc::InvalidArgument, "unknown toggle '" + tok + "' in '" + std::string(text) + "'");
        }
        first = false;
    }
    if (preset) {
        t.name = std::string(text);
    }
    return t;
}

void ExperimentSpec::validate() const
{
    auto bad = [](const std::string& m) { fail(Errc::InvalidArgument, m); };
    if (repeats < 1) {
        bad("repeats must be >= 1");
    }
    if (tx_count < 1) {
        bad("tx_count must be >= 1");
    }
    for (auto b : block_sizes) {
        if (b < 1) {
            bad("block size must be >= 1");
        }
        if (tx_count < b) {
            bad("tx_count " + std::to_string(tx_count) + " is below block size " + std::to_string(b));
        }
    }
    if (block_sizes.empty() && tx_count < (experiment == Experiment::BlockSize ? 10000u : 100u)) {
        bad("tx_count is below the default block size");
    }
    if (accounts < 2) {
        bad("at least two accounts are needed");
    }
    if (window < 1) {
        bad("window must be >= 1");
    }
    if (transport != "inproc" && transport != "tcp") {
        bad("transport must be inproc or tcp");
    }
    for (auto v : grid_shepherds) {
        if (v < 1) bad("grid values must be >= 1");
    }
    for (auto v : grid_validators) {
        if (v < 1) bad("grid values must be >= 1");
    }
    for (const auto& t : toggle_sets) {
        if (t.transport && *t.transport != "inproc" && *t.transport != "tcp") {
            bad("transport must be inproc or tcp");
        }
    }
}

bool RunChecks::ok() const
{
    auto good = [](const std::optional<bool>& b) { return b.value_or(true); };
    return good(conservation) && good(chain_ok) && good(exactly_once) && good(expected_state);
}

std::string RunChecks::describe() const
{
    auto show = [](const char* name, const std::optional<bool>& b) {
        return b ? std::string(" ") + name + "=" + (*b ? "ok" : "FAIL") : std::string();
    };
    return "valid=" + std::to_string(valid) + " mvcc=" + std::to_string(mvcc_conflicts) +
           " invalid=" + std::to_string(other_invalid) + " rejected=" + std::to_string(rejected) +
           show("conservation", conservation) + show("chain", chain_ok) + show("exactly_once", exactly_once) +
           show("state", expected_state);
}

std::size_t default_endorsers()
{
    return std::clamp<std::size_t>(hardware_threads() / 4, 1, 5);
}

namespace {

class WorkDir {
public:
    explicit WorkDir(const ExperimentSpec& spec) : keep_(spec.keep_workdir)
    {
        static std::atomic<unsigned> counter{0};
        if (spec.workdir.empty()) {
            root_ = std::filesystem::temp_directory_path() /
                    ("eov-bench-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
            owned_ = true;
        } else {
            root_ = spec.workdir;
        }
        std::filesystem::create_directories(root_);
    }
    ~WorkDir()
    {
        if (owned_ && !keep_) {
            std::error_code ec;
            std::filesystem::remove_all(root_, ec);
        }
    }

    std::filesystem::path fresh()
    {
        auto d = root_ / ("run-" + std::to_string(next_++));
        std::filesystem::remove_all(d);
        std::filesystem::create_directories(d);
        return d;
    }
    void done(const std::filesystem::path& d)
    {
        if (!keep_) {
            std::error_code ec;
            std::filesystem::remove_all(d, ec);
        }
    }

private:
    std::filesystem::path root_;
    bool keep_;
    bool owned_ = false;
    unsigned next_ = 0;
};

Topology topology_for(const ExperimentSpec& spec, const std::string& transport)
{
    if (spec.topology) {
        return *spec.topology;
    }
    std::size_t e = spec.endorsers ? spec.endorsers : default_endorsers();
    return default_topology(spec.scheme, spec.seed, e, transport);
}

void fill_latency(RunResult& r, const std::vector<double>& lat)
{
    r.block_latency_ms_mean = mean(lat);
    r.block_latency_ms_std = sample_stddev(lat);
}

// ---------------------------------------------------------------------------
// E1

RunResult run_transport(const ExperimentSpec& spec, const std::string& transport, const BlockSet& blocks)
{
    Transport tr;
    auto listener = tr.listen("sink0", transport == "tcp" ? "tcp://127.0.0.1:0" : "inproc://sink0");
    std::size_t n = blocks.blocks.size();
    std::vector<Clock::time_point> sent(n), received(n);
    std::exception_ptr recv_err;
    std::thread receiver([&] {
        try {
            auto ch = listener->accept();
            for (std::size_t i = 0; i < n; ++i) {
                Message m = ch->recv();
                received[i] = Clock::now();
                if (m.body.size() != blocks.blocks[i].size()) {
                    fail(Errc::MalformedFrame, "block arrived truncated");
                }
            }
        } catch (...) {
            recv_err = std::current_exception();
        }
    });
    {
        auto ch = tr.connect("sink0");
        for (std::size_t i = 0; i < n; ++i) {
            sent[i] = Clock::now();
            ch->send(MsgType::BlockMsg, blocks.blocks[i]);
        }
        receiver.join();
        ch->close();
    }
    listener->close();
    if (recv_err) {
        std::rethrow_exception(recv_err);
    }
    RunResult r;
    r.tx_count = blocks.txs;
    r.blocks = n;
    r.seconds = ms_between(sent.front(), received.back()) / 1000.0;
    r.throughput_tx_s = static_cast<double>(blocks.txs) / r.seconds;
    std::vector<double> lat(n);
    for (std::size_t i = 0; i < n; ++i) {
        lat[i] = ms_between(sent[i], received[i]);
    }
    fill_latency(r, lat);
    (void)spec;
    return r;
}

// ---------------------------------------------------------------------------
// E2

RunResult run_orderer(const ExperimentSpec& spec, const Toggles& t, std::uint32_t block_size,
                      const Identities& ids, const std::vector<Bytes>& envelopes,
                      const std::filesystem::path& dir)
{
    Transport tr;
    const bool tcp = spec.transport == "tcp";
    OrderingLogService log(tr, "log0", tcp ? "tcp://127.0.0.1:0" : "inproc://log0", dir / "log");
    log.start();
    OrdererConfig oc;
    oc.opt_o1 = t.o1;
    oc.opt_o2 = t.o2;
    oc.max_block_txs = block_size;
    oc.block_timeout = spec.block_timeout;
    if (spec.intake_pool) {
        oc.intake_pool = *spec.intake_pool;
    }
    oc.validate();
    Orderer orderer(tr, ids.orderer_id, tcp ? "tcp://127.0.0.1:0" : "inproc://" + ids.orderer_id, "log0",
                    ids.registry, ids.orderer, oc);
    orderer.start();

    const std::uint64_t n = envelopes.size();
    std::vector<Clock::time_point> arrivals;
    std::uint64_t delivered = 0;
    std::uint64_t repeats = 0;
    std::unordered_set<std::string> seen;
    seen.reserve(n);
    std::exception_ptr consumer_err;
    DeliverStream stream(tr, ids.orderer_id, 1);
    std::thread consumer([&] {
        try {
            while (delivered < n) {
                auto b = stream.next_for(std::chrono::seconds(60));
                if (!b) {
                    fail(Errc::PeerUnreachable, "no block from the orderer for 60 s");
                }
                arrivals.push_back(Clock::now());
                // tx count sits right after number, prev_hash and data_hash
                ByteReader r(*b);
                r.take(72);
                std::uint32_t count = r.u32();
                for (std::uint32_t i = 0; i < count; ++i) {
                    if (!seen.insert(peek_tx_id(r.prefixed())).second) {
                        ++repeats;
                    }
                }
                delivered += count;
            }
        } catch (...) {
            consumer_err = std::current_exception();
        }
    });

    std::uint64_t rejected = 0;
    Clock::time_point start = Clock::now();
    {
        SubmitSession session(tr, ids.orderer_id);
        std::uint64_t sent = 0, answered = 0;
        while (answered < n) {
            while (sent < n && sent - answered < spec.window) {
                session.send(envelopes[sent++]);
            }
            auto [req, res] = session.receive();
            (void)req;
            if (std::holds_alternative<RejectCode>(res)) {
                ++rejected;
            }
            ++answered;
        }
        session.close();
    }
    if (rejected) {
        // nothing more will arrive for the missing ones
        stream.close();
    }
    consumer.join();
    stream.close();
    orderer.stop();
    log.stop();
    if (rejected) {
        fail(Errc::InvalidArgument, std::to_string(rejected) + " submissions rejected by the orderer");
    }
    if (consumer_err) {
        std::rethrow_exception(consumer_err);
    }

    RunResult r;
    r.tx_count = n;
    r.blocks = arrivals.size();
    r.checks.exactly_once = repeats == 0 && delivered == n && seen.size() == n;
    r.seconds = ms_between(start, arrivals.back()) / 1000.0;
    r.throughput_tx_s = static_cast<double>(n) / r.seconds;
    std::vector<double> gaps;
    for (std::size_t i = 1; i < arrivals.size(); ++i) {
        gaps.push_back(ms_between(arrivals[i - 1], arrivals[i]));
    }
    fill_latency(r, gaps);
    return r;
}

// ---------------------------------------------------------------------------
// E3, E4, E5

RunResult run_committer(const ExperimentSpec& spec, const Toggles& t, const Identities& ids,
                        const BlockSet& blocks, const std::filesystem::path& dir)
{
    std::shared_ptr<StateStore> state = make_state_store(t.backend(), dir / "state");
    state->load(genesis_accounts(spec.accounts));
    auto committer =
        std::make_shared<Committer>(ids.registry, pipeline_for(t), ids.orderer_id, ids.policy(), state);
    std::shared_ptr<BlockStore> local;
    if (t.p2) {
        committer->set_store(nullptr, std::make_shared<NullSink>());
    } else {
        local = std::make_shared<BlockStore>(dir / "blocks");
        committer->set_store(local, nullptr);
    }
    for (std::size_t i = 0; i < ids.endorsers.size(); ++i) {
        committer->add_sink(std::make_shared<NullSink>());
    }
    std::mutex mu;
    std::vector<CommitResult> commits;
    commits.reserve(blocks.blocks.size());
    committer->on_commit([&](const CommitResult& c) {
        std::lock_guard lock(mu);
        commits.push_back(c);
    });
    for (const auto& b : blocks.blocks) {
        if (!committer->deliver(b)) {
            fail(Errc::InvalidArgument, "committer discarded a pre-built block");
        }
    }
    committer->drain();

    RunResult r;
    std::unique_lock lock(mu);
    r.tx_count = blocks.txs;
    r.blocks = commits.size();
    Clock::time_point first = commits.front().delivered, last = commits.front().committed;
    std::vector<double> lat;
    for (const auto& c : commits) {
        first = std::min(first, c.delivered);
        last = std::max(last, c.committed);
        lat.push_back(ms_between(c.delivered, c.committed));
        for (auto f : c.flags) {
            if (f == ValidationFlag::Valid) {
                ++r.checks.valid;
            } else if (f == ValidationFlag::MvccConflict) {
                ++r.checks.mvcc_conflicts;
            } else {
                ++r.checks.other_invalid;
            }
        }
    }
    r.seconds = ms_between(first, last) / 1000.0;
    r.throughput_tx_s = static_cast<double>(r.tx_count) / r.seconds;
    fill_latency(r, lat);

    StateMap final_state = state->dump();
    r.values_digest = values_digest(final_state);
    r.state_digest = state_digest(final_state);
    r.checks.conservation = total_balance(final_state) ==
                            static_cast<unsigned __int128>(spec.accounts) * kInitialBalance;
    r.checks.expected_state = final_state == blocks.expected;
    if (local) {
        auto scan = local->verify_chain();
        r.checks.chain_ok = scan.ok && scan.blocks == blocks.blocks.size() + 1;
    }
    lock.unlock();
    committer.reset();
    return r;
}

// ---------------------------------------------------------------------------
// E6

class ClientDriver {
public:
    ClientDriver(const ExperimentSpec& spec, Transport& tr, const Identities& ids, std::size_t payload)
        : spec_(spec), tr_(tr), ids_(ids), payload_(payload), busy_(spec.accounts, 0), gen_(spec.seed, spec.accounts)
    {
    }

    /// Runs until every transaction is committed and reported by every
    /// endorser, or rejected. Throws on a stalled run.
    void run(const std::function<std::vector<std::string>()>& health)
    {
        const std::size_t ne = ids_.endorser_ids.size();
        for (const auto& e : ids_.endorser_ids) {
            endorse_.push_back(std::make_unique<EndorserClient>(tr_, e));
            events_.push_back(std::make_unique<EventStream>(tr_, e));
            pending_.emplace_back();
        }
        send_mu_ = std::vector<std::mutex>(ne);
        submit_ = std::make_unique<SubmitSession>(tr_, ids_.orderer_id);

        std::vector<std::thread> threads;
        for (std::size_t i = 0; i < ne; ++i) {
            threads.emplace_back([this, i] { guard([&] { reply_loop(i); }); });
            threads.emplace_back([this, i] { guard([&] { event_loop(i); }); });
        }
        threads.emplace_back([this] { guard([&] { ack_loop(); }); });
        try {
            drive(health);
        } catch (...) {
            shutdown(threads);
            throw;
        }
        shutdown(threads);
        if (error_) {
            std::rethrow_exception(error_);
        }
    }

    std::uint64_t rejected() const { return rejected_; }
    Clock::time_point first_submit() const { return first_submit_; }
    /// tx_id -> number of endorser-0 events naming it, for exactly-once.
    const std::unordered_map<std::string, std::uint32_t>& seen() const { return seen_; }
    const std::vector<std::string>& submitted_ids() const { return submitted_ids_; }

private:
    struct Tx {
        std::size_t from, to;
        std::uint32_t reports = 0;
    };

    template <typename F>
    void guard(F&& f)
    {
        try {
            f();
        } catch (const Error& e) {
            if (e.code() == Errc::ChannelClosed && stopping_) {
                return;
            }
            fail_with(std::current_exception());
        } catch (...) {
            fail_with(std::current_exception());
        }
    }

    void fail_with(std::exception_ptr e)
    {
        std::lock_guard lock(mu_);
        if (!error_) {
            error_ = e;
        }
        cv_.notify_all();
    }

    bool is_free(const Transfer& t) const { return !busy_[t.from] && !busy_[t.to]; }

    void drive(const std::function<std::vector<std::string>()>& health)
    {
        const std::uint64_t n = spec_.tx_count;
        std::deque<Transfer> deferred;
        std::uint64_t generated = 0;
        auto last_progress = Clock::now();
        std::uint64_t last_finished = 0;
        std::unique_lock lock(mu_);
        while (finished_ < n) {
            if (error_) {
                return;
            }
            std::optional<Transfer> pick;
            if (nonce_ < n && in_flight_ < spec_.window) {
                for (auto it = deferred.begin(); it != deferred.end(); ++it) {
                    if (is_free(*it)) {
                        pick = *it;
                        deferred.erase(it);
                        break;
                    }
                }
                while (!pick && generated < n && deferred.size() < 4096) {
                    Transfer t = gen_.next();
                    ++generated;
                    if (is_free(t)) {
                        pick = t;
                    } else {
                        deferred.push_back(t);
                    }
                }
            }
            if (!pick) {
                cv_.wait_for(lock, std::chrono::milliseconds(200));
                if (finished_ != last_finished) {
                    last_finished = finished_;
                    last_progress = Clock::now();
                } else if (Clock::now() - last_progress > std::chrono::seconds(60)) {
                    std::string why = "run stalled at " + std::to_string(finished_) + "/" + std::to_string(n);
                    lock.unlock();
                    for (const auto& e : health()) {
                        why += "; " + e;
                    }
                    fail(Errc::PeerUnreachable, why);
                }
                continue;
            }
            busy_[pick->from] = busy_[pick->to] = 1;
            ++in_flight_;
            std::uint64_t nonce = nonce_++;
            std::string tx_id = make_tx_id(ids_.client_id, nonce);
            txs_.emplace(tx_id, Tx{pick->from, pick->to});
            submitted_ids_.push_back(tx_id);
            if (nonce == 0) {
                first_submit_ = Clock::now();
            }
            lock.unlock();
            std::size_t e = nonce % endorse_.size();
            {
                std::lock_guard send_lock(send_mu_[e]);
                {
                    std::lock_guard pl(pending_mu_);
                    pending_[e].push_back(tx_id);
                }
                TransferProposal p{account_key(pick->from), account_key(pick->to), pick->amount, payload_};
                endorse_[e]->send(p, ids_.client_id, nonce);
            }
            lock.lock();
        }
    }

    std::string pop_pending(std::size_t e)
    {
        std::lock_guard pl(pending_mu_);
        std::string id = std::move(pending_[e].front());
        pending_[e].pop_front();
        return id;
    }

    void reply_loop(std::size_t e)
    {
        for (;;) {
            std::optional<EndorsedTx> tx;
            std::string id;
            try {
                tx = endorse_[e]->receive();
                id = pop_pending(e);
            } catch (const Error& err) {
                if (err.code() == Errc::ChannelClosed) {
                    throw;
                }
                id = pop_pending(e);
                spdlog::warn("endorsement of {} failed: {}", id, err.what());
                release(id, true);
                continue;
            }
            Bytes env = tx->to_envelope(ids_.client);
            std::lock_guard lock(submit_mu_);
            {
                std::lock_guard al(acks_mu_);
                acks_.emplace(++next_req_, id);
            }
            submit_->send(env);
        }
    }

    void ack_loop()
    {
        for (;;) {
            auto [req, res] = submit_->receive();
            std::string id;
            {
                std::lock_guard al(acks_mu_);
                auto it = acks_.find(req);
                if (it == acks_.end()) {
                    fail(Errc::MalformedFrame, "ack for unknown request");
                }
                id = std::move(it->second);
                acks_.erase(it);
            }
            if (auto* code = std::get_if<RejectCode>(&res)) {
                spdlog::warn("orderer rejected {}: {}", id, to_string(*code));
                release(id, true);
            }
        }
    }

    void event_loop(std::size_t e)
    {
        const std::size_t ne = endorse_.size();
        for (;;) {
            BlockEvent ev = events_[e]->next();
            std::lock_guard lock(mu_);
            for (const auto& [id, flag] : ev.txs) {
                if (e == 0) {
                    ++seen_[id];
                }
                auto it = txs_.find(id);
                if (it == txs_.end()) {
                    continue;
                }
                if (++it->second.reports == ne) {
                    busy_[it->second.from] = busy_[it->second.to] = 0;
                    txs_.erase(it);
                    --in_flight_;
                    ++finished_;
                }
            }
            cv_.notify_all();
        }
    }

    void release(const std::string& id, bool rejected)
    {
        std::lock_guard lock(mu_);
        auto it = txs_.find(id);
        if (it == txs_.end()) {
            return;
        }
        busy_[it->second.from] = busy_[it->second.to] = 0;
        txs_.erase(it);
        --in_flight_;
        ++finished_;
        if (rejected) {
            ++rejected_;
        }
        cv_.notify_all();
    }

    void shutdown(std::vector<std::thread>& threads)
    {
        stopping_ = true;
        for (auto& c : endorse_) {
            c->close();
        }
        for (auto& s : events_) {
            s->close();
        }
        submit_->close();
        for (auto& t : threads) {
            t.join();
        }
    }

    const ExperimentSpec& spec_;
    Transport& tr_;
    const Identities& ids_;
    std::size_t payload_;

    std::mutex mu_;
    std::condition_variable cv_;
    std::vector<std::uint8_t> busy_;
    TransferGenerator gen_;
    std::unordered_map<std::string, Tx> txs_;
    std::uint64_t nonce_ = 0;
    std::uint64_t in_flight_ = 0;
    std::uint64_t finished_ = 0;
    std::uint64_t rejected_ = 0;
    std::exception_ptr error_;
    std::atomic<bool> stopping_{false};
    Clock::time_point first_submit_;
    std::unordered_map<std::string, std::uint32_t> seen_;
    std::vector<std::string> submitted_ids_;

    std::vector<std::unique_ptr<EndorserClient>> endorse_;
    std::vector<std::unique_ptr<EventStream>> events_;
    std::vector<std::mutex> send_mu_;
    std::mutex pending_mu_;
    std::vector<std::deque<std::string>> pending_;
    std::unique_ptr<SubmitSession> submit_;
    std::mutex submit_mu_;
    std::mutex acks_mu_;
    std::uint64_t next_req_ = 0;
    std::unordered_map<std::uint64_t, std::string> acks_;
};

RunResult run_end_to_end(const ExperimentSpec& spec, const Toggles& t, std::uint32_t block_size,
                         std::size_t payload, const std::filesystem::path& dir)
{
    Transport tr;
    Topology topo = topology_for(spec, spec.transport);
    if (topo.only("committer").external()) {
        fail(Errc::TopologyError, "the committer must run inside the harness to be measured");
    }
    std::mutex mu;
    std::vector<CommitResult> commits;
    ClusterOptions co;
    co.toggles = t;
    co.block_size = block_size;
    co.block_timeout = spec.block_timeout;
    co.intake_pool = spec.intake_pool;
    co.accounts = spec.accounts;
    co.dir = dir;
    co.on_commit = [&](const CommitResult& c) {
        std::lock_guard lock(mu);
        commits.push_back(c);
    };
    Cluster cluster(tr, topo, co);
    cluster.start();

    ClientDriver driver(spec, tr, cluster.identities(), payload);
    driver.run([&] { return cluster.errors(); });

    Committer& committer = *cluster.committer();
    committer.drain();
    for (const auto& s : cluster.sinks()) {
        s->flush(std::chrono::seconds(30));
    }

    RunResult r;
    r.tx_count = spec.tx_count;
    {
        std::lock_guard lock(mu);
        r.blocks = commits.size();
        Clock::time_point first = commits.front().delivered, last = commits.front().committed;
        std::vector<double> lat;
        for (const auto& c : commits) {
            first = std::min(first, c.delivered);
            last = std::max(last, c.committed);
            lat.push_back(ms_between(c.delivered, c.committed));
            for (auto f : c.flags) {
                if (f == ValidationFlag::Valid) {
                    ++r.checks.valid;
                } else if (f == ValidationFlag::MvccConflict) {
                    ++r.checks.mvcc_conflicts;
                } else {
                    ++r.checks.other_invalid;
                }
            }
        }
        r.seconds = ms_between(first, last) / 1000.0;
        r.throughput_tx_s = static_cast<double>(r.checks.valid) / r.seconds;
        fill_latency(r, lat);
    }
    r.checks.rejected = driver.rejected();

    StateMap final_state = committer.state().dump();
    r.values_digest = values_digest(final_state);
    r.state_digest = state_digest(final_state);
    r.checks.conservation = total_balance(final_state) ==
                            static_cast<unsigned __int128>(spec.accounts) * kInitialBalance;

    bool replicas = true;
    auto until = Clock::now() + std::chrono::seconds(30);
    for (const auto& e : cluster.endorsers()) {
        while (e->applied_height() < committer.committed_height() && Clock::now() < until) {
            std::this_thread::sleep_for(std::chrono::milliseconds(2));
        }
        replicas = replicas && e->state().dump() == final_state;
    }
    r.checks.expected_state = replicas;

    bool once = r.checks.valid + r.checks.mvcc_conflicts + r.checks.other_invalid + r.checks.rejected ==
                spec.tx_count;
    std::size_t seen_ids = 0;
    for (const auto& id : driver.submitted_ids()) {
        auto it = driver.seen().find(id);
        std::uint32_t count = it == driver.seen().end() ? 0 : it->second;
        seen_ids += count ? 1 : 0;
        once = once && count <= 1;
    }
    once = once && seen_ids == driver.seen().size() && seen_ids + r.checks.rejected == spec.tx_count;
    r.checks.exactly_once = once;

    // in-memory state is backed up to the block store once per run
    if (t.backend() == StateBackend::Memory) {
        BlockStoreClient(tr, topo.only("blockstore").id)
            .put_state_snapshot(committer.committed_height(), committer.state().snapshot());
    }

    BlockStore* chain = t.p2 ? cluster.store() : cluster.committer_local_store();
    if (chain) {
        // a flushed sink has sent everything, the store may still be appending
        until = Clock::now() + std::chrono::seconds(30);
        while (chain->next_number() <= committer.committed_height() && Clock::now() < until) {
            std::this_thread::sleep_for(std::chrono::milliseconds(2));
        }
        auto scan = chain->verify_chain();
        r.checks.chain_ok = scan.ok && scan.blocks == committer.committed_height() + 1;
        if (!*r.checks.chain_ok) {
            spdlog::error("chain scan: ok={} blocks={} committed={}", scan.ok, scan.blocks,
                          committer.committed_height());
        }
    }
    cluster.stop();
    return r;
}

std::vector<Toggles> default_toggles(Experiment e)
{
    auto list = [](std::initializer_list<const char*> names) {
        std::vector<Toggles> out;
        for (const char* n : names) {
            out.push_back(parse_toggles(n));
        }
        return out;
    };
    switch (e) {
    case Experiment::Transport: {
        Toggles a, b;
        a.name = a.transport.emplace("inproc");
        b.name = b.transport.emplace("tcp");
        return {a, b};
    }
    case Experiment::OrdererPayload:
        return list({"o2", "o1+o2"});
    case Experiment::PeerCumulative:
        return list({"baseline", "P-I", "P-II", "P-III"});
    case Experiment::ParamGrid:
    case Experiment::BlockSize:
        return list({"P-III"});
    case Experiment::EndToEnd:
        return list({"all-off", "all-on"});
    }
    return {};
}

} // namespace

std::vector<RunResult> run(const ExperimentSpec& spec, const ProgressFn& progress)
{
    spec.validate();
    const Experiment e = spec.experiment;
    std::vector<Toggles> toggles = spec.toggle_sets.empty() ? default_toggles(e) : spec.toggle_sets;
    if (e == Experiment::ParamGrid) {
        std::vector<Toggles> grid;
        for (const auto& base : toggles) {
            for (auto s : spec.grid_shepherds) {
                for (auto v : spec.grid_validators) {
                    Toggles t = base;
                    t.shepherds = s;
                    t.validators = v;
                    t.name = "s" + std::to_string(s) + "-v" + std::to_string(v);
                    if (spec.toggle_sets.size() > 1) {
                        t.name = base.label() + "/" + t.name;
                    }
                    grid.push_back(std::move(t));
                }
            }
        }
        toggles = std::move(grid);
    }
    std::vector<std::uint32_t> block_sizes = spec.block_sizes;
    if (block_sizes.empty()) {
        block_sizes = e == Experiment::BlockSize ? std::vector<std::uint32_t>{10, 100, 1000, 10000}
                                                 : std::vector<std::uint32_t>{100};
    }
    std::vector<std::size_t> payloads = spec.payloads;
    if (payloads.empty()) {
        payloads = e == Experiment::OrdererPayload ? std::vector<std::size_t>{0, 512, 1024, 2048, 4096}
                                                   : std::vector<std::size_t>{kDefaultPayload};
    }

    WorkDir work(spec);
    Identities ids = Identities::from(topology_for(spec, spec.transport));
    std::vector<RunResult> results;

    for (auto block_size : block_sizes) {
        for (auto payload : payloads) {
            // workload shared by every toggle set and repeat of this point
            std::optional<BlockSet> blocks;
            std::vector<Bytes> envelopes;
            if (e == Experiment::OrdererPayload) {
                envelopes = build_envelopes(ids, spec.tx_count, payload, spec.seed, spec.accounts);
            } else if (e != Experiment::EndToEnd) {
                blocks = build_transfer_blocks(ids, spec.accounts, spec.tx_count, block_size, payload, spec.seed);
            }
            for (const auto& t : toggles) {
                for (std::uint32_t rep = 0; rep < spec.repeats; ++rep) {
                    auto dir = work.fresh();
                    RunResult r;
                    switch (e) {
                    case Experiment::Transport:
                        r = run_transport(spec, t.transport.value_or(spec.transport), *blocks);
                        break;
                    case Experiment::OrdererPayload:
                        r = run_orderer(spec, t, block_size, ids, envelopes, dir);
                        break;
                    case Experiment::PeerCumulative:
                    case Experiment::ParamGrid:
                    case Experiment::BlockSize:
                        r = run_committer(spec, t, ids, *blocks, dir);
                        break;
                    case Experiment::EndToEnd:
                        r = run_end_to_end(spec, t, block_size, payload, dir);
                        break;
                    }
                    work.done(dir);
                    r.experiment = std::string(to_string(e));
                    r.toggle_set = t.label();
                    r.block_size = block_size;
                    r.payload = payload;
                    r.repeat = rep;
                    if (progress) {
                        progress(r);
                    }
                    results.push_back(std::move(r));
                }
            }
        }
    }
    return results;
}

} // namespace eov::bench
