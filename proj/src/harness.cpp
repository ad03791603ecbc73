// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftlab/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "bftlab/client.hpp"
#include "bftlab/hotstuff.hpp"
#include "bftlab/multiconsensus.hpp"
#include "bftlab/pbft.hpp"
#include "bftlab/poe.hpp"
#include "bftlab/sbft.hpp"
#include "bftlab/zyzzyva.hpp"

namespace bftlab {

using ordered_json = nlohmann::ordered_json;

const char* trace_kind_name(TraceEvent::Kind k) {
    switch (k) {
        case TraceEvent::Kind::send: return "send";
        case TraceEvent::Kind::deliver: return "deliver";
        case TraceEvent::Kind::drop: return "drop";
        case TraceEvent::Kind::timer: return "timer";
        case TraceEvent::Kind::commit: return "commit";
        case TraceEvent::Kind::rollback: return "rollback";
        case TraceEvent::Kind::complete: return "complete";
        case TraceEvent::Kind::view_change: return "view_change";
    }
    return "?";
}

std::string trace_to_jsonl(const std::vector<TraceEvent>& trace) {
    std::ostringstream out;
    for (const auto& ev : trace) {
        ordered_json j;
        j["t"] = ev.time;
        j["kind"] = trace_kind_name(ev.kind);
        j["src"] = ev.src;
        j["dst"] = ev.dst;
        j["type"] = msg_type_name(ev.mtype);
        j["seq"] = ev.seq;
        j["digest"] = ev.digest.short_hex();
        out << j.dump() << "\n";
    }
    return out.str();
}

namespace {

// Equivocation support: the controller remembers validly signed client
// requests seen by byzantine replicas and swaps them into proposals bound
// for the alternate destination group.
struct AdversaryState {
    std::vector<Transaction> request_cache;
    std::map<Digest, bool> seen;
    std::map<std::pair<NodeId, uint64_t>, Transaction> chosen_alt;  // (byz, seq)

    void observe(const Transaction& txn) {
        Digest d = txn.digest();
        if (seen.emplace(d, true).second) request_cache.push_back(txn);
    }

    std::optional<Transaction> alternate_for(NodeId byz, uint64_t seq, const Digest& original) {
        auto key = std::make_pair(byz, seq);
        auto it = chosen_alt.find(key);
        if (it != chosen_alt.end()) return it->second;
        for (auto r = request_cache.rbegin(); r != request_cache.rend(); ++r) {
            if (r->digest() != original) {
                chosen_alt[key] = *r;
                return *r;
            }
        }
        return std::nullopt;
    }

    // One forged speculative-history chain per (byzantine, victim) pair:
    // it follows the real chain until an alternate request is available,
    // substitutes once, and keeps the victim's history self-consistent from
    // then on so the victim keeps executing the diverged order.
    struct VictimChain {
        Digest history = Block::genesis().digest();
        bool diverged = false;
        std::map<uint64_t, std::pair<std::optional<Transaction>, Digest>> plan;
    };
    std::map<std::pair<NodeId, NodeId>, VictimChain> victim_chains;

    std::pair<std::optional<Transaction>, std::optional<Digest>> plan_for(
        NodeId byz, NodeId victim, uint64_t seq, const Digest& txn_digest,
        const Digest& orig_batch_digest) {
        VictimChain& chain = victim_chains[{byz, victim}];
        auto it = chain.plan.find(seq);
        if (it == chain.plan.end()) {
            std::optional<Transaction> alt;
            if (!chain.diverged) {
                alt = alternate_for(byz, seq, txn_digest);
                if (alt) chain.diverged = true;
            }
            Digest used = alt ? batch_digest({*alt}) : orig_batch_digest;
            chain.history = history_extend(chain.history, used);
            it = chain.plan.emplace(seq, std::make_pair(alt, chain.history)).first;
        }
        if (!chain.diverged) return {std::nullopt, std::nullopt};  // still on the real chain
        return {it->second.first, it->second.second};
    }
};

struct Runner {
    const ScenarioConfig& cfg;
    std::vector<TraceEvent>* trace;
    Rng rng;
    std::shared_ptr<Keyring> keyring = std::make_shared<Keyring>();
    std::shared_ptr<ThresholdGroup> group;
    std::vector<std::unique_ptr<Automaton>> nodes;  // replicas then clients
    std::vector<Chain> chains;
    std::unique_ptr<SimNet> net;
    std::shared_ptr<AdversaryState> adv_state = std::make_shared<AdversaryState>();
    Metrics metrics;
    std::map<Digest, Tick> submit_time;
    std::map<NodeId, Digest> current_request;
    std::vector<Tick> latencies;
    std::map<NodeId, uint32_t> region_of;
    std::vector<MinerAutomaton*> miners;
    bool duration_exceeded = false;

    explicit Runner(const ScenarioConfig& config, std::vector<TraceEvent>* trace_sink)
        : cfg(config), trace(trace_sink), rng(config.seed) {}

    uint32_t n() const { return cfg.quorum.n; }
    NodeId client_id(uint32_t j) const { return n() + j; }
    bool is_client(NodeId id) const { return id >= n(); }

    void record(TraceEvent ev) {
        if (trace) trace->push_back(ev);
    }

    std::function<NodeId(uint64_t)> leader_schedule() const {
        if (cfg.protocol != Protocol::pos_bft) return nullptr;
        // BFT-style proof of stake: the stake draw picks each view's leader.
        std::vector<double> stakes = cfg.stakes;
        uint64_t seed = cfg.seed;
        return [stakes, seed](uint64_t view) {
            Writer w;
            w.u64(seed);
            w.u64(view);
            Digest d = tagged_hash("bftlab.pos.leader", w.bytes());
            uint64_t s = 0;
            for (int i = 0; i < 8; ++i) s = (s << 8) | d.bytes[i];
            Rng r(s);
            return static_cast<NodeId>(r.weighted(stakes.data(), stakes.size()));
        };
    }

    ReplicaContext make_context(NodeId id) {
        ReplicaContext ctx;
        ctx.id = id;
        ctx.quorum = cfg.quorum;
        ctx.auth_kind = cfg.auth_kind;
        ctx.keyring = keyring;
        ctx.group = group;
        ctx.key = *keyring->find(id);
        ctx.mean_delay = std::max<Tick>(1, cfg.network.mean_delay());
        ctx.batch_size = cfg.batch_size;
        ctx.pipeline_window = cfg.pipeline_window;
        ctx.dual_sign = cfg.dual_sign;
        ctx.leader_schedule = leader_schedule();
        return ctx;
    }

    std::vector<NodeId> cluster_members(uint32_t cluster) const {
        std::vector<NodeId> members;
        uint32_t base = 0;
        for (uint32_t c = 0; c < cluster; ++c) base += cfg.quorum.cluster_sizes[c];
        for (uint32_t i = 0; i < cfg.quorum.cluster_sizes[cluster]; ++i)
            members.push_back(base + i);
        return members;
    }

    uint32_t cluster_of(NodeId replica) const {
        uint32_t base = 0;
        for (uint32_t c = 0; c < cfg.quorum.cluster_sizes.size(); ++c) {
            base += cfg.quorum.cluster_sizes[c];
            if (replica < base) return c;
        }
        return 0;
    }

    std::unique_ptr<Automaton> make_replica(NodeId id) {
        switch (cfg.protocol) {
            case Protocol::pbft:
            case Protocol::pos_bft: return std::make_unique<PbftReplica>(make_context(id));
            case Protocol::zyzzyva: return std::make_unique<ZyzzyvaReplica>(make_context(id));
            case Protocol::sbft: return std::make_unique<SbftReplica>(make_context(id));
            case Protocol::hotstuff: return std::make_unique<HotstuffReplica>(make_context(id));
            case Protocol::poe: return std::make_unique<PoeReplica>(make_context(id));
            case Protocol::rcc:
                return std::make_unique<RccReplica>(make_context(id), cfg.quorum.z);
            case Protocol::rbft:
                return std::make_unique<RbftReplica>(make_context(id), cfg.degradation_ratio,
                                                     cfg.monitor_window);
            case Protocol::geobft: {
                uint32_t cluster = cluster_of(id);
                return std::make_unique<GeoBftReplica>(make_context(id), cluster,
                                                       cluster_members(cluster));
            }
            case Protocol::pow: {
                MinerAutomaton::Config mc;
                mc.id = id;
                mc.miners = n();
                mc.share = cfg.stakes.empty() ? 1.0 / n() : cfg.stakes[id];
                mc.mean_interval = cfg.mean_interval;
                mc.blocks_target = cfg.blocks_target;
                mc.seed = cfg.seed;
                mc.retarget_every = cfg.retarget_every;
                auto miner = std::make_unique<MinerAutomaton>(mc);
                miners.push_back(miner.get());
                return miner;
            }
            case Protocol::pos_chain: {
                PosChainAutomaton::Config pc;
                pc.id = id;
                pc.stakes = cfg.stakes;
                pc.mode = cfg.pos_mode;
                pc.slot_ticks = cfg.slot_ticks;
                pc.blocks_target = cfg.blocks_target;
                pc.seed = cfg.seed;
                return std::make_unique<PosChainAutomaton>(pc);
            }
            case Protocol::poa_chain: {
                PoaChainAutomaton::Config pc;
                pc.id = id;
                pc.nodes = n();
                pc.authorities = AuthoritySet{cfg.authorities};
                pc.slot_ticks = cfg.slot_ticks;
                pc.blocks_target = cfg.blocks_target;
                pc.auth_kind = AuthKind::signature;
                pc.keyring = keyring;
                pc.key = *keyring->find(id);
                return std::make_unique<PoaChainAutomaton>(pc);
            }
        }
        throw InvalidConfig("protocol: unhandled protocol");
    }

    ClientConfig make_client_config(uint32_t j) {
        ClientConfig cc;
        cc.id = client_id(j);
        cc.request_count = cfg.requests_per_client;
        cc.keyring = keyring;
        cc.key = *keyring->find(cc.id);
        cc.group = group;
        cc.initial_timeout = 10 * std::max<Tick>(1, cfg.network.mean_delay());
        cc.dual_sign = cfg.dual_sign;
        for (NodeId r = 0; r < n(); ++r) cc.replicas.push_back(r);
        uint32_t f = cfg.quorum.f;
        switch (cfg.protocol) {
            case Protocol::pbft:
            case Protocol::pos_bft:
                cc.match_quorum = f + 1;
                cc.initial_primary = leader_schedule() ? leader_schedule()(0) : 0;
                break;
            case Protocol::zyzzyva:
                cc.zyzzyva = true;
                cc.match_quorum = quorum(cfg.quorum, QuorumKind::spec_client);
                cc.cert_quorum = 2 * f + 1;
                cc.ack_quorum = 2 * f + 1;
                cc.initial_primary = 0;
                break;
            case Protocol::sbft:
                cc.sbft_aggregate = true;
                cc.exec_params = ThresholdParams{f + 1, n()};
                cc.initial_primary = 0;
                break;
            case Protocol::hotstuff:
                cc.match_quorum = f + 1;
                cc.target = ClientConfig::Target::all_replicas;
                break;
            case Protocol::poe:
                cc.match_quorum = quorum(cfg.quorum, QuorumKind::poe_client);
                cc.initial_primary = 0;
                break;
            case Protocol::rcc:
                cc.match_quorum = f + 1;
                cc.initial_primary = cc.id % cfg.quorum.z;
                break;
            case Protocol::rbft:
                cc.match_quorum = f + 1;
                cc.target = ClientConfig::Target::all_replicas;
                break;
            case Protocol::geobft: {
                uint32_t cluster = (cc.id - n()) % cfg.quorum.cluster_sizes.size();
                cc.replicas = cluster_members(cluster);
                cc.match_quorum = cfg.quorum.cluster_f(cluster) + 1;
                cc.initial_primary = cc.replicas[0];
                break;
            }
            default: cc.match_quorum = 1; break;
        }
        return cc;
    }

    TransformFn make_equivocate_transform(NodeId byz) {
        auto state = adv_state;
        auto ring = keyring;
        KeyMaterial key = *keyring->find(byz);
        uint32_t half = n() / 2;
        return [state, key, half](const Envelope& env) -> std::vector<Envelope> {
            if (env.dst < half) return {env};
            auto frame = parse_frame(env.payload);
            if (!frame) return {env};
            FrameInfo info = frame_info(*frame);
            auto txns = extract_transactions(*frame);
            if (txns.empty()) return {env};
            auto alt = state->alternate_for(env.src, info.seq, txns[0].digest());
            if (!alt) return {env};
            auto rewritten = rewrite_embedded_batch(env.payload, *alt, key);
            if (!rewritten) return {env};
            Envelope copy = env;
            copy.payload = std::move(*rewritten);
            return {copy};
        };
    }

    TransformFn make_script_transform(NodeId byz, const AdversaryConfig& conf) {
        auto state = adv_state;
        KeyMaterial key = keyring->find(byz) ? *keyring->find(byz) : KeyMaterial{};
        uint32_t last = n() - 1;
        uint64_t param = conf.script_param;
        if (conf.script == "equivocate_last") {
            // The highest-id replica is fed a consistently chained alternate
            // order; everyone else sees the primary's real one.
            return [state, key, last](const Envelope& env) -> std::vector<Envelope> {
                if (env.dst != last) return {env};
                auto frame = parse_frame(env.payload);
                if (!frame || frame->type != MsgType::ordered_request) return {env};
                FrameInfo info = frame_info(*frame);
                auto txns = extract_transactions(*frame);
                if (txns.empty()) return {env};
                auto [alt, history] =
                    state->plan_for(env.src, env.dst, info.seq, txns[0].digest(), info.digest);
                if (!history) return {env};
                auto rewritten = alt ? rewrite_embedded_batch(env.payload, *alt, key, *history)
                                     : patch_ordered_request_history(env.payload, *history, key);
                if (!rewritten) return {env};
                Envelope copy = env;
                copy.payload = std::move(*rewritten);
                return {copy};
            };
        }
        if (conf.script == "withhold_cert_last") {
            // A faulty client that never shows its commit certificate to the
            // highest-id replica.
            return [last](const Envelope& env) -> std::vector<Envelope> {
                auto frame = parse_frame(env.payload);
                if (frame && frame->type == MsgType::commit_cert && env.dst == last) return {};
                return {env};
            };
        }
        if (conf.script == "poe_partial_certify") {
            // The proposal for sequence `param` flows normally, but its
            // certificate reaches only the highest-id replica, which then
            // executes speculatively while everyone else changes views.
            return [last, param](const Envelope& env) -> std::vector<Envelope> {
                auto frame = parse_frame(env.payload);
                if (!frame) return {env};
                FrameInfo info = frame_info(*frame);
                bool protocol_msg = frame->type == MsgType::poe_propose ||
                                    frame->type == MsgType::poe_certify ||
                                    frame->type == MsgType::client_reply;
                if (!protocol_msg || info.seq < param) return {env};
                if (frame->type == MsgType::poe_propose && info.seq == param) return {env};
                if (frame->type == MsgType::poe_certify && info.seq == param && env.dst == last)
                    return {env};
                return {};
            };
        }
        throw InvalidConfig("adversary.script: unknown script '" + conf.script + "'");
    }

    void setup() {
        uint32_t total_nodes = n() + cfg.client_count;
        for (NodeId id = 0; id < total_nodes; ++id)
            keyring->add(KeyMaterial::derive(id, cfg.seed));
        std::vector<NodeId> members;
        for (NodeId r = 0; r < n(); ++r) members.push_back(r);
        group = std::make_shared<ThresholdGroup>(members, keyring);

        AdversarySpec spec;
        for (const auto& [id, conf] : cfg.adversary) {
            AdversaryEntry entry;
            entry.behavior = conf.behavior;
            entry.from_tick = conf.from_tick;
            entry.extra_delay = conf.extra_delay;
            entry.script = conf.script;
            if (conf.behavior == ByzantineBehavior::equivocate)
                entry.transform = make_equivocate_transform(id);
            else if (conf.behavior == ByzantineBehavior::custom)
                entry.transform = make_script_transform(id, conf);
            spec.byzantine[id] = entry;
        }
        net = std::make_unique<SimNet>(cfg.network, spec, total_nodes);

        SimNet::Hooks hooks;
        hooks.on_enqueue = [this](const Envelope&) {};
        hooks.on_drop = [this](const Envelope& env, const char*) {
            ++metrics.dropped;
            auto frame = parse_frame(env.payload);
            TraceEvent ev;
            ev.time = net ? net->now() : 0;
            ev.kind = TraceEvent::Kind::drop;
            ev.src = env.src;
            ev.dst = env.dst;
            if (frame) {
                FrameInfo info = frame_info(*frame);
                ev.mtype = info.type;
                ev.seq = info.seq;
                ev.digest = info.digest;
            }
            record(ev);
        };
        net->set_hooks(hooks);

        for (NodeId id = 0; id < n(); ++id) {
            nodes.push_back(make_replica(id));
            chains.emplace_back();
        }
        for (uint32_t j = 0; j < cfg.client_count; ++j)
            nodes.push_back(std::make_unique<ClientAutomaton>(make_client_config(j)));

        for (uint32_t i = 0; i < cfg.regions.size(); ++i)
            for (NodeId r : cfg.regions[i]) region_of[r] = i;

        // Kick every node at t=0: clients submit, slot/miner loops start.
        bool kick_replicas = !protocol_is_permissioned(cfg.protocol);
        if (kick_replicas)
            for (NodeId id = 0; id < n(); ++id) net->set_timer(id, 0, 0);
        for (uint32_t j = 0; j < cfg.client_count; ++j)
            net->set_timer(client_id(j), ClientAutomaton::kKickTimer, 0);
    }

    void note_send(NodeId src, NodeId dst, const Bytes& payload) {
        auto frame = parse_frame(payload);
        TraceEvent ev;
        ev.time = net->now();
        ev.kind = TraceEvent::Kind::send;
        ev.src = src;
        ev.dst = dst;
        if (frame) {
            FrameInfo info = frame_info(*frame);
            if (frame->type == MsgType::instance_wrap) {
                auto m = InstanceWrapMsg::decode(frame->body);
                auto inner = parse_frame(m.inner);
                if (inner) info = frame_info(*inner);
            }
            ev.mtype = info.type;
            ev.seq = info.seq;
            ev.digest = info.digest;
            std::string type_name = msg_type_name(ev.mtype);
            ++metrics.sends_by_type[type_name];
            if (!is_client(src) && !is_client(dst)) {
                ++metrics.total_protocol_sends;
                if (!region_of.empty() && region_of.count(src) && region_of.count(dst) &&
                    region_of[src] != region_of[dst])
                    ++metrics.cross_region_sends;
            }
            if (ev.seq > 0 && ev.mtype != MsgType::client_request &&
                ev.mtype != MsgType::client_reply) {
                ++metrics.per_decision[ev.seq][type_name];
                auto it = metrics.decision_first_send.find(ev.seq);
                if (it == metrics.decision_first_send.end())
                    metrics.decision_first_send[ev.seq] = net->now();
            }
            if (frame->type == MsgType::client_request && is_client(src)) {
                auto m = ClientRequestMsg::decode(frame->body);
                Digest d = m.txn.digest();
                if (!submit_time.count(d)) submit_time[d] = net->now();
                current_request[src] = d;
            }
        }
        record(ev);
    }

    void process_outputs(NodeId id, Outputs outputs) {
        for (auto& output : outputs) {
            if (auto* send = std::get_if<SendOut>(&output)) {
                note_send(id, send->dst, send->payload);
                net->schedule_send(Envelope{id, send->dst, std::move(send->payload), 0, 0}, rng);
            } else if (auto* bc = std::get_if<BroadcastOut>(&output)) {
                for (NodeId r = 0; r < n(); ++r) {
                    if (r == id) continue;
                    note_send(id, r, bc->payload);
                    net->schedule_send(Envelope{id, r, bc->payload, 0, 0}, rng);
                }
            } else if (auto* commit = std::get_if<CommitOut>(&output)) {
                chains[id].append(commit->block);
                TraceEvent ev;
                ev.time = net->now();
                ev.kind = TraceEvent::Kind::commit;
                ev.src = id;
                ev.seq = commit->seq;
                ev.digest = batch_digest(commit->block.transactions);
                record(ev);
                if (!metrics.decision_commit.count(commit->seq))
                    metrics.decision_commit[commit->seq] = net->now();
            } else if (auto* rollback = std::get_if<RollbackOut>(&output)) {
                chains[id].truncate(rollback->keep_seq + 1);
                TraceEvent ev;
                ev.time = net->now();
                ev.kind = TraceEvent::Kind::rollback;
                ev.src = id;
                ev.seq = rollback->keep_seq;
                record(ev);
            } else if (auto* reply = std::get_if<ReplyOut>(&output)) {
                // Replicas answer clients through sends; a ReplyOut reaching
                // the harness is a client's completion marker.
                if (is_client(id)) {
                    ++metrics.completed_requests;
                    TraceEvent ev;
                    ev.time = net->now();
                    ev.kind = TraceEvent::Kind::complete;
                    ev.src = id;
                    auto cur = current_request.find(id);
                    if (cur != current_request.end()) {
                        ev.digest = cur->second;
                        auto sub = submit_time.find(cur->second);
                        if (sub != submit_time.end()) latencies.push_back(net->now() - sub->second);
                    }
                    record(ev);
                }
                (void)reply;
            } else if (auto* set = std::get_if<SetTimerOut>(&output)) {
                net->set_timer(id, set->id, set->duration);
            } else if (auto* cancel = std::get_if<CancelTimerOut>(&output)) {
                net->cancel_timer(id, cancel->id);
            } else if (auto* vc = std::get_if<ViewChangeOut>(&output)) {
                ++metrics.view_changes;
                TraceEvent ev;
                ev.time = net->now();
                ev.kind = TraceEvent::Kind::view_change;
                ev.src = id;
                ev.seq = vc->new_view;
                record(ev);
            }
        }
    }

    void observe_for_adversary(const Delivery& delivery) {
        if (!net->adversary().is_byzantine(delivery.node)) return;
        auto frame = parse_frame(delivery.payload);
        if (!frame || frame->type != MsgType::client_request) return;
        auto m = ClientRequestMsg::decode(frame->body);
        adv_state->observe(m.txn);
    }

    void run() {
        setup();
        bool check_auth = protocol_is_permissioned(cfg.protocol);
        while (true) {
            StepResult result = net->step();
            if (std::holds_alternative<Idle>(result)) break;
            if (net->now() > cfg.duration) {
                duration_exceeded = true;
                break;
            }
            if (auto* delivery = std::get_if<Delivery>(&result)) {
                TraceEvent ev;
                ev.time = delivery->time;
                ev.kind = TraceEvent::Kind::deliver;
                ev.src = delivery->src;
                ev.dst = delivery->node;
                auto frame = parse_frame(delivery->payload);
                if (frame) {
                    FrameInfo info = frame_info(*frame);
                    if (frame->type == MsgType::instance_wrap) {
                        auto m = InstanceWrapMsg::decode(frame->body);
                        auto inner = parse_frame(m.inner);
                        if (inner) info = frame_info(*inner);
                    }
                    ev.mtype = info.type;
                    ev.seq = info.seq;
                    ev.digest = info.digest;
                }
                record(ev);
                if (check_auth) {
                    if (!frame || !frame_auth_ok(*frame, *keyring)) {
                        ++metrics.malformed;  // dropped, counted, never delivered
                        continue;
                    }
                }
                observe_for_adversary(*delivery);
                Outputs outputs = nodes[delivery->node]->step(
                    AutomatonInput{Deliver{delivery->payload, delivery->src}});
                process_outputs(delivery->node, std::move(outputs));
            } else if (auto* timer = std::get_if<TimerFired>(&result)) {
                TraceEvent ev;
                ev.time = timer->time;
                ev.kind = TraceEvent::Kind::timer;
                ev.src = timer->node;
                ev.seq = timer->timer_id;
                record(ev);
                Outputs outputs =
                    nodes[timer->node]->step(AutomatonInput{TimerFire{timer->timer_id}});
                process_outputs(timer->node, std::move(outputs));
            }
        }
    }

    RunReport finish() {
        RunReport report;
        report.scenario = cfg.name;
        report.protocol = protocol_name(cfg.protocol);
        report.seed = cfg.seed;
        report.duration_exceeded = duration_exceeded;
        report.chains = chains;
        report.k_conf = cfg.k_conf;
        report.confirmed_prefix_mode = !protocol_is_permissioned(cfg.protocol);
        for (const auto& [id, conf] : cfg.adversary)
            if (id < n()) report.byzantine.insert(id);

        // Committed client transactions: minimum over non-faulty replicas.
        uint64_t min_txns = UINT64_MAX;
        for (NodeId id = 0; id < n(); ++id) {
            if (report.byzantine.count(id)) continue;
            std::set<Digest> digests;
            for (const auto& block : chains[id].blocks())
                for (const auto& txn : block.transactions)
                    if (txn.client_id >= n()) digests.insert(txn.digest());
            min_txns = std::min<uint64_t>(min_txns, digests.size());
        }
        metrics.committed_txns_min = min_txns == UINT64_MAX ? 0 : min_txns;

        std::sort(latencies.begin(), latencies.end());
        metrics.latency.count = latencies.size();
        if (!latencies.empty()) {
            unsigned long long total = 0;
            for (Tick t : latencies) total += t;
            metrics.latency.mean_x1000 = total * 1000 / latencies.size();
            auto pct = [&](double p) {
                size_t idx = static_cast<size_t>(p * (latencies.size() - 1));
                return latencies[idx];
            };
            metrics.latency.p50 = pct(0.50);
            metrics.latency.p95 = pct(0.95);
            metrics.latency.p99 = pct(0.99);
        }

        if (cfg.protocol == Protocol::pow) {
            for (const auto* miner : miners) metrics.blocks_mined += miner->blocks_mined();
            metrics.canonical_height = chains.empty() ? 0 : chains[0].size() - 1;
            if (metrics.blocks_mined > 0)
                metrics.fork_rate_x1000 =
                    (metrics.blocks_mined - std::min(metrics.blocks_mined,
                                                     metrics.canonical_height)) *
                    1000 / metrics.blocks_mined;
        }

        report.metrics = std::move(metrics);
        auto violation =
            verify_safety(report.chains, report.byzantine, report.confirmed_prefix_mode,
                          report.k_conf);
        report.safety_ok = !violation.has_value();
        report.violation = violation;
        return report;
    }
};

}  // namespace

std::optional<Violation> verify_safety(const std::vector<Chain>& chains,
                                       const std::set<NodeId>& byzantine, bool confirmed_prefix,
                                       uint32_t k_conf) {
    for (NodeId a = 0; a < chains.size(); ++a) {
        if (byzantine.count(a)) continue;
        for (NodeId b = a + 1; b < chains.size(); ++b) {
            if (byzantine.count(b)) continue;
            size_t common = std::min(chains[a].size(), chains[b].size());
            if (confirmed_prefix) common = common > k_conf ? common - k_conf : 0;
            for (size_t k = 1; k < common; ++k) {
                Digest da = chains[a].blocks()[k].digest();
                Digest db = chains[b].blocks()[k].digest();
                if (da != db) return Violation{a, b, k, da, db};
            }
        }
    }
    return std::nullopt;
}

std::optional<Violation> verify_safety(const RunReport& report) {
    return verify_safety(report.chains, report.byzantine, report.confirmed_prefix_mode,
                         report.k_conf);
}

RunReport run_scenario(const ScenarioConfig& config, std::vector<TraceEvent>* trace) {
    config.validate();
    Runner runner(config, trace);
    runner.run();
    return runner.finish();
}

std::string RunReport::to_json() const {
    ordered_json j;
    j["scenario"] = scenario;
    j["protocol"] = protocol;
    j["seed"] = seed;
    j["verdict"] = safety_ok ? "ok" : "violation";
    if (violation) {
        j["violation"] = {{"replica_a", violation->replica_a},
                          {"replica_b", violation->replica_b},
                          {"seq", violation->seq},
                          {"digest_a", violation->digest_a.hex()},
                          {"digest_b", violation->digest_b.hex()}};
    }
    j["duration_exceeded"] = duration_exceeded;
    j["confirmed_prefix_mode"] = confirmed_prefix_mode;
    j["k_conf"] = k_conf;
    j["byzantine"] = byzantine;

    ordered_json m;
    m["committed_txns_min"] = metrics.committed_txns_min;
    m["completed_requests"] = metrics.completed_requests;
    m["view_changes"] = metrics.view_changes;
    m["malformed"] = metrics.malformed;
    m["dropped"] = metrics.dropped;
    m["total_protocol_sends"] = metrics.total_protocol_sends;
    m["sends_by_type"] = metrics.sends_by_type;
    m["latency"] = {{"count", metrics.latency.count},
                    {"mean_x1000", metrics.latency.mean_x1000},
                    {"p50", metrics.latency.p50},
                    {"p95", metrics.latency.p95},
                    {"p99", metrics.latency.p99}};
    if (protocol == "pow") {
        m["blocks_mined"] = metrics.blocks_mined;
        m["canonical_height"] = metrics.canonical_height;
        m["fork_rate_x1000"] = metrics.fork_rate_x1000;
    }
    if (metrics.cross_region_sends || !metrics.sends_by_type.empty())
        m["cross_region_sends"] = metrics.cross_region_sends;
    j["metrics"] = m;

    ordered_json chain_array = ordered_json::array();
    for (const auto& chain : chains) chain_array.push_back(ordered_json::parse(chain.to_json()));
    j["chains"] = chain_array;
    return j.dump(2);
}

RunReport RunReport::from_json(const std::string& text) {
    ordered_json j = ordered_json::parse(text, nullptr, false);
    if (j.is_discarded()) throw DecodeError("report: not valid JSON");
    RunReport report;
    report.scenario = j.value("scenario", std::string());
    report.protocol = j.value("protocol", std::string());
    report.seed = j.value("seed", uint64_t{0});
    report.safety_ok = j.value("verdict", std::string("ok")) == "ok";
    report.duration_exceeded = j.value("duration_exceeded", false);
    report.confirmed_prefix_mode = j.value("confirmed_prefix_mode", false);
    report.k_conf = j.value("k_conf", 6u);
    if (j.contains("byzantine"))
        report.byzantine = j.at("byzantine").get<std::set<NodeId>>();
    if (j.contains("metrics")) {
        const auto& m = j.at("metrics");
        report.metrics.committed_txns_min = m.value("committed_txns_min", uint64_t{0});
        report.metrics.completed_requests = m.value("completed_requests", uint64_t{0});
        report.metrics.view_changes = m.value("view_changes", uint64_t{0});
        report.metrics.total_protocol_sends = m.value("total_protocol_sends", uint64_t{0});
        if (m.contains("sends_by_type"))
            report.metrics.sends_by_type =
                m.at("sends_by_type").get<std::map<std::string, uint64_t>>();
        if (m.contains("latency")) {
            report.metrics.latency.count = m.at("latency").value("count", uint64_t{0});
            report.metrics.latency.mean_x1000 = m.at("latency").value("mean_x1000", uint64_t{0});
            report.metrics.latency.p50 = m.at("latency").value("p50", Tick{0});
            report.metrics.latency.p95 = m.at("latency").value("p95", Tick{0});
            report.metrics.latency.p99 = m.at("latency").value("p99", Tick{0});
        }
        report.metrics.cross_region_sends = m.value("cross_region_sends", uint64_t{0});
    }
    if (j.contains("chains"))
        for (const auto& chain : j.at("chains"))
            report.chains.push_back(Chain::from_json(chain.dump()));
    return report;
}

void emit_metrics(const RunReport& report, std::ostream& csv_out) {
    // Column union across decisions, in sorted order for stable output.
    std::set<std::string> types;
    for (const auto& [seq, counts] : report.metrics.per_decision)
        for (const auto& [type, count] : counts) types.insert(type);
    csv_out << "protocol,seq,latency_ticks";
    for (const auto& type : types) csv_out << "," << type;
    csv_out << "\n";
    for (const auto& [seq, counts] : report.metrics.per_decision) {
        Tick latency = 0;
        auto first = report.metrics.decision_first_send.find(seq);
        auto commit = report.metrics.decision_commit.find(seq);
        if (first != report.metrics.decision_first_send.end() &&
            commit != report.metrics.decision_commit.end() && commit->second >= first->second)
            latency = commit->second - first->second;
        csv_out << report.protocol << "," << seq << "," << latency;
        for (const auto& type : types) {
            auto it = counts.find(type);
            csv_out << "," << (it == counts.end() ? 0 : it->second);
        }
        csv_out << "\n";
    }
}

void emit_metrics_files(const RunReport& report, const std::string& base_path) {
    std::ofstream csv(base_path + ".csv");
    if (!csv) throw std::runtime_error("cannot write " + base_path + ".csv");  // IoError
    emit_metrics(report, csv);
    std::ofstream json(base_path + ".json");
    if (!json) throw std::runtime_error("cannot write " + base_path + ".json");
    json << report.to_json() << "\n";
}

}  // namespace bftlab
