// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftlab/scenario.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace bftlab {

using ordered_json = nlohmann::ordered_json;

const char* protocol_name(Protocol p) {
    switch (p) {
        case Protocol::pbft: return "pbft";
        case Protocol::zyzzyva: return "zyzzyva";
        case Protocol::sbft: return "sbft";
        case Protocol::hotstuff: return "hotstuff";
        case Protocol::poe: return "poe";
        case Protocol::rcc: return "rcc";
        case Protocol::rbft: return "rbft";
        case Protocol::geobft: return "geobft";
        case Protocol::pos_bft: return "pos_bft";
        case Protocol::pow: return "pow";
        case Protocol::pos_chain: return "pos_chain";
        case Protocol::poa_chain: return "poa_chain";
    }
    return "unknown";
}

std::optional<Protocol> protocol_from_name(const std::string& name) {
    for (Protocol p : {Protocol::pbft, Protocol::zyzzyva, Protocol::sbft, Protocol::hotstuff,
                       Protocol::poe, Protocol::rcc, Protocol::rbft, Protocol::geobft,
                       Protocol::pos_bft, Protocol::pow, Protocol::pos_chain,
                       Protocol::poa_chain})
        if (name == protocol_name(p)) return p;
    return std::nullopt;
}

bool protocol_is_permissioned(Protocol p) {
    switch (p) {
        case Protocol::pow:
        case Protocol::pos_chain:
        case Protocol::poa_chain: return false;
        default: return true;
    }
}

void ScenarioConfig::validate() const {
    if (version != 1) throw InvalidConfig("version: only schema version 1 is understood");
    quorum.validate();
    if (protocol == Protocol::geobft && quorum.cluster_sizes.size() < 2)
        throw InvalidConfig("quorum.clusters: geobft needs at least two clusters");
    if (protocol == Protocol::rcc && (quorum.z < 1 || quorum.z > quorum.n))
        throw InvalidConfig("quorum.z: rcc needs 1 <= z <= n");
    if (network.loss_prob < 0 || network.loss_prob > 1)
        throw InvalidConfig("network.loss: probability out of [0,1]");
    if (network.dup_prob < 0 || network.dup_prob > 1)
        throw InvalidConfig("network.dup: probability out of [0,1]");
    if (const auto* u = std::get_if<UniformDelay>(&network.delay))
        if (u->lo > u->hi) throw InvalidConfig("network.delay: lo > hi");

    uint32_t byz_replicas = 0;
    uint32_t crash_replicas = 0;
    for (const auto& [id, entry] : adversary) {
        if (id >= quorum.n) {
            if (entry.behavior != ByzantineBehavior::custom)
                throw InvalidConfig("adversary: client entries must use a custom script");
            continue;
        }
        if (entry.behavior == ByzantineBehavior::crash)
            ++crash_replicas;
        else
            ++byz_replicas;
    }
    if (byz_replicas > quorum.f)
        throw InvalidConfig("adversary: more than f byzantine replicas");
    if (crash_replicas > quorum.f + quorum.c)
        throw InvalidConfig("adversary: more than f+c crashed replicas");

    if (protocol == Protocol::pos_bft || protocol == Protocol::pos_chain) {
        if (stakes.size() != quorum.n)
            throw InvalidConfig("stakes: need one stake per replica");
        double total = 0;
        for (double s : stakes) {
            if (s < 0) throw InvalidConfig("stakes: negative stake");
            total += s;
        }
        if (total <= 0) throw InvalidConfig("stakes: total stake must be positive");
    }
    if (protocol == Protocol::poa_chain) {
        if (authorities.empty()) throw InvalidConfig("authorities: must be non-empty");
        for (NodeId a : authorities)
            if (a >= quorum.n) throw InvalidConfig("authorities: unknown node id");
    }
    if (batch_size < 1) throw InvalidConfig("batch: must be >= 1");
    if (pipeline_window < 1) throw InvalidConfig("knobs.window: must be >= 1");
    if (degradation_ratio <= 0 || degradation_ratio > 1)
        throw InvalidConfig("knobs.degradation_ratio: out of (0,1]");
    if (!regions.empty()) {
        for (const auto& region : regions)
            for (NodeId r : region)
                if (r >= quorum.n) throw InvalidConfig("regions: unknown replica id");
    }
}

static ordered_json delay_to_json(const DelayModel& delay) {
    if (const auto* c = std::get_if<ConstantDelay>(&delay))
        return {{"kind", "constant"}, {"value", c->value}};
    const auto& u = std::get<UniformDelay>(delay);
    return {{"kind", "uniform"}, {"lo", u.lo}, {"hi", u.hi}};
}

static const char* behavior_name(ByzantineBehavior b) {
    switch (b) {
        case ByzantineBehavior::crash: return "crash";
        case ByzantineBehavior::mute: return "mute";
        case ByzantineBehavior::equivocate: return "equivocate";
        case ByzantineBehavior::delay: return "delay";
        case ByzantineBehavior::custom: return "custom";
    }
    return "mute";
}

static ByzantineBehavior behavior_from_name(const std::string& name) {
    if (name == "crash") return ByzantineBehavior::crash;
    if (name == "mute") return ByzantineBehavior::mute;
    if (name == "equivocate") return ByzantineBehavior::equivocate;
    if (name == "delay") return ByzantineBehavior::delay;
    if (name == "custom") return ByzantineBehavior::custom;
    throw InvalidConfig("adversary.behavior: unknown behavior '" + name + "'");
}

std::string ScenarioConfig::to_json() const {
    ordered_json j;
    j["version"] = version;
    j["name"] = name;
    j["protocol"] = protocol_name(protocol);
    j["quorum"] = {{"n", quorum.n}, {"f", quorum.f}, {"c", quorum.c}, {"z", quorum.z}};
    if (!quorum.cluster_sizes.empty()) j["quorum"]["clusters"] = quorum.cluster_sizes;
    j["network"] = {{"delay", delay_to_json(network.delay)},
                    {"loss", network.loss_prob},
                    {"dup", network.dup_prob}};
    if (!network.partitions.empty()) {
        ordered_json parts = ordered_json::array();
        for (const auto& set : network.partitions) parts.push_back(set);
        j["network"]["partitions"] = parts;
    }
    ordered_json adv = ordered_json::object();
    for (const auto& [id, entry] : adversary) {
        ordered_json e;
        e["behavior"] = behavior_name(entry.behavior);
        if (entry.from_tick) e["from_tick"] = entry.from_tick;
        if (entry.extra_delay) e["extra_delay"] = entry.extra_delay;
        if (!entry.script.empty()) e["script"] = entry.script;
        if (entry.script_param) e["script_param"] = entry.script_param;
        adv[std::to_string(id)] = e;
    }
    j["adversary"] = adv;
    j["clients"] = {{"count", client_count}, {"requests", requests_per_client}};
    j["seed"] = seed;
    j["duration"] = duration;
    j["batch"] = batch_size;
    ordered_json knobs;
    knobs["window"] = pipeline_window;
    knobs["k_conf"] = k_conf;
    knobs["degradation_ratio"] = degradation_ratio;
    knobs["monitor_window"] = monitor_window;
    knobs["dual_sign"] = dual_sign;
    knobs["auth_kind"] = auth_kind == AuthKind::mac ? "mac" : "sig";
    if (!stakes.empty()) knobs["stakes"] = stakes;
    if (!authorities.empty()) knobs["authorities"] = authorities;
    knobs["pos_mode"] = pos_mode == PosMode::coinage ? "coinage" : "stake";
    knobs["mean_interval"] = mean_interval;
    knobs["blocks_target"] = blocks_target;
    knobs["retarget_every"] = retarget_every;
    knobs["slot_ticks"] = slot_ticks;
    if (!regions.empty()) knobs["regions"] = regions;
    j["knobs"] = knobs;
    return j.dump(2);
}

ScenarioConfig ScenarioConfig::from_json(const std::string& text) {
    ordered_json j = ordered_json::parse(text, nullptr, false);
    if (j.is_discarded()) throw InvalidConfig("scenario: not valid JSON");
    ScenarioConfig cfg;
    try {
        cfg.version = j.value("version", 1u);
        cfg.name = j.value("name", std::string("unnamed"));
        auto proto = protocol_from_name(j.at("protocol").get<std::string>());
        if (!proto) throw InvalidConfig("protocol: unknown protocol name");
        cfg.protocol = *proto;

        const auto& q = j.at("quorum");
        cfg.quorum.n = q.at("n").get<uint32_t>();
        cfg.quorum.f = q.value("f", 0u);
        cfg.quorum.c = q.value("c", 0u);
        cfg.quorum.z = q.value("z", 1u);
        if (q.contains("clusters"))
            cfg.quorum.cluster_sizes = q.at("clusters").get<std::vector<uint32_t>>();

        if (j.contains("network")) {
            const auto& net = j.at("network");
            if (net.contains("delay")) {
                const auto& d = net.at("delay");
                std::string kind = d.at("kind").get<std::string>();
                if (kind == "constant")
                    cfg.network.delay = ConstantDelay{d.at("value").get<Tick>()};
                else if (kind == "uniform")
                    cfg.network.delay = UniformDelay{d.at("lo").get<Tick>(), d.at("hi").get<Tick>()};
                else
                    throw InvalidConfig("network.delay.kind: expected constant|uniform");
            }
            cfg.network.loss_prob = net.value("loss", 0.0);
            cfg.network.dup_prob = net.value("dup", 0.0);
            if (net.contains("partitions"))
                for (const auto& part : net.at("partitions"))
                    cfg.network.partitions.push_back(part.get<std::set<NodeId>>());
        }

        if (j.contains("adversary")) {
            for (const auto& [key, value] : j.at("adversary").items()) {
                AdversaryConfig entry;
                entry.behavior = behavior_from_name(value.at("behavior").get<std::string>());
                entry.from_tick = value.value("from_tick", Tick{0});
                entry.extra_delay = value.value("extra_delay", Tick{0});
                entry.script = value.value("script", std::string());
                entry.script_param = value.value("script_param", uint64_t{0});
                cfg.adversary[static_cast<NodeId>(std::stoul(key))] = entry;
            }
        }

        if (j.contains("clients")) {
            cfg.client_count = j.at("clients").value("count", 1u);
            cfg.requests_per_client = j.at("clients").value("requests", 10u);
        }
        cfg.seed = j.value("seed", uint64_t{1});
        cfg.duration = j.value("duration", Tick{1000000});
        cfg.batch_size = j.value("batch", 1u);

        if (j.contains("knobs")) {
            const auto& k = j.at("knobs");
            cfg.pipeline_window = k.value("window", 4u);
            cfg.k_conf = k.value("k_conf", 6u);
            cfg.degradation_ratio = k.value("degradation_ratio", 0.9);
            cfg.monitor_window = k.value("monitor_window", Tick{1000});
            cfg.dual_sign = k.value("dual_sign", false);
            std::string auth = k.value("auth_kind", std::string("mac"));
            cfg.auth_kind = auth == "sig" ? AuthKind::signature : AuthKind::mac;
            if (k.contains("stakes")) cfg.stakes = k.at("stakes").get<std::vector<double>>();
            if (k.contains("authorities"))
                cfg.authorities = k.at("authorities").get<std::set<NodeId>>();
            std::string mode = k.value("pos_mode", std::string("stake"));
            cfg.pos_mode = mode == "coinage" ? PosMode::coinage : PosMode::stake_proportional;
            cfg.mean_interval = k.value("mean_interval", 100.0);
            cfg.blocks_target = k.value("blocks_target", uint64_t{100});
            cfg.retarget_every = k.value("retarget_every", 10u);
            cfg.slot_ticks = k.value("slot_ticks", Tick{10});
            if (k.contains("regions"))
                cfg.regions = k.at("regions").get<std::vector<std::vector<NodeId>>>();
        }
    } catch (const ordered_json::exception& e) {
        throw InvalidConfig(std::string("scenario: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ScenarioConfig ScenarioConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig("scenario: cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return from_json(buffer.str());
}

}  // namespace bftlab
