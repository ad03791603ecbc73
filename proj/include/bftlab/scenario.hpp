// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <string>

#include "bftlab/permissionless.hpp"
#include "bftlab/quorum.hpp"
#include "bftlab/simnet.hpp"

namespace bftlab {

enum class Protocol {
    pbft,
    zyzzyva,
    sbft,
    hotstuff,
    poe,
    rcc,
    rbft,
    geobft,
    pos_bft,
    pow,
    pos_chain,
    poa_chain,
};

const char* protocol_name(Protocol p);
std::optional<Protocol> protocol_from_name(const std::string& name);
bool protocol_is_permissioned(Protocol p);

struct AdversaryConfig {
    ByzantineBehavior behavior = ByzantineBehavior::mute;
    Tick from_tick = 0;
    Tick extra_delay = 0;
    std::string script;       // custom behavior: registered script name
    uint64_t script_param = 0;
};

// Declarative description of one experiment; together with a seed it fixes
// the run completely.
struct ScenarioConfig {
    uint32_t version = 1;
    std::string name = "unnamed";
    Protocol protocol = Protocol::pbft;
    QuorumConfig quorum;
    NetworkModel network;
    std::map<NodeId, AdversaryConfig> adversary;
    uint32_t client_count = 1;
    uint32_t requests_per_client = 10;
    uint64_t seed = 1;
    Tick duration = 1000000;
    uint32_t batch_size = 1;

    // protocol-specific knobs
    uint32_t pipeline_window = 4;       // poe
    uint32_t k_conf = 6;                // permissionless confirmation depth
    double degradation_ratio = 0.9;     // rbft
    Tick monitor_window = 1000;         // rbft
    bool dual_sign = false;             // aardvark-style client signing
    AuthKind auth_kind = AuthKind::mac; // replica-to-replica authenticators
    std::vector<double> stakes;         // pos variants + pos_bft schedule
    std::set<NodeId> authorities;       // poa
    PosMode pos_mode = PosMode::stake_proportional;
    double mean_interval = 100.0;       // pow: mean ticks between blocks
    uint64_t blocks_target = 100;       // pow / pos / poa chain length
    uint32_t retarget_every = 10;       // pow difficulty adjustment cadence
    Tick slot_ticks = 10;               // pos/poa slot length
    std::vector<std::vector<NodeId>> regions;  // labels for cross-region metrics

    void validate() const;  // throws InvalidConfig with a field-level message

    std::string to_json() const;
    static ScenarioConfig from_json(const std::string& text);
    static ScenarioConfig from_file(const std::string& path);
};

}  // namespace bftlab
