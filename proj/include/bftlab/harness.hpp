// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <iosfwd>

#include "bftlab/ledger.hpp"
#include "bftlab/scenario.hpp"

namespace bftlab {

struct TraceEvent {
    enum class Kind { send, deliver, drop, timer, commit, rollback, complete, view_change };
    Tick time = 0;
    Kind kind = Kind::send;
    NodeId src = 0;
    NodeId dst = 0;
    MsgType mtype = MsgType::client_request;
    uint64_t seq = 0;
    Digest digest;
};

const char* trace_kind_name(TraceEvent::Kind k);
std::string trace_to_jsonl(const std::vector<TraceEvent>& trace);

struct LatencySummary {
    uint64_t count = 0;
    uint64_t mean_x1000 = 0;  // mean latency in milliticks, integer for stable output
    Tick p50 = 0;
    Tick p95 = 0;
    Tick p99 = 0;
};

struct Metrics {
    uint64_t committed_txns_min = 0;  // min over non-faulty replicas, client txns only
    uint64_t completed_requests = 0;
    uint64_t view_changes = 0;
    uint64_t malformed = 0;
    uint64_t dropped = 0;
    uint64_t total_protocol_sends = 0;
    std::map<std::string, uint64_t> sends_by_type;
    std::map<uint64_t, std::map<std::string, uint64_t>> per_decision;
    std::map<uint64_t, Tick> decision_first_send;
    std::map<uint64_t, Tick> decision_commit;
    LatencySummary latency;
    // permissionless
    uint64_t blocks_mined = 0;
    uint64_t canonical_height = 0;
    uint64_t fork_rate_x1000 = 0;
    // labeled-topology accounting
    uint64_t cross_region_sends = 0;
};

struct Violation {
    NodeId replica_a = 0;
    NodeId replica_b = 0;
    uint64_t seq = 0;
    Digest digest_a;
    Digest digest_b;
};

struct RunReport {
    std::string scenario;
    std::string protocol;
    uint64_t seed = 0;
    bool duration_exceeded = false;
    std::vector<Chain> chains;  // one per replica
    std::set<NodeId> byzantine;
    bool safety_ok = true;
    std::optional<Violation> violation;
    uint32_t k_conf = 6;
    bool confirmed_prefix_mode = false;  // permissionless comparison rule
    Metrics metrics;

    std::string to_json() const;
    static RunReport from_json(const std::string& text);
};

// Prefix agreement across non-faulty replica chains. Permissionless chains
// legitimately disagree near the tip, so those runs compare only the prefix
// confirmed k_conf blocks deep.
std::optional<Violation> verify_safety(const std::vector<Chain>& chains,
                                       const std::set<NodeId>& byzantine, bool confirmed_prefix,
                                       uint32_t k_conf);
std::optional<Violation> verify_safety(const RunReport& report);

RunReport run_scenario(const ScenarioConfig& config, std::vector<TraceEvent>* trace = nullptr);

// One CSV row per decision plus a JSON summary next to it.
void emit_metrics(const RunReport& report, std::ostream& csv_out);
void emit_metrics_files(const RunReport& report, const std::string& base_path);

}  // namespace bftlab
