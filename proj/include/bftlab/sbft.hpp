// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "bftlab/replica_base.hpp"

namespace bftlab {

// Linear twin-path protocol. Ordering shares flow to a collector who
// combines 3f+c+1 of them on the fast path (n >= 3f+2c+1 replicas must be
// deployed for that to tolerate c crashes). If the collector's timer fires
// first it falls back to two extra linear phases at threshold 2f+1.
// Execution results flow to an executor who aggregates f+1 identical ones
// into a single certificate for replicas and client.
class SbftReplica : public ReplicaBase {
  public:
    explicit SbftReplica(ReplicaContext ctx);

    Outputs step(const AutomatonInput& input) override;
    StateSummary inspect() const override;

    NodeId collector() const { return (ctx_.leader_of(view_) + 1) % ctx_.quorum.n; }
    NodeId executor() const { return (ctx_.leader_of(view_) + 2) % ctx_.quorum.n; }
    uint32_t fast_threshold() const { return 3 * ctx_.quorum.f + ctx_.quorum.c + 1; }

    static constexpr uint64_t kCollectTimerBase = 1ull << 32;
    static constexpr uint64_t kRelayTimerBase = 1000;

  private:
    struct Entry {
        uint64_t view = 0;
        uint64_t seq = 0;
        Digest digest;
        std::vector<Transaction> batch;
        bool have_proposal = false;
        bool shared = false;  // this replica's ordering share went out
        // Collector state, bucketed per digest: an equivocating primary
        // yields shares over conflicting messages that must never mix.
        std::map<Digest, std::vector<ThresholdShare>> order_shares;
        std::map<Digest, std::set<NodeId>> order_share_senders;
        std::vector<ThresholdShare> slow_shares;         // collector, phase 2
        std::set<NodeId> slow_share_senders;
        bool slow_path = false;
        bool certified = false;
        bool executed = false;
        std::map<Digest, std::vector<ThresholdShare>> exec_shares;  // executor
        std::map<Digest, std::set<NodeId>> exec_share_senders;
        std::map<Digest, Bytes> exec_results;
        bool exec_cert_sent = false;
        Bytes order_cert;
    };

    bool is_primary() const { return ctx_.leader_of(view_) == ctx_.id; }
    Bytes order_msg(uint64_t view, uint64_t seq, const Digest& digest) const;
    Bytes slow_msg(uint64_t view, uint64_t seq, const Digest& digest) const;
    Bytes exec_msg(uint64_t seq, const Bytes& result) const;

    void handle_request(Outputs& out, const Transaction& txn);
    void handle_preprepare(Outputs& out, const Frame& frame);
    void handle_sign_share(Outputs& out, const Frame& frame);
    void handle_full_cert(Outputs& out, const Frame& frame);
    void handle_slow_share(Outputs& out, const Frame& frame);
    void handle_slow_cert(Outputs& out, const Frame& frame);
    void handle_exec_share(Outputs& out, const Frame& frame);
    void handle_exec_cert(Outputs& out, const Frame& frame);
    void handle_timer(Outputs& out, uint64_t timer_id);

    void maybe_propose(Outputs& out);
    void accept_proposal(Outputs& out, const PrePrepareMsg& m);
    void collector_try_fast(Outputs& out, Entry& entry);
    void mark_certified(Outputs& out, Entry& entry, const ThresholdSignature& sig);
    void try_execute(Outputs& out);
    void executor_try_aggregate(Outputs& out, Entry& entry);

    uint64_t view_ = 0;
    uint64_t next_seq_ = 1;
    uint64_t next_exec_ = 1;
    std::map<uint64_t, Entry> log_;

    std::map<Digest, uint64_t> relay_timers_;
    std::map<uint64_t, Digest> timer_requests_;
    uint64_t next_relay_timer_ = kRelayTimerBase;
};

}  // namespace bftlab
