// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <deque>

#include "bftlab/pbft.hpp"

namespace bftlab {

// Shared plumbing for protocols composed out of PBFT instances: inner
// automata exchange ordinary frames wrapped in an instance tag, inner timers
// are namespaced by instance, inner commits are captured for unification and
// inner client replies are suppressed (the composition answers clients).
class InstanceMux {
  public:
    static constexpr uint64_t kStride = 1ull << 40;

    struct Translated {
        Outputs outer;
        std::vector<CommitOut> commits;
    };

    InstanceMux(NodeId self, uint32_t replica_count, const KeyMaterial& key, AuthKind kind)
        : self_(self), replica_count_(replica_count), key_(key), kind_(kind) {}

    // When set, inner broadcasts expand to explicit sends to these members
    // (cluster-local protocols); otherwise they stay global broadcasts.
    void restrict_broadcast(std::vector<NodeId> members) { members_ = std::move(members); }
    void capture_own_frames(std::function<void(const Frame&)> fn) { own_frame_cb_ = std::move(fn); }

    Bytes wrap(uint32_t instance, const Bytes& inner_payload) const;
    Translated translate(uint32_t instance, Outputs inner) const;

  private:
    NodeId self_;
    uint32_t replica_count_;
    KeyMaterial key_;
    AuthKind kind_;
    std::optional<std::vector<NodeId>> members_;
    std::function<void(const Frame&)> own_frame_cb_;
};

// RCC: z parallel PBFT instances with distinct primaries; a round commits
// one block holding the z instance decisions in ascending instance order.
class RccReplica : public Automaton {
  public:
    RccReplica(ReplicaContext ctx, uint32_t z);

    Outputs step(const AutomatonInput& input) override;
    StateSummary inspect() const override;

    const PbftReplica& instance(uint32_t i) const { return *instances_[i]; }

  private:
    void dispatch_inner(Outputs& out, uint32_t instance, const AutomatonInput& input);
    void unify(Outputs& out);
    void apply_noop_pressure(Outputs& out);

    ReplicaContext ctx_;
    uint32_t z_;
    InstanceMux mux_;
    std::vector<std::unique_ptr<PbftReplica>> instances_;
    std::vector<std::deque<std::vector<Transaction>>> decided_;
    std::vector<uint64_t> total_decided_;
    std::vector<bool> noop_outstanding_;
    ExecEngine exec_;
    uint64_t next_round_ = 1;
    uint64_t noop_nonce_ = 0;
};

// RBFT: f+1 redundant instances ordering every request after a propagation
// phase; only the master instance executes. Backup instances exist to
// expose a throughput-throttling master primary, which is then replaced
// through the master instance's own view change.
class RbftReplica : public Automaton {
  public:
    RbftReplica(ReplicaContext ctx, double degradation_ratio, Tick monitor_window);

    Outputs step(const AutomatonInput& input) override;
    StateSummary inspect() const override;

    uint64_t replacements() const { return replacements_; }
    const PbftReplica& instance(uint32_t i) const { return *instances_[i]; }

    static constexpr uint64_t kMonitorTimer = (1ull << 60) + 1;

  private:
    void dispatch_inner(Outputs& out, uint32_t instance, const AutomatonInput& input);
    void feed_request(Outputs& out, const Transaction& txn, bool already_propagated);
    void window_tick(Outputs& out);

    ReplicaContext ctx_;
    uint32_t instance_count_;
    InstanceMux mux_;
    std::vector<std::unique_ptr<PbftReplica>> instances_;
    std::vector<uint64_t> window_counts_;
    ExecEngine exec_;
    uint64_t next_commit_seq_ = 1;
    std::set<Digest> propagated_;
    std::map<uint64_t, std::set<NodeId>> replace_votes_;  // epoch -> voters
    std::set<uint64_t> voted_epochs_;
    std::set<uint64_t> replaced_epochs_;
    uint64_t replacements_ = 0;
    bool monitor_armed_ = false;
    double degradation_ratio_;
    Tick monitor_window_;
    uint64_t outstanding_requests_ = 0;
};

// GeoBFT: per-cluster PBFT plus optimistic global sharing. Each round every
// cluster locally replicates one transaction, its primary ships it with a
// commit certificate to f+1 members of each remote cluster, those members
// re-broadcast locally, and every replica executes the round's transactions
// in ascending cluster order. Replies go only to local clients.
class GeoBftReplica : public Automaton {
  public:
    GeoBftReplica(ReplicaContext ctx, uint32_t cluster, std::vector<NodeId> cluster_members);

    Outputs step(const AutomatonInput& input) override;
    StateSummary inspect() const override;

    uint32_t cluster() const { return cluster_; }
    uint64_t invalid_certificates() const { return invalid_certificates_; }

    static constexpr uint64_t kResendTimerBase = (1ull << 60) + 1000;

  private:
    uint32_t cluster_count() const {
        return static_cast<uint32_t>(ctx_.quorum.cluster_sizes.size());
    }
    NodeId local_primary() const;
    bool validate_share(const GlobalShareMsg& m) const;

    void dispatch_inner(Outputs& out, const AutomatonInput& input);
    void on_local_decision(Outputs& out, uint64_t round, std::vector<Transaction> batch);
    void send_global_shares(Outputs& out, uint64_t round);
    void handle_global_share(Outputs& out, const Frame& frame);
    void try_execute_rounds(Outputs& out);
    void apply_noop_pressure(Outputs& out);

    ReplicaContext ctx_;
    uint32_t cluster_;
    std::vector<NodeId> members_;  // global ids of this cluster
    InstanceMux mux_;
    std::unique_ptr<PbftReplica> local_;
    ExecEngine exec_;

    std::map<std::pair<uint64_t, Digest>, std::map<NodeId, Bytes>> commit_frames_;
    std::map<uint64_t, std::vector<Transaction>> local_decided_;   // round -> batch
    std::map<uint64_t, Bytes> local_share_payload_;                // round -> global share frame
    std::map<uint32_t, std::map<uint64_t, std::vector<Transaction>>> remote_decided_;
    uint64_t next_exec_round_ = 1;
    uint64_t noop_nonce_ = 0;
    bool noop_outstanding_ = false;
    uint64_t invalid_certificates_ = 0;
};

}  // namespace bftlab
