// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "bftlab/replica_base.hpp"

namespace bftlab {

// Three-phase PBFT with view change. The primary's pre-prepare stands in
// for its prepare vote, so a decision costs (n-1) pre-prepares, (n-1)^2
// prepares and n(n-1) commits.
class PbftReplica : public ReplicaBase {
  public:
    explicit PbftReplica(ReplicaContext ctx);

    Outputs step(const AutomatonInput& input) override;
    StateSummary inspect() const override;

    enum class Status { idle, preprepared, prepared, committed, executed };

    struct LogEntry {
        uint64_t view = 0;
        uint64_t seq = 0;
        Digest digest;
        std::vector<Transaction> batch;
        bool have_preprepare = false;
        std::map<Digest, std::set<NodeId>> prepare_votes;
        std::map<Digest, std::set<NodeId>> commit_votes;
        Status status = Status::idle;
    };

    uint64_t view() const { return view_; }
    bool in_view_change() const { return in_view_change_; }
    const LogEntry* entry(uint64_t seq) const;
    uint64_t suspicious_events() const { return suspicious_; }
    uint64_t last_executed() const { return next_exec_ - 1; }

    // External demand to replace the current primary (RBFT's monitor).
    void force_view_change(Outputs& out) { start_view_change(out, view_ + 1); }

    // Lets a composing protocol hand requests straight to the pool.
    void add_request(const Transaction& txn) { pool_.add(txn); }
    bool pool_has_pending() const { return pool_.has_pending(); }
    // True when this replica has proposed nothing that is still unexecuted.
    bool primary_idle() const { return next_seq_ == next_exec_; }
    void propose_pending(Outputs& out) {
        if (ctx_.leader_of(view_) == ctx_.id && !in_view_change_) maybe_propose(out);
    }

    static constexpr uint64_t kViewChangeTimer = 1;
    static constexpr uint64_t kRelayTimerBase = 1000;

  private:
    bool is_primary() const { return ctx_.leader_of(view_) == ctx_.id; }
    Tick relay_timeout() const;

    void handle_request(Outputs& out, const Transaction& txn, bool via_frame_auth_checked);
    void handle_preprepare(Outputs& out, const Frame& frame);
    void handle_prepare(Outputs& out, const Frame& frame);
    void handle_commit(Outputs& out, const Frame& frame);
    void handle_view_change(Outputs& out, const Frame& frame);
    void handle_new_view(Outputs& out, const Frame& frame);
    void handle_timer(Outputs& out, uint64_t timer_id);

    void maybe_propose(Outputs& out);
    bool stash_if_blocked(const Frame& frame, uint64_t msg_view);
    void replay_stash(Outputs& out);
    void check_prepared(Outputs& out, LogEntry& entry);
    void check_committed(Outputs& out, LogEntry& entry);
    void try_execute(Outputs& out);
    void start_view_change(Outputs& out, uint64_t target);
    void maybe_emit_new_view(Outputs& out, uint64_t target);
    void adopt_preprepare(Outputs& out, const Frame& frame, bool from_new_view);
    std::vector<LogProof> prepared_proofs() const;

    uint64_t view_ = 0;
    uint64_t next_seq_ = 1;   // primary's allocator
    uint64_t next_exec_ = 1;  // execution frontier
    std::map<uint64_t, LogEntry> log_;
    std::map<Digest, uint64_t> assigned_;  // request digest -> seq at the primary

    bool in_view_change_ = false;
    uint64_t vc_target_ = 0;
    std::map<uint64_t, std::map<NodeId, Bytes>> vc_frames_;  // view -> sender -> frame
    std::set<uint64_t> done_views_;                          // views we entered
    Bytes last_new_view_;                                    // catch-up evidence
    std::vector<Bytes> stashed_frames_;  // protocol messages racing a view change

    std::map<Digest, uint64_t> relay_timers_;  // request digest -> timer id
    std::map<uint64_t, Digest> timer_requests_;
    uint64_t next_relay_timer_ = kRelayTimerBase;
    uint64_t exec_at_last_expiry_ = 1;
    uint64_t suspicious_ = 0;
};

}  // namespace bftlab
