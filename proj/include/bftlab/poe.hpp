// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "bftlab/replica_base.hpp"

namespace bftlab {

class UndoUnavailable : public std::runtime_error {
  public:
    UndoUnavailable() : std::runtime_error("rollback requested past recorded undo state") {}
};

// Proof-of-Execution: Propose / Support / Certify, all linear through the
// primary, with speculative in-order execution once an entry is certified
// locally. A after a view change, certified entries carried into the new
// view are kept; anything executed above that point is rolled back and the
// ledger truncated.
class PoeReplica : public ReplicaBase {
  public:
    explicit PoeReplica(ReplicaContext ctx);

    Outputs step(const AutomatonInput& input) override;
    StateSummary inspect() const override;

    uint64_t view() const { return view_; }
    uint64_t rollbacks() const { return rollbacks_; }
    uint64_t equivocation_flags() const { return equivocation_flags_; }

    static constexpr uint64_t kViewChangeTimer = 1;
    static constexpr uint64_t kRelayTimerBase = 1000;

  private:
    struct Entry {
        uint64_t view = 0;
        uint64_t seq = 0;
        Digest digest;
        std::vector<Transaction> batch;
        bool have_proposal = false;
        std::vector<ThresholdShare> supports;  // at the primary
        std::set<NodeId> support_senders;
        bool certify_sent = false;
        bool certified = false;
        Bytes cert_bytes;
        bool executed = false;
    };

    bool is_primary() const { return ctx_.leader_of(view_) == ctx_.id; }
    Bytes support_msg(uint64_t view, uint64_t seq, const Digest& digest) const;
    uint64_t outstanding() const;

    void handle_request(Outputs& out, const Transaction& txn);
    void handle_propose(Outputs& out, const Frame& frame);
    void handle_support(Outputs& out, const Frame& frame);
    void handle_certify(Outputs& out, const Frame& frame);
    void handle_view_change(Outputs& out, const Frame& frame);
    void handle_new_view(Outputs& out, const Frame& frame);
    void handle_timer(Outputs& out, uint64_t timer_id);

    void maybe_propose(Outputs& out);
    bool stash_if_blocked(const Frame& frame, uint64_t msg_view);
    void replay_stash(Outputs& out);
    void accept_propose(Outputs& out, const PoeProposeMsg& m, NodeId signer);
    void mark_certified(Outputs& out, uint64_t seq, const ThresholdSignature& sig);
    void try_execute(Outputs& out);
    void start_view_change(Outputs& out, uint64_t target);
    void maybe_emit_new_view(Outputs& out, uint64_t target);
    void adopt_new_view(Outputs& out, uint64_t new_view,
                        const std::vector<Bytes>& propose_frames);
    std::vector<LogProof> certified_proofs() const;

    uint64_t view_ = 0;
    uint64_t next_seq_ = 1;
    uint64_t next_exec_ = 1;
    std::map<uint64_t, Entry> log_;
    std::map<std::pair<uint64_t, uint64_t>, Digest> first_seen_;  // (view, seq)

    bool in_view_change_ = false;
    uint64_t vc_target_ = 0;
    std::map<uint64_t, std::map<NodeId, Bytes>> vc_frames_;
    std::set<uint64_t> done_views_;
    Bytes last_new_view_;
    std::vector<Bytes> stashed_frames_;

    std::map<Digest, uint64_t> relay_timers_;
    std::map<uint64_t, Digest> timer_requests_;
    uint64_t next_relay_timer_ = kRelayTimerBase;
    uint64_t rollbacks_ = 0;
    uint64_t equivocation_flags_ = 0;
};

}  // namespace bftlab
