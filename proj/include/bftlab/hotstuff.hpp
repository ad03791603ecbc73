// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "bftlab/replica_base.hpp"

namespace bftlab {

// Chained rotating-leader protocol. The leader of round i proposes with the
// quorum certificate for round i-1 embedded; replicas send threshold shares
// to the leader of round i+1; a command executes once the QC chain covers
// its round at depth three.
class HotstuffReplica : public ReplicaBase {
  public:
    explicit HotstuffReplica(ReplicaContext ctx);

    Outputs step(const AutomatonInput& input) override;
    StateSummary inspect() const override;

    NodeId leader_of_round(uint64_t round) const { return ctx_.leader_of(round); }
    uint64_t current_round() const { return round_; }
    uint64_t executed_round() const { return executed_round_; }

    static constexpr uint64_t kRoundTimer = 1;

  private:
    struct Proposal {
        Digest digest;
        std::vector<Transaction> batch;
        uint64_t parent_round = 0;  // justify.round; round 0 has no parent
        bool has_parent = false;
        bool executed = false;
    };

    Bytes vote_msg(uint64_t round, const Digest& digest) const;
    bool qc_valid(const QuorumCert& qc) const;

    void handle_request(Outputs& out, const Transaction& txn);
    void handle_proposal(Outputs& out, const Frame& frame);
    void handle_vote(Outputs& out, const Frame& frame);
    void handle_newround(Outputs& out, const Frame& frame);
    void handle_round_timer(Outputs& out);

    void propose(Outputs& out, uint64_t round);
    void enter_round(Outputs& out, uint64_t round);
    void record_qc(const QuorumCert& qc);
    void cast_vote(Outputs& out, uint64_t round, const Digest& digest);
    void add_vote(Outputs& out, uint64_t round, const Digest& digest,
                  const ThresholdShare& share);
    void try_execute(Outputs& out, uint64_t formed_round);
    void sweep_dead_rounds();
    bool work_pending() const;
    void manage_timer(Outputs& out);

    uint64_t round_ = 0;           // current round at this replica
    uint64_t last_vote_round_ = 0; // monotone voting guard (0 = none yet)
    uint64_t executed_round_ = 0;  // highest executed round
    uint64_t next_commit_seq_ = 1;
    std::optional<QuorumCert> high_qc_;
    std::map<uint64_t, Proposal> proposals_;
    std::map<uint64_t, QuorumCert> qcs_;
    std::map<uint64_t, std::vector<ThresholdShare>> votes_;  // as next-round leader
    std::map<uint64_t, std::set<NodeId>> vote_senders_;
    std::map<uint64_t, Digest> vote_digest_;
    std::set<uint64_t> proposed_rounds_;
    uint64_t live_batches_ = 0;  // unexecuted non-empty proposals still reachable
    uint64_t swept_upto_ = 0;    // dead-round sweep frontier
    std::set<NodeId> newround_senders_;
    uint64_t newround_round_ = 0;
    uint32_t consecutive_timeouts_ = 0;
    bool timer_armed_ = false;
};

}  // namespace bftlab
