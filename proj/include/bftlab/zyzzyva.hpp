// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "bftlab/replica_base.hpp"

namespace bftlab {

// Speculative twin-path replica: replicas execute in the primary's proposed
// order without agreement and answer the client directly. The client owns
// the safety decision, so this module is deliberately unsafe under a faulty
// primary; the harness's safety checker is what detects the damage.
class ZyzzyvaReplica : public ReplicaBase {
  public:
    explicit ZyzzyvaReplica(ReplicaContext ctx);

    Outputs step(const AutomatonInput& input) override;
    StateSummary inspect() const override;

    uint64_t view() const { return view_; }
    const Digest& history() const { return history_; }

    static constexpr uint64_t kRelayTimerBase = 1000;

  private:
    bool is_primary() const { return ctx_.leader_of(view_) == ctx_.id; }

    void handle_request(Outputs& out, const Transaction& txn);
    void handle_ordered_request(Outputs& out, const Frame& frame);
    void handle_commit_cert(Outputs& out, const Frame& frame);
    void execute_speculatively(Outputs& out, const OrderedRequestMsg& m);
    void maybe_propose(Outputs& out);
    void drain_buffer(Outputs& out);

    uint64_t view_ = 0;
    uint64_t next_seq_ = 1;  // primary's allocator
    uint64_t next_exec_ = 1;
    Digest history_;  // hash chain over executed batch digests
    std::map<uint64_t, OrderedRequestMsg> buffered_;  // out-of-order proposals
    std::map<uint64_t, Digest> executed_history_;     // seq -> history after exec
    std::map<uint64_t, Digest> executed_digest_;      // seq -> batch digest
    std::map<uint64_t, bool> committed_;              // seq -> stable via cert

    std::map<Digest, uint64_t> relay_timers_;
    std::map<uint64_t, Digest> timer_requests_;
    uint64_t next_relay_timer_ = kRelayTimerBase;
};

}  // namespace bftlab
