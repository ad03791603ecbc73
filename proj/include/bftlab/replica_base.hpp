// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <optional>

#include "bftlab/automaton.hpp"
#include "bftlab/quorum.hpp"
#include "bftlab/wire.hpp"

namespace bftlab {

// Everything a protocol automaton needs that is fixed for one run.
struct ReplicaContext {
    NodeId id = 0;
    QuorumConfig quorum;
    AuthKind auth_kind = AuthKind::mac;
    std::shared_ptr<const Keyring> keyring;
    std::shared_ptr<const ThresholdGroup> group;
    KeyMaterial key;
    Tick mean_delay = 1;
    uint32_t relay_timeout_factor = 20;  // backup patience, in mean delays
    uint32_t batch_size = 1;
    uint32_t pipeline_window = 4;
    bool dual_sign = false;
    // Maps a view/round to its leader; defaults to view mod n.
    std::function<NodeId(uint64_t)> leader_schedule;

    NodeId leader_of(uint64_t view) const {
        return leader_schedule ? leader_schedule(view) : primary_of(view, quorum.n);
    }
};

// Deterministic state machine shared by all protocols: executing a block
// folds its digest into a rolling state digest, and each transaction's
// result is derived from the pre-state and the transaction. Divergent
// histories therefore produce divergent results and chains.
class ExecEngine {
  public:
    struct ExecutedTxn {
        NodeId client = 0;
        Digest request_digest;
        Bytes result;
    };
    struct Executed {
        Block block;
        std::vector<ExecutedTxn> replies;
    };

    uint64_t next_number() const { return next_number_; }
    uint64_t last_executed() const { return next_number_ - 1; }
    const Digest& tip_digest() const { return tip_digest_; }
    const Digest& state() const { return state_; }

    Executed execute(const std::vector<Transaction>& batch, uint64_t view, NodeId proposer,
                     Bytes certificate = {});

    // Undo every execution with block number > keep_number (reverse order).
    void undo_to(uint64_t keep_number);

    // Cached reply for duplicate client requests.
    const ExecutedTxn* cached_reply(NodeId client, uint64_t nonce) const;

    ExecEngine();

  private:
    struct UndoRecord {
        Digest state;
        Digest tip;
        std::vector<std::pair<NodeId, uint64_t>> reply_keys;
    };

    Digest state_;
    Digest tip_digest_;
    uint64_t next_number_ = 1;
    std::vector<UndoRecord> undo_;                                   // one per executed block
    std::map<std::pair<NodeId, uint64_t>, ExecutedTxn> reply_cache_;  // (client, nonce)
};

// Pending client requests, deduplicated by digest. Entries survive view
// changes: proposing marks a request in flight, only execution retires it.
class RequestPool {
  public:
    bool add(const Transaction& txn);
    std::vector<Transaction> next_batch(size_t max);
    void completed(const Digest& d);
    void hold(const Digest& d);        // someone else proposed it; stop offering it
    void reopen(const Transaction& txn);  // rolled back: make it pending again
    void reset_in_flight();
    bool has_pending() const;
    size_t pending() const;

  private:
    std::map<Digest, Transaction> all_;
    std::deque<Digest> fifo_;
    std::set<Digest> in_flight_;
    std::set<Digest> done_;
};

class ReplicaBase : public Automaton {
  public:
    explicit ReplicaBase(ReplicaContext ctx) : ctx_(std::move(ctx)) {}

  protected:
    Bytes signed_frame(MsgType type, Bytes body) const {
        return make_frame(type, std::move(body), ctx_.key, ctx_.auth_kind);
    }

    // Parse + transport-authenticity check. Protocol-level checks (role,
    // client signature, sequence reuse) stay with the caller.
    std::optional<Frame> checked_frame(const Bytes& payload) const {
        auto f = parse_frame(payload);
        if (!f || !frame_auth_ok(*f, *ctx_.keyring)) return std::nullopt;
        return f;
    }

    bool client_auth_ok(const Transaction& txn) const {
        if (txn.payload.empty()) return false;
        if (!ctx_.keyring->verify(txn.signing_bytes(), txn.client_auth)) return false;
        return txn.client_auth.signer == txn.client_id;
    }

    void reply_to(Outputs& out, NodeId client, const Digest& request_digest, uint64_t seq,
                  Bytes result) const {
        ClientReplyMsg m{request_digest, seq, std::move(result), ctx_.id};
        out.push_back(SendOut{client, signed_frame(MsgType::client_reply, m.encode())});
    }

    ReplicaContext ctx_;
    ExecEngine exec_;
    RequestPool pool_;
};

}  // namespace bftlab
