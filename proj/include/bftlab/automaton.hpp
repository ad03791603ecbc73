// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <variant>
#include <vector>

#include "bftlab/bytes.hpp"
#include "bftlab/ledger.hpp"

namespace bftlab {

// The uniform protocol-state-machine contract. Automata never read clocks
// or random sources: every input is a delivery, a timer fire, or a client
// request handed in by the event loop, and step() is deterministic in
// (state, input).

struct Deliver {
    Bytes payload;
    NodeId src = 0;
};
struct TimerFire {
    uint64_t timer_id = 0;
};
struct ClientRequest {
    Transaction txn;
};
using AutomatonInput = std::variant<Deliver, TimerFire, ClientRequest>;

struct SendOut {
    NodeId dst = 0;
    Bytes payload;
};
struct BroadcastOut {  // to every replica except the sender
    Bytes payload;
};
struct CommitOut {
    uint64_t seq = 0;
    Block block;
};
struct ReplyOut {
    NodeId client = 0;
    Bytes result;
};
struct SetTimerOut {
    uint64_t id = 0;
    Tick duration = 0;
};
struct CancelTimerOut {
    uint64_t id = 0;
};
struct ViewChangeOut {
    uint64_t new_view = 0;
};
struct RollbackOut {  // discard committed blocks with seq > keep_seq
    uint64_t keep_seq = 0;
};
using AutomatonOutput = std::variant<SendOut, BroadcastOut, CommitOut, ReplyOut, SetTimerOut,
                                     CancelTimerOut, ViewChangeOut, RollbackOut>;

using Outputs = std::vector<AutomatonOutput>;

struct StateSummary {
    uint64_t view = 0;
    uint64_t last_committed_seq = 0;  // 0 = nothing committed yet
    std::vector<std::pair<uint64_t, Digest>> log_digests;
};

class Automaton {
  public:
    virtual ~Automaton() = default;
    virtual Outputs step(const AutomatonInput& input) = 0;
    virtual StateSummary inspect() const = 0;
};

}  // namespace bftlab
