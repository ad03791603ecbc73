// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <variant>
#include <vector>

#include "bftlab/bytes.hpp"
#include "bftlab/rng.hpp"

namespace bftlab {

struct Envelope {
    NodeId src = 0;
    NodeId dst = 0;
    Bytes payload;
    Tick send_time = 0;
    Tick deliver_time = 0;  // assigned on scheduling
};

struct ConstantDelay {
    Tick value = 1;
};
struct UniformDelay {
    Tick lo = 1;
    Tick hi = 1;
};
using DelayModel = std::variant<ConstantDelay, UniformDelay>;

struct NetworkModel {
    DelayModel delay = ConstantDelay{1};
    double loss_prob = 0.0;
    double dup_prob = 0.0;
    // Nodes in the same set may communicate; with no sets, everyone may.
    // Nodes listed in no set form one implicit group of their own.
    std::vector<std::set<NodeId>> partitions;

    Tick mean_delay() const;
    bool connected(NodeId a, NodeId b) const;
};

enum class ByzantineBehavior { crash, mute, equivocate, delay, custom };

// Per-envelope rewrite installed by the harness for equivocate / custom
// behaviors (they need wire-format knowledge the network does not have).
using TransformFn = std::function<std::vector<Envelope>(const Envelope&)>;

struct AdversaryEntry {
    ByzantineBehavior behavior = ByzantineBehavior::mute;
    Tick from_tick = 0;    // crash / mute activate at this tick
    Tick extra_delay = 0;  // delay behavior
    std::string script;    // custom behavior: registry name
    TransformFn transform; // filled in by the harness when needed
};

struct AdversarySpec {
    std::map<NodeId, AdversaryEntry> byzantine;

    bool is_byzantine(NodeId id) const { return byzantine.count(id) != 0; }
    bool crashed(NodeId id, Tick now) const {
        auto it = byzantine.find(id);
        return it != byzantine.end() && it->second.behavior == ByzantineBehavior::crash &&
               now >= it->second.from_tick;
    }
};

struct Delivery {
    NodeId node = 0;
    NodeId src = 0;
    Bytes payload;
    Tick time = 0;
};
struct TimerFired {
    NodeId node = 0;
    uint64_t timer_id = 0;
    Tick time = 0;
};
struct Idle {};
using StepResult = std::variant<Delivery, TimerFired, Idle>;

// Single-queue discrete-event network. Deliveries and timer fires share one
// clock; ties break by insertion order. Loss, duplication, partitions and
// the adversary all act when a send is scheduled, so a run is a pure
// function of (inputs, seed).
class SimNet {
  public:
    struct Hooks {
        std::function<void(const Envelope&)> on_enqueue;
        std::function<void(const Envelope&, const char* reason)> on_drop;
    };

    SimNet(NetworkModel model, AdversarySpec adversary, uint32_t node_count);

    Tick now() const { return now_; }
    const AdversarySpec& adversary() const { return adversary_; }
    void set_hooks(Hooks hooks) { hooks_ = std::move(hooks); }

    // Applies the adversary transform, then partitions, loss, delay and
    // duplication draws. Throws InvalidConfig on an unknown node.
    void schedule_send(Envelope env, Rng& rng);

    void set_timer(NodeId node, uint64_t timer_id, Tick duration);
    void cancel_timer(NodeId node, uint64_t timer_id);

    StepResult step();
    bool empty() const { return queue_.empty(); }

    // Spec-level transform semantics, also used directly by tests.
    std::vector<Envelope> adversary_transform(const Envelope& env) const;

  private:
    struct DeliveryEvent {
        Envelope env;
    };
    struct TimerEvent {
        NodeId node;
        uint64_t timer_id;
    };
    using Event = std::variant<DeliveryEvent, TimerEvent>;
    using EventKey = std::pair<Tick, uint64_t>;  // (time, insertion sequence)

    void enqueue_envelope(Envelope env, Rng& rng);
    Tick draw_delay(Rng& rng);

    NetworkModel model_;
    AdversarySpec adversary_;
    uint32_t node_count_;
    Tick now_ = 0;
    uint64_t next_event_seq_ = 0;
    std::map<EventKey, Event> queue_;
    std::map<std::pair<NodeId, uint64_t>, EventKey> active_timers_;
    Hooks hooks_;
};

}  // namespace bftlab
