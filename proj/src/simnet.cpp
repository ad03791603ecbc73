// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftlab/simnet.hpp"

#include "bftlab/quorum.hpp"

namespace bftlab {

Tick NetworkModel::mean_delay() const {
    if (const auto* c = std::get_if<ConstantDelay>(&delay)) return c->value;
    const auto& u = std::get<UniformDelay>(delay);
    return (u.lo + u.hi) / 2;
}

bool NetworkModel::connected(NodeId a, NodeId b) const {
    if (partitions.empty()) return true;
    int group_a = -1, group_b = -1;
    for (size_t i = 0; i < partitions.size(); ++i) {
        if (partitions[i].count(a)) group_a = static_cast<int>(i);
        if (partitions[i].count(b)) group_b = static_cast<int>(i);
    }
    return group_a == group_b;
}

SimNet::SimNet(NetworkModel model, AdversarySpec adversary, uint32_t node_count)
    : model_(std::move(model)), adversary_(std::move(adversary)), node_count_(node_count) {}

std::vector<Envelope> SimNet::adversary_transform(const Envelope& env) const {
    auto it = adversary_.byzantine.find(env.src);
    if (it == adversary_.byzantine.end()) return {env};
    const AdversaryEntry& entry = it->second;
    switch (entry.behavior) {
        case ByzantineBehavior::crash:
        case ByzantineBehavior::mute:
            if (env.send_time >= entry.from_tick) return {};
            return {env};
        case ByzantineBehavior::delay: {
            Envelope delayed = env;
            delayed.deliver_time += entry.extra_delay;
            return {delayed};
        }
        case ByzantineBehavior::equivocate:
        case ByzantineBehavior::custom:
            if (entry.transform) return entry.transform(env);
            return {env};
    }
    return {env};
}

Tick SimNet::draw_delay(Rng& rng) {
    if (const auto* c = std::get_if<ConstantDelay>(&model_.delay)) return c->value;
    const auto& u = std::get<UniformDelay>(model_.delay);
    return rng.range(u.lo, u.hi);
}

void SimNet::enqueue_envelope(Envelope env, Rng& rng) {
    if (!model_.connected(env.src, env.dst)) {
        if (hooks_.on_drop) hooks_.on_drop(env, "partition");
        return;
    }
    if (rng.chance(model_.loss_prob)) {
        if (hooks_.on_drop) hooks_.on_drop(env, "loss");
        return;
    }
    bool duplicate = rng.chance(model_.dup_prob);
    env.deliver_time += draw_delay(rng);
    if (hooks_.on_enqueue) hooks_.on_enqueue(env);
    queue_.emplace(EventKey{env.deliver_time, next_event_seq_++}, DeliveryEvent{env});
    if (duplicate) {
        Envelope copy = env;
        copy.deliver_time = env.send_time + draw_delay(rng);
        if (hooks_.on_enqueue) hooks_.on_enqueue(copy);
        queue_.emplace(EventKey{copy.deliver_time, next_event_seq_++}, DeliveryEvent{copy});
    }
}

void SimNet::schedule_send(Envelope env, Rng& rng) {
    if (env.src >= node_count_ || env.dst >= node_count_)
        throw InvalidConfig("schedule_send: unknown node id");
    env.send_time = now_;
    env.deliver_time = now_;
    for (Envelope& out : adversary_transform(env)) enqueue_envelope(std::move(out), rng);
}

void SimNet::set_timer(NodeId node, uint64_t timer_id, Tick duration) {
    cancel_timer(node, timer_id);
    EventKey key{now_ + duration, next_event_seq_++};
    queue_.emplace(key, TimerEvent{node, timer_id});
    active_timers_[{node, timer_id}] = key;
}

void SimNet::cancel_timer(NodeId node, uint64_t timer_id) {
    auto it = active_timers_.find({node, timer_id});
    if (it == active_timers_.end()) return;
    queue_.erase(it->second);
    active_timers_.erase(it);
}

StepResult SimNet::step() {
    while (!queue_.empty()) {
        auto it = queue_.begin();
        Tick time = it->first.first;
        Event event = std::move(it->second);
        queue_.erase(it);
        now_ = time;
        if (const auto* d = std::get_if<DeliveryEvent>(&event)) {
            if (adversary_.crashed(d->env.dst, now_)) continue;  // dead nodes hear nothing
            return Delivery{d->env.dst, d->env.src, d->env.payload, time};
        }
        const auto& t = std::get<TimerEvent>(event);
        active_timers_.erase({t.node, t.timer_id});
        if (adversary_.crashed(t.node, now_)) continue;
        return TimerFired{t.node, t.timer_id, time};
    }
    return Idle{};
}

}  // namespace bftlab
