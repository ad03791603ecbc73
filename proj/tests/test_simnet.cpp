// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bftlab/quorum.hpp"
#include "bftlab/simnet.hpp"

using namespace bftlab;

namespace {

Envelope env(NodeId src, NodeId dst, const char* payload) {
    Envelope e;
    e.src = src;
    e.dst = dst;
    e.payload = to_bytes(payload);
    return e;
}

}  // namespace

TEST_CASE("certain loss delivers nothing") {
    NetworkModel model;
    model.loss_prob = 1.0;
    SimNet net(model, {}, 4);
    Rng rng(1);
    net.schedule_send(env(0, 1, "x"), rng);
    net.schedule_send(env(1, 2, "y"), rng);
    CHECK(std::holds_alternative<Idle>(net.step()));
}

TEST_CASE("constant delay adds up") {
    NetworkModel model;
    model.delay = ConstantDelay{5};
    SimNet net(model, {}, 4);
    Rng rng(1);

    net.set_timer(0, 7, 10);  // move the clock to t=10 first
    auto timer = net.step();
    REQUIRE(std::holds_alternative<TimerFired>(timer));
    CHECK(net.now() == 10);

    net.schedule_send(env(0, 1, "x"), rng);
    auto result = net.step();
    auto* d = std::get_if<Delivery>(&result);
    REQUIRE(d);
    CHECK(d->time == 15);  // send at t=10, constant 5
    CHECK(d->node == 1);
    CHECK(d->src == 0);
}

TEST_CASE("same seed reproduces the same event order") {
    auto run = [](uint64_t seed) {
        NetworkModel model;
        model.delay = UniformDelay{1, 9};
        model.loss_prob = 0.2;
        model.dup_prob = 0.2;
        SimNet net(model, {}, 4);
        Rng rng(seed);
        for (int i = 0; i < 50; ++i) net.schedule_send(env(i % 4, (i + 1) % 4, "m"), rng);
        std::vector<std::tuple<Tick, NodeId, NodeId>> trace;
        while (true) {
            auto r = net.step();
            auto* d = std::get_if<Delivery>(&r);
            if (!d) break;
            trace.emplace_back(d->time, d->node, d->src);
        }
        return trace;
    };
    CHECK(run(7) == run(7));
    CHECK(run(7) != run(8));
}

TEST_CASE("ties break by insertion order") {
    NetworkModel model;
    model.delay = ConstantDelay{7};
    SimNet net(model, {}, 4);
    Rng rng(1);
    net.schedule_send(env(0, 1, "A"), rng);
    net.schedule_send(env(0, 2, "B"), rng);
    auto first = net.step();
    auto second = net.step();
    CHECK(std::get<Delivery>(first).node == 1);
    CHECK(std::get<Delivery>(second).node == 2);
    CHECK(std::get<Delivery>(second).time == 7);
}

TEST_CASE("deliveries and timers share one ordered clock") {
    NetworkModel model;
    model.delay = ConstantDelay{6};
    SimNet net(model, {}, 4);
    Rng rng(1);
    net.set_timer(2, 1, 7);                // fires at t=7
    net.schedule_send(env(0, 1, "m"), rng); // delivers at t=6
    auto first = net.step();
    auto second = net.step();
    CHECK(std::holds_alternative<Delivery>(first));
    auto* t = std::get_if<TimerFired>(&second);
    REQUIRE(t);
    CHECK(t->time == 7);
    CHECK(t->timer_id == 1);
}

TEST_CASE("cancelled timers never fire; reset replaces the deadline") {
    NetworkModel model;
    SimNet net(model, {}, 2);
    net.set_timer(0, 5, 10);
    net.cancel_timer(0, 5);
    CHECK(std::holds_alternative<Idle>(net.step()));

    net.set_timer(0, 6, 10);
    net.set_timer(0, 6, 20);  // replaces, does not duplicate
    auto r = net.step();
    REQUIRE(std::holds_alternative<TimerFired>(r));
    CHECK(std::get<TimerFired>(r).time == 20);
    CHECK(std::holds_alternative<Idle>(net.step()));
}

TEST_CASE("partitions drop crossing envelopes") {
    NetworkModel model;
    model.partitions = {{0, 1}, {2, 3}};
    SimNet net(model, {}, 5);
    Rng rng(1);
    net.schedule_send(env(0, 1, "ok"), rng);
    net.schedule_send(env(0, 2, "cross"), rng);
    net.schedule_send(env(4, 0, "isolated"), rng);  // node 4 unlisted
    auto r = net.step();
    REQUIRE(std::holds_alternative<Delivery>(r));
    CHECK(std::get<Delivery>(r).node == 1);
    CHECK(std::holds_alternative<Idle>(net.step()));
}

TEST_CASE("unknown nodes are rejected") {
    NetworkModel model;
    SimNet net(model, {}, 2);
    Rng rng(1);
    CHECK_THROWS_AS(net.schedule_send(env(0, 7, "x"), rng), InvalidConfig);
}

TEST_CASE("mute silences a byzantine source") {
    AdversarySpec spec;
    spec.byzantine[0] = AdversaryEntry{ByzantineBehavior::mute, 0, 0, "", nullptr};
    NetworkModel model;
    SimNet net(model, spec, 4);
    Rng rng(1);
    net.schedule_send(env(0, 1, "preprepare"), rng);
    CHECK(std::holds_alternative<Idle>(net.step()));
    // Non-byzantine sources pass through untouched.
    net.schedule_send(env(1, 2, "prepare"), rng);
    CHECK(std::holds_alternative<Delivery>(net.step()));
}

TEST_CASE("crash drops messages from the crash tick onward and kills delivery") {
    AdversarySpec spec;
    spec.byzantine[1] = AdversaryEntry{ByzantineBehavior::crash, 10, 0, "", nullptr};
    NetworkModel model;
    model.delay = ConstantDelay{2};
    SimNet net(model, spec, 4);
    Rng rng(1);

    net.schedule_send(env(1, 2, "before"), rng);  // sent at t=0 < 10
    auto r = net.step();
    CHECK(std::holds_alternative<Delivery>(r));

    net.set_timer(0, 1, 20);  // relative to now (t=2): fires at 22, past the crash tick
    net.step();
    CHECK(net.now() == 22);

    net.schedule_send(env(1, 2, "after"), rng);
    CHECK(std::holds_alternative<Idle>(net.step()));  // muted after crash

    net.schedule_send(env(2, 1, "to-crashed"), rng);
    CHECK(std::holds_alternative<Idle>(net.step()));  // dead nodes hear nothing
}

TEST_CASE("delay behavior postpones delivery by the configured extra") {
    AdversarySpec spec;
    spec.byzantine[0] = AdversaryEntry{ByzantineBehavior::delay, 0, 13, "", nullptr};
    NetworkModel model;
    model.delay = ConstantDelay{2};
    SimNet net(model, spec, 4);
    Rng rng(1);
    net.schedule_send(env(0, 1, "slow"), rng);
    auto r = net.step();
    auto* d = std::get_if<Delivery>(&r);
    REQUIRE(d);
    CHECK(d->time == 15);  // 13 extra + 2 network
}

TEST_CASE("custom transform rewrites per destination") {
    AdversarySpec spec;
    AdversaryEntry entry;
    entry.behavior = ByzantineBehavior::custom;
    entry.transform = [](const Envelope& e) {
        std::vector<Envelope> out;
        Envelope copy = e;
        if (e.dst >= 2) copy.payload = to_bytes("alternate");
        out.push_back(copy);
        return out;
    };
    spec.byzantine[0] = entry;
    NetworkModel model;
    SimNet net(model, spec, 4);
    Rng rng(1);
    net.schedule_send(env(0, 1, "original"), rng);
    net.schedule_send(env(0, 3, "original"), rng);
    auto a = std::get<Delivery>(net.step());
    auto b = std::get<Delivery>(net.step());
    CHECK(to_string(a.payload) == "original");
    CHECK(to_string(b.payload) == "alternate");
}

TEST_CASE("duplication enqueues an independent copy") {
    NetworkModel model;
    model.dup_prob = 1.0;
    model.delay = UniformDelay{1, 9};
    SimNet net(model, {}, 2);
    Rng rng(5);
    net.schedule_send(env(0, 1, "m"), rng);
    int deliveries = 0;
    while (std::holds_alternative<Delivery>(net.step())) ++deliveries;
    CHECK(deliveries == 2);
}

TEST_CASE("causality: nothing arrives before its send time") {
    NetworkModel model;
    model.delay = UniformDelay{0, 4};
    SimNet net(model, {}, 4);
    Rng rng(9);
    for (int i = 0; i < 30; ++i) net.schedule_send(env(0, 1, "m"), rng);
    Tick send_time = 0;  // all sent at t=0
    while (true) {
        auto r = net.step();
        auto* d = std::get_if<Delivery>(&r);
        if (!d) break;
        CHECK(d->time >= send_time);
    }
}
