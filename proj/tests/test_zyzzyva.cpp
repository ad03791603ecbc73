// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bftlab/zyzzyva.hpp"
#include "test_support.hpp"

using namespace bftlab;
using namespace bftlab::testing;

namespace {

struct ZyzzyvaFixture {
    Cluster cluster{4, 1, 2};
    ZyzzyvaReplica primary{cluster.context(0)};
    ZyzzyvaReplica backup{cluster.context(1)};

    Bytes ordered(const Transaction& txn, uint64_t seq, const Digest& prev_history) {
        OrderedRequestMsg m;
        m.view = 0;
        m.seq = seq;
        m.batch = {txn};
        m.digest = batch_digest(m.batch);
        m.history = history_extend(prev_history, m.digest);
        return cluster.frame_from(0, MsgType::ordered_request, m.encode());
    }
};

}  // namespace

TEST_CASE("the primary executes speculatively and replies while proposing") {
    ZyzzyvaFixture fx;
    Transaction txn = fx.cluster.request(0, 0);
    Outputs out = fx.primary.step(AutomatonInput{ClientRequest{txn}});
    CHECK(broadcasts_of(out, MsgType::ordered_request).size() == 1);
    CHECK(commits_of(out).size() == 1);  // speculative ledger append
    auto responses = sends_of(out, MsgType::spec_response);
    REQUIRE(responses.size() == 1);
    CHECK(responses[0].dst == txn.client_id);
}

TEST_CASE("a backup executes in order and answers the client directly") {
    ZyzzyvaFixture fx;
    Digest genesis_history = fx.backup.history();
    Transaction txn = fx.cluster.request(0, 0);
    Outputs out = deliver(fx.backup, 0, fx.ordered(txn, 1, genesis_history));
    CHECK(commits_of(out).size() == 1);
    auto responses = sends_of(out, MsgType::spec_response);
    REQUIRE(responses.size() == 1);
    auto m = SpecResponseMsg::decode(parse_frame(responses[0].payload)->body);
    CHECK(m.history == fx.backup.history());
    CHECK(m.seq == 1);
}

TEST_CASE("out-of-order proposals are buffered without execution") {
    ZyzzyvaFixture fx;
    Digest h0 = fx.backup.history();
    Transaction t1 = fx.cluster.request(0, 0);
    Transaction t2 = fx.cluster.request(0, 1);
    Digest h1 = history_extend(h0, batch_digest({t1}));

    Outputs out2 = deliver(fx.backup, 0, fx.ordered(t2, 2, h1));
    CHECK(commits_of(out2).empty());  // hole at seq 1: buffered

    Outputs out1 = deliver(fx.backup, 0, fx.ordered(t1, 1, h0));
    auto commits = commits_of(out1);
    REQUIRE(commits.size() == 2);  // both drain in order
    CHECK(commits[0].seq == 1);
    CHECK(commits[1].seq == 2);
}

TEST_CASE("history chaining: history(k) extends history(k-1) with digest(k)") {
    ZyzzyvaFixture fx;
    Digest h0 = fx.backup.history();
    Transaction t1 = fx.cluster.request(0, 0);
    deliver(fx.backup, 0, fx.ordered(t1, 1, h0));
    CHECK(fx.backup.history() == history_extend(h0, batch_digest({t1})));

    // A proposal whose history does not chain is refused.
    Transaction t2 = fx.cluster.request(0, 1);
    OrderedRequestMsg wrong;
    wrong.view = 0;
    wrong.seq = 2;
    wrong.batch = {t2};
    wrong.digest = batch_digest(wrong.batch);
    wrong.history = sha3_256(to_bytes("junk"));
    Outputs out = deliver(fx.backup, 0,
                          fx.cluster.frame_from(0, MsgType::ordered_request, wrong.encode()));
    CHECK(commits_of(out).empty());
}

TEST_CASE("failure-free run: single linear phase and 3f+1 client matches") {
    auto cfg = base_scenario(Protocol::zyzzyva, 4, 1, 1, 5, 3);
    cfg.network.delay = ConstantDelay{5};
    std::vector<TraceEvent> trace;
    RunReport r = run_scenario(cfg, &trace);
    REQUIRE(r.metrics.completed_requests == 5);
    CHECK(r.safety_ok);

    // Per request: 1 client send + (n-1) ordered requests + n responses.
    uint64_t client_sends = 0, ordered = 0, responses = 0;
    for (const auto& ev : trace) {
        if (ev.kind != TraceEvent::Kind::send) continue;
        if (ev.mtype == MsgType::client_request && ev.src >= 4) ++client_sends;
        if (ev.mtype == MsgType::ordered_request) ++ordered;
        if (ev.mtype == MsgType::spec_response) ++responses;
    }
    CHECK(client_sends == 5);       // 1 per request
    CHECK(ordered == 5 * 3);        // n-1 per request
    CHECK(responses == 5 * 4);      // n per request
    CHECK(r.metrics.view_changes == 0);
}

TEST_CASE("one crashed replica: every request completes through the slow path") {
    auto cfg = base_scenario(Protocol::zyzzyva, 4, 1, 1, 5, 3);
    cfg.network.delay = ConstantDelay{5};
    cfg.adversary[3] = AdversaryConfig{ByzantineBehavior::crash, 0, 0, "", 0};
    std::vector<TraceEvent> trace;
    RunReport r = run_scenario(cfg, &trace);
    CHECK(r.metrics.completed_requests == 5);
    uint64_t certs = 0, acks = 0;
    for (const auto& ev : trace) {
        if (ev.kind != TraceEvent::Kind::send) continue;
        if (ev.mtype == MsgType::commit_cert) ++certs;
        if (ev.mtype == MsgType::commit_ack) ++acks;
    }
    CHECK(certs >= 5);  // one certificate broadcast per request at least
    CHECK(acks >= 5 * 3);
}

TEST_CASE("equivocating primary splits the speculative responses") {
    auto cfg = base_scenario(Protocol::zyzzyva, 4, 1, 2, 3, 5);
    cfg.network.delay = ConstantDelay{5};
    cfg.adversary[0] = AdversaryConfig{ByzantineBehavior::custom, 0, 0, "equivocate_last", 0};
    cfg.adversary[4] = AdversaryConfig{ByzantineBehavior::custom, 0, 0, "withhold_cert_last", 0};
    RunReport r = run_scenario(cfg);
    // The harness safety checker is the detector for this module.
    CHECK(!r.safety_ok);
    REQUIRE(r.violation.has_value());
    CHECK(r.violation->digest_a != r.violation->digest_b);
}
