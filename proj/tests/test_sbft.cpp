// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bftlab/sbft.hpp"
#include "test_support.hpp"

using namespace bftlab;
using namespace bftlab::testing;

namespace {

struct SbftFixture {
    Cluster cluster{6, 1, 2, /*c=*/1};

    Bytes preprepare(const Transaction& txn, uint64_t seq = 1) {
        PrePrepareMsg m;
        m.view = 0;
        m.seq = seq;
        m.batch = {txn};
        m.digest = batch_digest(m.batch);
        return cluster.frame_from(0, MsgType::preprepare, m.encode());
    }
};

}  // namespace

TEST_CASE("roles: collector and executor are the next two replicas") {
    SbftFixture fx;
    SbftReplica r(fx.cluster.context(3));
    CHECK(r.collector() == 1);
    CHECK(r.executor() == 2);
    CHECK(r.fast_threshold() == 3 * 1 + 1 + 1);  // 3f+c+1
}

TEST_CASE("a valid proposal produces exactly one share to the collector") {
    SbftFixture fx;
    SbftReplica backup(fx.cluster.context(3));
    Transaction txn = fx.cluster.request(0, 0);
    Outputs out = deliver(backup, 0, fx.preprepare(txn));
    auto shares = sends_of(out, MsgType::sign_share);
    REQUIRE(shares.size() == 1);
    CHECK(shares[0].dst == 1);  // the collector
    CHECK(broadcasts_of(out, MsgType::sign_share).empty());  // linear, not quadratic

    // A duplicate proposal does not produce a second share.
    Outputs again = deliver(backup, 0, fx.preprepare(txn));
    CHECK(sends_of(again, MsgType::sign_share).empty());
}

TEST_CASE("proposals from a non-primary are dropped") {
    SbftFixture fx;
    SbftReplica backup(fx.cluster.context(3));
    Transaction txn = fx.cluster.request(0, 0);
    PrePrepareMsg m;
    m.view = 0;
    m.seq = 1;
    m.batch = {txn};
    m.digest = batch_digest(m.batch);
    Bytes from_wrong = fx.cluster.frame_from(2, MsgType::preprepare, m.encode());
    Outputs out = deliver(backup, 2, from_wrong);
    CHECK(sends_of(out, MsgType::sign_share).empty());
}

TEST_CASE("collector combines 3f+c+1 shares into a fast-path certificate") {
    SbftFixture fx;
    SbftReplica collector(fx.cluster.context(1));
    Transaction txn = fx.cluster.request(0, 0);
    Digest digest = batch_digest({txn});

    deliver(collector, 0, fx.preprepare(txn));  // collector's own share is internal

    Writer w;
    w.str("sbft.order");
    w.u64(0);
    w.u64(1);
    put_digest(w, digest);
    Bytes order_msg = w.take();

    Outputs last;
    int sent = 0;
    for (NodeId r : {0, 2, 3, 4, 5}) {
        ThresholdShare share = fx.cluster.group->share(*fx.cluster.ring->find(r), order_msg);
        SignShareMsg m{0, 1, digest, share};
        last = deliver(collector, r, fx.cluster.frame_from(r, MsgType::sign_share, m.encode()));
        ++sent;
        if (sent < 4) CHECK(broadcasts_of(last, MsgType::full_cert).empty());
    }
    // Shares: collector + 5 others = 6 >= 5 = 3f+c+1; the certificate went
    // out when the count first crossed the threshold.
    SbftReplica fresh(fx.cluster.context(1));
    deliver(fresh, 0, fx.preprepare(txn));
    Outputs cert_out;
    int count = 1;  // own
    for (NodeId r : {0, 2, 3, 4}) {
        ThresholdShare share = fx.cluster.group->share(*fx.cluster.ring->find(r), order_msg);
        SignShareMsg m{0, 1, digest, share};
        cert_out = deliver(fresh, r, fx.cluster.frame_from(r, MsgType::sign_share, m.encode()));
        ++count;
    }
    CHECK(count == 5);
    auto certs = broadcasts_of(cert_out, MsgType::full_cert);
    REQUIRE(certs.size() == 1);
    auto cert = FullCertMsg::decode(parse_frame(certs[0])->body);
    CHECK(cert.sig.signers.size() >= 5);
}

TEST_CASE("execution flows one share to the executor, who aggregates f+1") {
    auto cfg = base_scenario(Protocol::sbft, 6, 1, 1, 4, 17);
    cfg.quorum.c = 1;
    std::vector<TraceEvent> trace;
    RunReport r = run_scenario(cfg, &trace);
    REQUIRE(r.metrics.completed_requests == 4);

    // Per decision: exec shares go point-to-point to the executor (replica
    // 2), and one aggregated certificate returns.
    uint64_t exec_shares = 0, exec_certs = 0;
    for (const auto& ev : trace) {
        if (ev.kind != TraceEvent::Kind::send) continue;
        if (ev.mtype == MsgType::exec_share) {
            ++exec_shares;
            CHECK(ev.dst == 2);
        }
        if (ev.mtype == MsgType::exec_cert) ++exec_certs;
    }
    CHECK(exec_shares == 4 * 5);            // n-1 per decision
    CHECK(exec_certs == 4 * (5 + 1));       // broadcast + client copy
    CHECK(r.metrics.sends_by_type.count("slow_cert") == 0);  // pure fast path
}

TEST_CASE("fast path holds with one crash and falls back at two") {
    for (uint32_t crashes : {0u, 1u, 2u}) {
        auto cfg = base_scenario(Protocol::sbft, 6, 1, 1, 3, 19);
        cfg.quorum.c = 1;
        for (uint32_t i = 0; i < crashes; ++i)
            cfg.adversary[3 + i] = AdversaryConfig{ByzantineBehavior::crash, 0, 0, "", 0};
        RunReport r = run_scenario(cfg);
        CHECK(r.metrics.completed_requests == 3);
        bool slow = r.metrics.sends_by_type.count("slow_cert") != 0;
        CHECK(slow == (crashes >= 2));
    }
}

TEST_CASE("linearity: failure-free per-decision messages stay below 6n") {
    for (uint32_t n : {4u, 7u, 10u}) {
        auto cfg = base_scenario(Protocol::sbft, n, (n - 1) / 3, 1, 3, 23);
        RunReport r = run_scenario(cfg);
        REQUIRE(r.metrics.completed_requests == 3);
        for (const auto& [seq, counts] : r.metrics.per_decision) {
            uint64_t total = 0;
            for (const auto& [type, count] : counts) total += count;
            CHECK(total <= 6 * n);
        }
    }
}
