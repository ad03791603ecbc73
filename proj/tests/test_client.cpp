// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bftlab/client.hpp"
#include "test_support.hpp"

using namespace bftlab;
using namespace bftlab::testing;

namespace {

struct ClientFixture {
    Cluster cluster{4, 1, 1};
    ClientConfig config;

    ClientFixture() {
        config.id = 4;
        config.request_count = 3;
        config.replicas = {0, 1, 2, 3};
        config.initial_primary = 0;
        config.match_quorum = 2;  // f+1
        config.initial_timeout = 50;
        config.keyring = cluster.ring;
        config.key = *cluster.ring->find(4);
        config.group = cluster.group;
    }

    static Outputs kick(ClientAutomaton& c) {
        return c.step(AutomatonInput{TimerFire{ClientAutomaton::kKickTimer}});
    }
    static Outputs fire_retransmit(ClientAutomaton& c) {
        return c.step(AutomatonInput{TimerFire{ClientAutomaton::kRetransmitTimer}});
    }

    Bytes reply_from(NodeId replica, const Transaction& txn, const Bytes& result) {
        ClientReplyMsg m{txn.digest(), 1, result, replica};
        return cluster.frame_from(replica, MsgType::client_reply, m.encode());
    }

    // The transaction the client just submitted, recovered from its send.
    Transaction submitted(const Outputs& out) {
        auto sends = sends_of(out, MsgType::client_request);
        REQUIRE(!sends.empty());
        auto frame = parse_frame(sends[0].payload);
        return ClientRequestMsg::decode(frame->body).txn;
    }
};

}  // namespace

TEST_CASE("submit sends to the primary and starts the timer") {
    ClientFixture fx;
    ClientAutomaton client(fx.config);
    Outputs out = fx.kick(client);
    auto sends = sends_of(out, MsgType::client_request);
    REQUIRE(sends.size() == 1);
    CHECK(sends[0].dst == 0);
    CHECK(count_timers(out) == 1);
}

TEST_CASE("a second submit while pending is rejected") {
    ClientFixture fx;
    ClientAutomaton client(fx.config);
    fx.kick(client);
    CHECK_THROWS_AS(fx.kick(client), AlreadyPending);
}

TEST_CASE("dual-sign mode carries both authenticator kinds") {
    ClientFixture fx;
    fx.config.dual_sign = true;
    ClientAutomaton client(fx.config);
    Outputs out = fx.kick(client);
    auto sends = sends_of(out, MsgType::client_request);
    REQUIRE(sends.size() == 1);
    auto frame = parse_frame(sends[0].payload);
    REQUIRE(frame.has_value());
    CHECK(frame->auth.kind == AuthKind::mac);  // frame MAC
    auto m = ClientRequestMsg::decode(frame->body);
    CHECK(m.txn.client_auth.kind == AuthKind::signature);  // transaction signature
    CHECK(frame_auth_ok(*frame, *fx.cluster.ring));
    CHECK(fx.cluster.ring->verify(m.txn.signing_bytes(), m.txn.client_auth));
}

TEST_CASE("completion needs the match quorum from distinct replicas") {
    ClientFixture fx;
    ClientAutomaton client(fx.config);
    Transaction txn = fx.submitted(fx.kick(client));
    Bytes result = to_bytes("r");

    CHECK(client.step(AutomatonInput{Deliver{fx.reply_from(1, txn, result), 1}}).empty());
    // The same replica again does not count twice.
    CHECK(client.step(AutomatonInput{Deliver{fx.reply_from(1, txn, result), 1}}).empty());
    CHECK(client.completed() == 0);

    Outputs out = client.step(AutomatonInput{Deliver{fx.reply_from(2, txn, result), 2}});
    CHECK(client.completed() == 1);
    // Completing request 1 immediately submits request 2.
    CHECK(sends_of(out, MsgType::client_request).size() == 1);
}

TEST_CASE("mismatched results never mix into one quorum") {
    ClientFixture fx;
    ClientAutomaton client(fx.config);
    Transaction txn = fx.submitted(fx.kick(client));
    client.step(AutomatonInput{Deliver{fx.reply_from(1, txn, to_bytes("a")), 1}});
    client.step(AutomatonInput{Deliver{fx.reply_from(2, txn, to_bytes("b")), 2}});
    CHECK(client.completed() == 0);
    client.step(AutomatonInput{Deliver{fx.reply_from(3, txn, to_bytes("a")), 3}});
    CHECK(client.completed() == 1);
}

TEST_CASE("replies with bad authenticators are ignored") {
    ClientFixture fx;
    ClientAutomaton client(fx.config);
    Transaction txn = fx.submitted(fx.kick(client));
    Bytes good = fx.reply_from(1, txn, to_bytes("r"));
    Bytes bad = good;
    bad[bad.size() - 1] ^= 0x01;
    client.step(AutomatonInput{Deliver{bad, 1}});
    client.step(AutomatonInput{Deliver{fx.reply_from(2, txn, to_bytes("r")), 2}});
    CHECK(client.completed() == 0);  // only one valid reply so far
}

TEST_CASE("timeout broadcasts the original request and doubles the timer") {
    ClientFixture fx;
    ClientAutomaton client(fx.config);
    Transaction first = fx.submitted(fx.kick(client));

    Outputs out1 = fx.fire_retransmit(client);
    auto sends1 = sends_of(out1, MsgType::client_request);
    CHECK(sends1.size() == 4);  // broadcast to all replicas
    Transaction re = [&] {
        auto frame = parse_frame(sends1[0].payload);
        return ClientRequestMsg::decode(frame->body).txn;
    }();
    CHECK(re.digest() == first.digest());  // the original request, not a new one

    // Durations: 50, then 100, then 200.
    auto timer_of = [](const Outputs& out) {
        for (const auto& o : out)
            if (const auto* t = std::get_if<SetTimerOut>(&o)) return t->duration;
        return Tick{0};
    };
    CHECK(timer_of(out1) == 100);
    Outputs out2 = fx.fire_retransmit(client);
    CHECK(timer_of(out2) == 200);
}

TEST_CASE("timeout after completion does nothing") {
    ClientFixture fx;
    fx.config.request_count = 1;
    ClientAutomaton client(fx.config);
    Transaction txn = fx.submitted(fx.kick(client));
    client.step(AutomatonInput{Deliver{fx.reply_from(1, txn, to_bytes("r")), 1}});
    client.step(AutomatonInput{Deliver{fx.reply_from(2, txn, to_bytes("r")), 2}});
    CHECK(client.all_done());
    CHECK(fx.fire_retransmit(client).empty());
}

TEST_CASE("poe-style quorum completes at 2f+1 matches") {
    ClientFixture fx;
    fx.config.match_quorum = 3;
    ClientAutomaton client(fx.config);
    Transaction txn = fx.submitted(fx.kick(client));
    Bytes result = to_bytes("r");
    client.step(AutomatonInput{Deliver{fx.reply_from(0, txn, result), 0}});
    client.step(AutomatonInput{Deliver{fx.reply_from(1, txn, result), 1}});
    CHECK(client.completed() == 0);  // 2 matching: still pending
    client.step(AutomatonInput{Deliver{fx.reply_from(2, txn, result), 2}});
    CHECK(client.completed() == 1);  // third completes
}

TEST_CASE("zyzzyva slow path: certificate after 2f+1 matches, completion on acks") {
    ClientFixture fx;
    fx.config.zyzzyva = true;
    fx.config.match_quorum = 4;  // 3f+1
    fx.config.cert_quorum = 3;
    fx.config.ack_quorum = 3;
    ClientAutomaton client(fx.config);
    Transaction txn = fx.submitted(fx.kick(client));

    Digest history = sha3_256(to_bytes("h"));
    auto spec_response = [&](NodeId replica) {
        SpecResponseMsg m;
        m.view = 0;
        m.seq = 1;
        m.digest = batch_digest({txn});
        m.history = history;
        m.request_digest = txn.digest();
        m.result = to_bytes("r");
        m.replica = replica;
        return fx.cluster.frame_from(replica, MsgType::spec_response, m.encode());
    };
    for (NodeId r : {0, 1, 2})
        client.step(AutomatonInput{Deliver{spec_response(r), r}});
    CHECK(client.completed() == 0);  // 3 matching < 3f+1: fast path not taken

    Outputs out = fx.fire_retransmit(client);
    auto certs = sends_of(out, MsgType::commit_cert);
    CHECK(certs.size() == 4);  // broadcast of the commit certificate
    auto cc = CommitCertMsg::decode(parse_frame(certs[0].payload)->body);
    CHECK(cc.response_frames.size() == 3);  // carries the 2f+1 matching responses

    auto ack = [&](NodeId replica) {
        CommitAckMsg m{1, history};
        return fx.cluster.frame_from(replica, MsgType::commit_ack, m.encode());
    };
    client.step(AutomatonInput{Deliver{ack(0), 0}});
    client.step(AutomatonInput{Deliver{ack(1), 1}});
    CHECK(client.completed() == 0);
    client.step(AutomatonInput{Deliver{ack(2), 2}});
    CHECK(client.completed() == 1);  // 2f+1 acks complete the slow path
}

TEST_CASE("a client reports a single result per request") {
    // Once Complete fires for one result digest, later conflicting quorums
    // are unreachable: the request is closed and responses reset.
    ClientFixture fx;
    fx.config.request_count = 1;
    ClientAutomaton client(fx.config);
    Transaction txn = fx.submitted(fx.kick(client));
    client.step(AutomatonInput{Deliver{fx.reply_from(1, txn, to_bytes("a")), 1}});
    client.step(AutomatonInput{Deliver{fx.reply_from(2, txn, to_bytes("a")), 2}});
    CHECK(client.completed() == 1);
    client.step(AutomatonInput{Deliver{fx.reply_from(0, txn, to_bytes("b")), 0}});
    client.step(AutomatonInput{Deliver{fx.reply_from(3, txn, to_bytes("b")), 3}});
    CHECK(client.completed() == 1);  // no second completion
}
