// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "bftlab/client.hpp"
#include "test_support.hpp"

using namespace bftlab;
using namespace bftlab::testing;

TEST_CASE("identical config and seed produce byte-identical reports and traces") {
    auto cfg = base_scenario(Protocol::pbft, 4, 1, 2, 6, 111);
    std::vector<TraceEvent> t1, t2;
    RunReport r1 = run_scenario(cfg, &t1);
    RunReport r2 = run_scenario(cfg, &t2);
    CHECK(r1.to_json() == r2.to_json());
    CHECK(trace_to_jsonl(t1) == trace_to_jsonl(t2));

    // A different seed produces a different trace.
    cfg.seed = 112;
    std::vector<TraceEvent> t3;
    run_scenario(cfg, &t3);
    CHECK(trace_to_jsonl(t1) != trace_to_jsonl(t3));
}

TEST_CASE("verify_safety flags a constructed divergence at the right position") {
    Chain honest;
    Chain diverged;
    for (int i = 0; i < 5; ++i) {
        Block b;
        b.number = honest.size();
        b.parent_digest = honest.tip_digest();
        b.meta.view = i;
        honest.append(b);
        Block d = b;
        if (i >= 2) d.meta.proposer = 99;  // diverges from block 3 on
        d.parent_digest = diverged.tip_digest();
        diverged.append(d);
    }
    std::vector<Chain> chains = {honest, honest, diverged};
    auto violation = verify_safety(chains, {}, false, 6);
    REQUIRE(violation.has_value());
    CHECK(violation->seq == 3);
    CHECK(violation->replica_a == 0);
    CHECK(violation->replica_b == 2);
    CHECK(violation->digest_a != violation->digest_b);

    // Byzantine replicas are exempt from the comparison.
    CHECK(!verify_safety(chains, {2}, false, 6).has_value());
    // Equal chains pass.
    CHECK(!verify_safety({honest, honest}, {}, false, 6).has_value());
}

TEST_CASE("the report verdict is recomputable from the chains alone") {
    auto cfg = base_scenario(Protocol::pbft, 4, 1, 1, 4, 115);
    RunReport r = run_scenario(cfg);
    CHECK(r.safety_ok);
    RunReport loaded = RunReport::from_json(r.to_json());
    auto violation = verify_safety(loaded);
    CHECK(!violation.has_value());
    CHECK(loaded.chains.size() == 4);
    for (const auto& chain : loaded.chains) CHECK(verify_ok(chain.verify()));
}

TEST_CASE("metrics rows match the per-protocol closed forms") {
    auto pbft_cfg = base_scenario(Protocol::pbft, 4, 1, 1, 3, 117);
    RunReport pbft_report = run_scenario(pbft_cfg);
    std::ostringstream csv;
    emit_metrics(pbft_report, csv);
    std::string text = csv.str();
    CHECK(text.find("protocol,seq,latency_ticks,commit,prepare,preprepare") == 0);
    CHECK(text.find("pbft,1,") != std::string::npos);
    // Row for each decision: commit=12, preprepare=3, prepare=9 at n=4.
    for (const auto& [seq, counts] : pbft_report.metrics.per_decision) {
        CHECK(counts.at("preprepare") == 3);
        CHECK(counts.at("prepare") == 9);
        CHECK(counts.at("commit") == 12);
    }

    auto poe_cfg = base_scenario(Protocol::poe, 4, 1, 1, 3, 117);
    RunReport poe_report = run_scenario(poe_cfg);
    for (const auto& [seq, counts] : poe_report.metrics.per_decision) {
        uint64_t total = 0;
        for (const auto& [type, count] : counts) total += count;
        CHECK(total == 9);  // 3(n-1)
    }
}

TEST_CASE("an empty run emits a header-only csv") {
    RunReport empty;
    empty.protocol = "pbft";
    std::ostringstream csv;
    emit_metrics(empty, csv);
    CHECK(csv.str() == "protocol,seq,latency_ticks\n");
}

TEST_CASE("scenario json round trips and rejects bad input") {
    ScenarioConfig cfg = base_scenario(Protocol::geobft, 8, 1, 2, 5, 119);
    cfg.quorum.cluster_sizes = {4, 4};
    cfg.regions = {{0, 1, 2, 3}, {4, 5, 6, 7}};
    cfg.adversary[0] = AdversaryConfig{ByzantineBehavior::mute, 7, 0, "", 0};
    ScenarioConfig back = ScenarioConfig::from_json(cfg.to_json());
    CHECK(back.name == cfg.name);
    CHECK(back.protocol == cfg.protocol);
    CHECK(back.quorum.cluster_sizes == cfg.quorum.cluster_sizes);
    CHECK(back.adversary.at(0).behavior == ByzantineBehavior::mute);
    CHECK(back.adversary.at(0).from_tick == 7);
    CHECK(back.regions == cfg.regions);

    CHECK_THROWS_AS(ScenarioConfig::from_json("{"), InvalidConfig);
    CHECK_THROWS_AS(ScenarioConfig::from_json("{}"), InvalidConfig);
    CHECK_THROWS_WITH_AS(
        ScenarioConfig::from_json(
            R"({"version":1,"protocol":"pbft","quorum":{"n":3,"f":1}})"),
        "quorum.n: need n >= 3f+1", InvalidConfig);
}

TEST_CASE("invalid configurations carry a field-level message") {
    auto cfg = base_scenario(Protocol::pbft, 4, 1, 1, 3, 1);
    cfg.adversary[0] = AdversaryConfig{ByzantineBehavior::mute, 0, 0, "", 0};
    cfg.adversary[1] = AdversaryConfig{ByzantineBehavior::mute, 0, 0, "", 0};
    CHECK_THROWS_WITH_AS(cfg.validate(), "adversary: more than f byzantine replicas",
                         InvalidConfig);

    auto loss = base_scenario(Protocol::pbft, 4, 1, 1, 3, 1);
    loss.network.loss_prob = 1.5;
    CHECK_THROWS_AS(loss.validate(), InvalidConfig);
}

TEST_CASE("loss and duplication do not break safety") {
    auto cfg = base_scenario(Protocol::pbft, 4, 1, 1, 5, 131);
    cfg.network.loss_prob = 0.05;
    cfg.network.dup_prob = 0.10;
    cfg.duration = 2000000;
    RunReport r = run_scenario(cfg);
    CHECK(r.safety_ok);
    CHECK(r.metrics.completed_requests == 5);  // retransmissions recover loss
}

TEST_CASE("failure-free runs never fire the retransmission timer") {
    auto cfg = base_scenario(Protocol::pbft, 4, 1, 2, 5, 137);
    std::vector<TraceEvent> trace;
    RunReport r = run_scenario(cfg, &trace);
    REQUIRE(r.metrics.completed_requests == 10);
    for (const auto& ev : trace) {
        if (ev.kind != TraceEvent::Kind::timer) continue;
        if (ev.src >= 4) CHECK(ev.seq != ClientAutomaton::kRetransmitTimer);
    }
}

TEST_CASE("trace export is one json object per line") {
    auto cfg = base_scenario(Protocol::pbft, 4, 1, 1, 2, 139);
    std::vector<TraceEvent> trace;
    run_scenario(cfg, &trace);
    std::string jsonl = trace_to_jsonl(trace);
    std::istringstream lines(jsonl);
    std::string line;
    size_t count = 0;
    while (std::getline(lines, line)) {
        CHECK(line.front() == '{');
        CHECK(line.find("\"t\":") != std::string::npos);
        CHECK(line.find("\"kind\":") != std::string::npos);
        ++count;
    }
    CHECK(count == trace.size());
}

TEST_CASE("every bundled scenario parses, runs in budget, and is safe") {
    // The divergence replay is the intentional exception.
    const char* files[] = {"pbft", "pbft_mute_primary", "zyzzyva", "zyzzyva_divergence", "sbft",
                           "sbft_slow_path", "hotstuff", "poe", "poe_rollback", "aardvark",
                           "rbft", "rbft_throttle", "rcc", "geobft", "geobft_flat_baseline",
                           "pos_bft", "pow", "pos_chain", "poa"};
    for (const char* name : files) {
        ScenarioConfig cfg = ScenarioConfig::from_file("scenarios/" + std::string(name) + ".json");
        INFO("scenario ", name);
        RunReport r = run_scenario(cfg);
        uint32_t expected = cfg.client_count * cfg.requests_per_client;
        CHECK(r.metrics.completed_requests == expected);
        if (std::string(name) == "zyzzyva_divergence") {
            CHECK(!r.safety_ok);
        } else {
            CHECK(r.safety_ok);
            if (!protocol_is_permissioned(cfg.protocol))
                CHECK(r.chains[0].size() > cfg.blocks_target / 2);
        }
    }
}
