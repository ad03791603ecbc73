// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "bftlab/quorum.hpp"

using namespace bftlab;

TEST_CASE("quorum thresholds match the protocol definitions") {
    QuorumConfig q{4, 1, 0, 1, {}};
    CHECK(quorum(q, QuorumKind::prepare) == 2);        // 2f
    CHECK(quorum(q, QuorumKind::commit) == 3);         // 2f+1
    CHECK(quorum(q, QuorumKind::view_change) == 3);    // 2f+1
    CHECK(quorum(q, QuorumKind::client_reply) == 2);   // f+1
    CHECK(quorum(q, QuorumKind::spec_client) == 4);    // 3f+1
    CHECK(quorum(q, QuorumKind::poe_client) == 3);     // 2f+1
    CHECK(quorum(q, QuorumKind::hotstuff) == 3);       // 2f+1
    CHECK(quorum(q, QuorumKind::sbft_exec) == 2);      // f+1

    QuorumConfig sbft{6, 1, 1, 1, {}};
    CHECK(quorum(sbft, QuorumKind::sbft_fast) == 6);   // 3f+2c+1
}

TEST_CASE("invalid configurations are rejected with the field name") {
    QuorumConfig q{3, 1, 0, 1, {}};
    CHECK_THROWS_WITH_AS(q.validate(), "quorum.n: need n >= 3f+1", InvalidConfig);

    QuorumConfig zero_z{4, 1, 0, 0, {}};
    CHECK_THROWS_AS(zero_z.validate(), InvalidConfig);

    QuorumConfig thin_sbft{5, 1, 1, 1, {}};
    CHECK_THROWS_AS(thin_sbft.validate(), InvalidConfig);

    QuorumConfig bad_cluster{8, 1, 0, 1, {4, 3}};
    CHECK_THROWS_AS(bad_cluster.validate(), InvalidConfig);

    QuorumConfig good_cluster{8, 1, 0, 1, {4, 4}};
    good_cluster.validate();
    CHECK(good_cluster.cluster_f(0) == 1);
}

TEST_CASE("primary rotation is view mod n") {
    CHECK(primary_of(0, 4) == 0);
    CHECK(primary_of(5, 4) == 1);
    CHECK(primary_of(4, 4) == 0);
    for (uint64_t v = 0; v < 12; ++v) CHECK(primary_of(v + 1, 4) == (primary_of(v, 4) + 1) % 4);
}

TEST_CASE("any two commit quorums intersect in f+1 replicas") {
    // Combinatorial check over all pairs of 2f+1-sized subsets.
    for (uint32_t f : {1u, 2u, 3u}) {
        uint32_t n = 3 * f + 1;
        uint32_t size = 2 * f + 1;
        std::vector<uint32_t> subsets;
        for (uint32_t mask = 0; mask < (1u << n); ++mask)
            if (static_cast<uint32_t>(__builtin_popcount(mask)) == size) subsets.push_back(mask);
        for (uint32_t a : subsets)
            for (uint32_t b : subsets) {
                uint32_t overlap = __builtin_popcount(a & b);
                REQUIRE(overlap >= f + 1);
            }
    }
}
