// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bftlab/crypto.hpp"

using namespace bftlab;

namespace {

struct Fixture {
    std::shared_ptr<Keyring> ring = std::make_shared<Keyring>();
    std::vector<KeyMaterial> keys;

    explicit Fixture(uint32_t count, uint64_t domain = 99) {
        for (NodeId id = 0; id < count; ++id) {
            keys.push_back(KeyMaterial::derive(id, domain));
            ring->add(keys.back());
        }
    }
};

}  // namespace

TEST_CASE("sign/verify round trip and bindings") {
    Fixture fx(3);
    Bytes msg = to_bytes("hello");
    Bytes other = to_bytes("hellO");

    for (AuthKind kind : {AuthKind::signature, AuthKind::mac}) {
        Authenticator a = sign(fx.keys[0], kind, msg);
        CHECK(fx.ring->verify(msg, a));
        CHECK(fx.ring->verify_handle(fx.keys[0].public_handle, msg, a));
        CHECK(!fx.ring->verify(other, a));  // message binding
        CHECK(!fx.ring->verify_handle(fx.keys[1].public_handle, msg, a));  // signer binding
        Authenticator forged = a;
        forged.signer = 1;
        CHECK(!fx.ring->verify(msg, forged));
    }
}

TEST_CASE("distinct replicas derive distinct secrets") {
    Fixture fx(5);
    for (size_t i = 0; i < fx.keys.size(); ++i)
        for (size_t j = i + 1; j < fx.keys.size(); ++j) {
            CHECK(fx.keys[i].secret != fx.keys[j].secret);
            CHECK(fx.keys[i].public_handle != fx.keys[j].public_handle);
        }
}

TEST_CASE("threshold shares are deterministic and signer-specific") {
    Fixture fx(4);
    ThresholdGroup group({0, 1, 2, 3}, fx.ring);
    Bytes msg = to_bytes("order-42");

    CHECK(group.share(fx.keys[0], msg) == group.share(fx.keys[0], msg));
    CHECK(group.share(fx.keys[0], msg) != group.share(fx.keys[1], msg));
    CHECK(group.verify_share(msg, group.share(fx.keys[2], msg)));

    KeyMaterial outsider = KeyMaterial::derive(9, 99);
    CHECK_THROWS_AS(group.share(outsider, msg), NotInGroup);
}

TEST_CASE("threshold combine needs t distinct valid shares") {
    Fixture fx(4);
    ThresholdGroup group({0, 1, 2, 3}, fx.ring);
    ThresholdParams params{3, 4};
    Bytes msg = to_bytes("decision");

    std::vector<ThresholdShare> shares;
    for (int i = 0; i < 3; ++i) shares.push_back(group.share(fx.keys[i], msg));
    ThresholdSignature sig = group.combine(shares, params);
    CHECK(group.verify(msg, sig, params));
    CHECK(sig.signers == std::vector<NodeId>{0, 1, 2});

    // Duplicates of one signer do not count twice.
    std::vector<ThresholdShare> dup = {shares[0], shares[1], shares[0]};
    CHECK_THROWS_AS(group.combine(dup, params), TooFewShares);

    // A corrupted share invalidates its signer's contribution.
    std::vector<ThresholdShare> corrupted = shares;
    corrupted[2].bytes[0] ^= 0xff;
    CHECK_THROWS_AS(group.combine(corrupted, params), TooFewShares);

    // Shares over two messages never combine.
    std::vector<ThresholdShare> mixed = {shares[0], shares[1],
                                         group.share(fx.keys[2], to_bytes("other"))};
    CHECK_THROWS_AS(group.combine(mixed, params), MixedMessages);
}

TEST_CASE("combined signature is independent of which t-subset combined it") {
    Fixture fx(5);
    ThresholdGroup group({0, 1, 2, 3, 4}, fx.ring);
    ThresholdParams params{3, 5};
    Bytes msg = to_bytes("stable");

    std::vector<ThresholdShare> all;
    for (int i = 0; i < 5; ++i) all.push_back(group.share(fx.keys[i], msg));

    ThresholdSignature a = group.combine({all[0], all[1], all[2]}, params);
    ThresholdSignature b = group.combine({all[2], all[1], all[0]}, params);
    CHECK(a == b);
    CHECK(group.verify(msg, a, params));
}

TEST_CASE("threshold signature binds to its message") {
    Fixture fx(4);
    ThresholdGroup group({0, 1, 2, 3}, fx.ring);
    ThresholdParams params{2, 4};
    Bytes msg = to_bytes("m");

    std::vector<ThresholdShare> shares = {group.share(fx.keys[0], msg),
                                          group.share(fx.keys[1], msg)};
    ThresholdSignature sig = group.combine(shares, params);
    CHECK(group.verify(msg, sig, params));
    CHECK(!group.verify(to_bytes("m'"), sig, params));

    ThresholdSignature padded = sig;
    padded.signers.push_back(3);  // claimed but non-contributing signer
    CHECK(!group.verify(msg, padded, params));

    ThresholdSignature tampered = sig;
    tampered.bytes[5] ^= 0x01;
    CHECK(!group.verify(msg, tampered, params));
}

TEST_CASE("t-of-n soundness over every subset size") {
    for (auto [t, n] : std::vector<std::pair<uint32_t, uint32_t>>{{2, 3}, {3, 4}}) {
        Fixture fx(n);
        std::vector<NodeId> members;
        for (NodeId id = 0; id < n; ++id) members.push_back(id);
        ThresholdGroup group(members, fx.ring);
        ThresholdParams params{t, n};
        Bytes msg = to_bytes("subset");

        std::vector<ThresholdShare> all;
        for (uint32_t i = 0; i < n; ++i) all.push_back(group.share(fx.keys[i], msg));

        for (uint32_t mask = 0; mask < (1u << n); ++mask) {
            std::vector<ThresholdShare> subset;
            for (uint32_t i = 0; i < n; ++i)
                if (mask & (1u << i)) subset.push_back(all[i]);
            if (subset.size() >= t) {
                ThresholdSignature sig = group.combine(subset, params);
                CHECK(group.verify(msg, sig, params));
            } else {
                CHECK_THROWS_AS(group.combine(subset, params), TooFewShares);
            }
        }
    }
}
