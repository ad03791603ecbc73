// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <vector>

#include "bftlab/bytes.hpp"
#include "bftlab/hash.hpp"

namespace bftlab {

// Simulation-grade authenticators: keyed-hash tags with the same interface
// shape as real signature / MAC schemes. Verification re-derives tags from a
// keyring of known secrets, so the constructions are sound only inside the
// simulator; the interfaces permit swapping in real schemes.

enum class AuthKind : uint8_t { signature = 0, mac = 1 };

struct Authenticator {
    AuthKind kind = AuthKind::signature;
    NodeId signer = 0;
    Bytes bytes;

    bool operator==(const Authenticator&) const = default;
};

struct KeyMaterial {
    NodeId owner = 0;
    Bytes secret;
    Bytes public_handle;

    // Deterministic per-node key material; distinct (domain, owner) pairs
    // yield distinct secrets.
    static KeyMaterial derive(NodeId owner, uint64_t domain);
};

Authenticator sign(const KeyMaterial& key, AuthKind kind, ByteView msg);

class Keyring {
  public:
    void add(KeyMaterial key);
    const KeyMaterial* find(NodeId owner) const;
    const KeyMaterial* find_handle(const Bytes& handle) const;

    // True iff auth was produced by its claimed signer over msg.
    bool verify(ByteView msg, const Authenticator& auth) const;
    // True iff auth verifies and the claimed signer owns public handle h.
    bool verify_handle(const Bytes& h, ByteView msg, const Authenticator& auth) const;

  private:
    std::map<NodeId, KeyMaterial> keys_;
    std::map<Bytes, NodeId> by_handle_;
};

struct ThresholdParams {
    uint32_t t = 1;
    uint32_t n = 1;
};

struct ThresholdShare {
    Digest msg_digest;
    NodeId signer = 0;
    Bytes bytes;

    bool operator==(const ThresholdShare&) const = default;
};

struct ThresholdSignature {
    Digest msg_digest;
    std::vector<NodeId> signers;  // sorted, distinct
    Bytes bytes;

    bool operator==(const ThresholdSignature&) const = default;
};

class NotInGroup : public std::runtime_error {
  public:
    NotInGroup() : std::runtime_error("key does not belong to the threshold group") {}
};
class TooFewShares : public std::runtime_error {
  public:
    TooFewShares() : std::runtime_error("fewer than t valid shares from distinct signers") {}
};
class MixedMessages : public std::runtime_error {
  public:
    MixedMessages() : std::runtime_error("shares cover more than one message") {}
};

// A signing group over a fixed member set. Share tags are deterministic in
// (member secret, message); the combined signature hashes the sorted valid
// tags, so any t-or-more subset of valid shares combines to the same bytes.
// The threshold t arrives with each combine/verify call: protocols reuse one
// group with several thresholds (ordering, execution, fast path).
class ThresholdGroup {
  public:
    ThresholdGroup(std::vector<NodeId> members, std::shared_ptr<const Keyring> keyring);

    const std::vector<NodeId>& members() const { return members_; }
    bool is_member(NodeId id) const { return member_set_.count(id) != 0; }

    ThresholdShare share(const KeyMaterial& key, ByteView msg) const;  // throws NotInGroup
    bool verify_share(ByteView msg, const ThresholdShare& s) const;

    // Throws TooFewShares / MixedMessages; params.t also caps nothing from
    // above — every valid distinct share contributes to the signer set.
    ThresholdSignature combine(const std::vector<ThresholdShare>& shares,
                               ThresholdParams params) const;
    bool verify(ByteView msg, const ThresholdSignature& sig, ThresholdParams params) const;
    bool verify_digest(const Digest& msg_digest, const ThresholdSignature& sig,
                       ThresholdParams params) const;

  private:
    Bytes expected_tag(NodeId signer, const Digest& msg_digest) const;
    Bytes combined_bytes(const Digest& msg_digest, const std::vector<NodeId>& signers) const;

    std::vector<NodeId> members_;
    std::set<NodeId> member_set_;
    std::shared_ptr<const Keyring> keyring_;
};

}  // namespace bftlab
