// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftlab/crypto.hpp"

#include <algorithm>

#include "bftlab/codec.hpp"

namespace bftlab {

KeyMaterial KeyMaterial::derive(NodeId owner, uint64_t domain) {
    Writer w;
    w.u64(domain);
    w.u64(owner);
    Digest secret = tagged_hash("bftlab.key.secret", w.bytes());
    Digest handle = tagged_hash("bftlab.key.handle", secret.view());
    KeyMaterial key;
    key.owner = owner;
    key.secret.assign(secret.bytes.begin(), secret.bytes.end());
    key.public_handle.assign(handle.bytes.begin(), handle.bytes.end());
    return key;
}

static Bytes auth_tag(const KeyMaterial& key, AuthKind kind, ByteView msg) {
    Writer w;
    w.u8(static_cast<uint8_t>(kind));
    w.blob(key.secret);
    w.raw(msg);
    Digest d = tagged_hash("bftlab.auth", w.bytes());
    return Bytes(d.bytes.begin(), d.bytes.end());
}

Authenticator sign(const KeyMaterial& key, AuthKind kind, ByteView msg) {
    return Authenticator{kind, key.owner, auth_tag(key, kind, msg)};
}

void Keyring::add(KeyMaterial key) {
    by_handle_[key.public_handle] = key.owner;
    keys_.emplace(key.owner, std::move(key));
}

const KeyMaterial* Keyring::find(NodeId owner) const {
    auto it = keys_.find(owner);
    return it == keys_.end() ? nullptr : &it->second;
}

const KeyMaterial* Keyring::find_handle(const Bytes& handle) const {
    auto it = by_handle_.find(handle);
    return it == by_handle_.end() ? nullptr : find(it->second);
}

bool Keyring::verify(ByteView msg, const Authenticator& auth) const {
    const KeyMaterial* key = find(auth.signer);
    if (!key) return false;
    return auth.bytes == auth_tag(*key, auth.kind, msg);
}

bool Keyring::verify_handle(const Bytes& h, ByteView msg, const Authenticator& auth) const {
    const KeyMaterial* key = find_handle(h);
    if (!key || key->owner != auth.signer) return false;
    return verify(msg, auth);
}

ThresholdGroup::ThresholdGroup(std::vector<NodeId> members,
                               std::shared_ptr<const Keyring> keyring)
    : members_(std::move(members)), keyring_(std::move(keyring)) {
    member_set_.insert(members_.begin(), members_.end());
}

Bytes ThresholdGroup::expected_tag(NodeId signer, const Digest& msg_digest) const {
    const KeyMaterial* key = keyring_->find(signer);
    if (!key) return {};
    Writer w;
    w.blob(key->secret);
    w.raw(msg_digest.view());
    Digest d = tagged_hash("bftlab.tshare", w.bytes());
    return Bytes(d.bytes.begin(), d.bytes.end());
}

ThresholdShare ThresholdGroup::share(const KeyMaterial& key, ByteView msg) const {
    if (!is_member(key.owner)) throw NotInGroup();
    Digest md = sha3_256(msg);
    return ThresholdShare{md, key.owner, expected_tag(key.owner, md)};
}

bool ThresholdGroup::verify_share(ByteView msg, const ThresholdShare& s) const {
    if (!is_member(s.signer)) return false;
    Digest md = sha3_256(msg);
    return s.msg_digest == md && s.bytes == expected_tag(s.signer, md);
}

Bytes ThresholdGroup::combined_bytes(const Digest& msg_digest,
                                     const std::vector<NodeId>& signers) const {
    Writer w;
    w.raw(msg_digest.view());
    w.u64(signers.size());
    for (NodeId id : signers) {
        w.u64(id);
        w.blob(expected_tag(id, msg_digest));
    }
    Digest d = tagged_hash("bftlab.tsig", w.bytes());
    return Bytes(d.bytes.begin(), d.bytes.end());
}

ThresholdSignature ThresholdGroup::combine(const std::vector<ThresholdShare>& shares,
                                           ThresholdParams params) const {
    if (params.t < 1 || params.t > params.n)
        throw std::invalid_argument("threshold params require 1 <= t <= n");
    if (shares.empty()) throw TooFewShares();
    const Digest& md = shares.front().msg_digest;
    for (const auto& s : shares)
        if (s.msg_digest != md) throw MixedMessages();

    std::set<NodeId> valid;
    for (const auto& s : shares) {
        if (!is_member(s.signer)) continue;
        if (s.bytes != expected_tag(s.signer, md)) continue;
        valid.insert(s.signer);
    }
    if (valid.size() < params.t) throw TooFewShares();

    ThresholdSignature sig;
    sig.msg_digest = md;
    sig.signers.assign(valid.begin(), valid.end());
    sig.bytes = combined_bytes(md, sig.signers);
    return sig;
}

bool ThresholdGroup::verify_digest(const Digest& msg_digest, const ThresholdSignature& sig,
                                   ThresholdParams params) const {
    if (sig.msg_digest != msg_digest) return false;
    std::set<NodeId> distinct(sig.signers.begin(), sig.signers.end());
    if (distinct.size() != sig.signers.size()) return false;
    if (sig.signers.size() < params.t) return false;
    for (NodeId id : sig.signers)
        if (!is_member(id)) return false;
    return sig.bytes == combined_bytes(msg_digest, sig.signers);
}

bool ThresholdGroup::verify(ByteView msg, const ThresholdSignature& sig,
                            ThresholdParams params) const {
    return verify_digest(sha3_256(msg), sig, params);
}

}  // namespace bftlab
