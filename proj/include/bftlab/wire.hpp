// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <optional>
#include <vector>

#include "bftlab/codec.hpp"
#include "bftlab/crypto.hpp"
#include "bftlab/ledger.hpp"

namespace bftlab {

// Every message on the simulated network is one tagged frame: a 1-byte type,
// a canonically encoded body, and the sender's authenticator over both. All
// protocol modules share this format.

enum class MsgType : uint8_t {
    client_request = 1,
    client_reply = 2,
    preprepare = 3,
    prepare = 4,
    commit = 5,
    view_change = 6,
    new_view = 7,
    ordered_request = 8,
    spec_response = 9,
    commit_cert = 10,
    commit_ack = 11,
    sign_share = 12,
    full_cert = 13,
    exec_share = 14,
    exec_cert = 15,
    slow_share = 16,
    slow_cert = 17,
    hs_proposal = 18,
    hs_vote = 19,
    hs_newround = 20,
    poe_propose = 21,
    poe_support = 22,
    poe_certify = 23,
    instance_wrap = 24,
    propagate = 25,
    replace_vote = 26,
    global_share = 27,
    pow_block = 28,
};

const char* msg_type_name(MsgType t);

struct Frame {
    MsgType type = MsgType::client_request;
    Bytes body;
    Authenticator auth;
};

Bytes frame_signing_bytes(MsgType type, const Bytes& body);
Bytes encode_frame(const Frame& frame);
Bytes make_frame(MsgType type, Bytes body, const KeyMaterial& key, AuthKind kind);
std::optional<Frame> parse_frame(ByteView payload);
bool frame_auth_ok(const Frame& frame, const Keyring& keyring);

// --- shared codec helpers ---

void put_digest(Writer& w, const Digest& d);
Digest get_digest(Reader& r);
void put_share(Writer& w, const ThresholdShare& s);
ThresholdShare get_share(Reader& r);
void put_tsig(Writer& w, const ThresholdSignature& sig);
ThresholdSignature get_tsig(Reader& r);
void put_batch(Writer& w, const std::vector<Transaction>& batch);
std::vector<Transaction> get_batch(Reader& r);

// Digest a proposal's transaction batch; this is the `digest` every
// permissioned protocol votes on.
Digest batch_digest(const std::vector<Transaction>& batch);

// Speculative-history chaining: history(k) = H(history(k-1) || digest(k)).
Digest history_extend(const Digest& prev, const Digest& batch);

// --- message bodies ---

struct ClientRequestMsg {
    Transaction txn;
    Bytes encode() const;
    static ClientRequestMsg decode(ByteView body);
};

struct ClientReplyMsg {
    Digest request_digest;
    uint64_t seq = 0;
    Bytes result;
    NodeId replica = 0;
    Bytes encode() const;
    static ClientReplyMsg decode(ByteView body);
};

struct PrePrepareMsg {
    uint64_t view = 0;
    uint64_t seq = 0;
    Digest digest;
    std::vector<Transaction> batch;
    Bytes encode() const;
    static PrePrepareMsg decode(ByteView body);
};

struct PrepareMsg {
    uint64_t view = 0;
    uint64_t seq = 0;
    Digest digest;
    Bytes encode() const;
    static PrepareMsg decode(ByteView body);
};

struct CommitMsg {
    uint64_t view = 0;
    uint64_t seq = 0;
    Digest digest;
    Bytes encode() const;
    static CommitMsg decode(ByteView body);
};

// One log entry a replica proves in a view change: for PBFT the prepared
// set, for PoE the certified set (cert carries the threshold signature).
struct LogProof {
    uint64_t view = 0;
    uint64_t seq = 0;
    Digest digest;
    std::vector<Transaction> batch;
    Bytes cert;
};

struct ViewChangeMsg {
    uint64_t new_view = 0;
    std::vector<LogProof> proofs;
    Bytes encode() const;
    static ViewChangeMsg decode(ByteView body);
};

struct NewViewMsg {
    uint64_t new_view = 0;
    std::vector<Bytes> view_change_frames;  // the 2f+1 supporting frames
    std::vector<Bytes> preprepare_frames;   // re-issued proposals
    Bytes encode() const;
    static NewViewMsg decode(ByteView body);
};

struct OrderedRequestMsg {
    uint64_t view = 0;
    uint64_t seq = 0;
    Digest digest;
    Digest history;
    std::vector<Transaction> batch;
    Bytes encode() const;
    static OrderedRequestMsg decode(ByteView body);
};

struct SpecResponseMsg {
    uint64_t view = 0;
    uint64_t seq = 0;
    Digest digest;
    Digest history;
    Digest request_digest;
    Bytes result;
    NodeId replica = 0;
    Bytes encode() const;
    static SpecResponseMsg decode(ByteView body);

    // Two responses match iff every field except replica is equal.
    Bytes match_key() const;
};

struct CommitCertMsg {
    uint64_t seq = 0;
    Digest history;
    std::vector<Bytes> response_frames;  // 2f+1 matching spec responses
    Bytes encode() const;
    static CommitCertMsg decode(ByteView body);
};

struct CommitAckMsg {
    uint64_t seq = 0;
    Digest history;
    Bytes encode() const;
    static CommitAckMsg decode(ByteView body);
};

struct SignShareMsg {
    uint64_t view = 0;
    uint64_t seq = 0;
    Digest digest;
    ThresholdShare share;
    Bytes encode() const;
    static SignShareMsg decode(ByteView body);
};

struct FullCertMsg {
    uint64_t view = 0;
    uint64_t seq = 0;
    Digest digest;
    ThresholdSignature sig;
    Bytes encode() const;
    static FullCertMsg decode(ByteView body);
};

struct ExecShareMsg {
    uint64_t view = 0;
    uint64_t seq = 0;
    Digest result_digest;
    Bytes result;
    ThresholdShare share;
    Bytes encode() const;
    static ExecShareMsg decode(ByteView body);
};

struct ExecCertMsg {
    uint64_t view = 0;
    uint64_t seq = 0;
    Digest result_digest;
    Bytes result;
    ThresholdSignature sig;
    Bytes encode() const;
    static ExecCertMsg decode(ByteView body);
};

struct SlowShareMsg {
    uint8_t phase = 1;  // 1 or 2
    uint64_t view = 0;
    uint64_t seq = 0;
    Digest digest;
    ThresholdShare share;
    Bytes encode() const;
    static SlowShareMsg decode(ByteView body);
};

struct SlowCertMsg {
    uint8_t phase = 1;
    uint64_t view = 0;
    uint64_t seq = 0;
    Digest digest;
    ThresholdSignature sig;
    Bytes encode() const;
    static SlowCertMsg decode(ByteView body);
};

struct QuorumCert {
    uint64_t round = 0;
    Digest digest;
    ThresholdSignature sig;
};

struct HsProposalMsg {
    uint64_t round = 0;
    Digest digest;
    std::vector<Transaction> batch;
    std::optional<QuorumCert> justify;  // empty only for round 0
    Bytes encode() const;
    static HsProposalMsg decode(ByteView body);
};

struct HsVoteMsg {
    uint64_t round = 0;
    Digest digest;
    ThresholdShare share;
    Bytes encode() const;
    static HsVoteMsg decode(ByteView body);
};

struct HsNewRoundMsg {
    uint64_t round = 0;
    std::optional<QuorumCert> high_qc;
    Bytes encode() const;
    static HsNewRoundMsg decode(ByteView body);
};

struct PoeProposeMsg {
    uint64_t view = 0;
    uint64_t seq = 0;
    Digest digest;
    std::vector<Transaction> batch;
    Bytes encode() const;
    static PoeProposeMsg decode(ByteView body);
};

struct PoeSupportMsg {
    uint64_t view = 0;
    uint64_t seq = 0;
    Digest digest;
    ThresholdShare share;
    Bytes encode() const;
    static PoeSupportMsg decode(ByteView body);
};

struct PoeCertifyMsg {
    uint64_t view = 0;
    uint64_t seq = 0;
    Digest digest;
    ThresholdSignature sig;
    Bytes encode() const;
    static PoeCertifyMsg decode(ByteView body);
};

struct InstanceWrapMsg {
    uint32_t instance = 0;
    Bytes inner;  // a full frame
    Bytes encode() const;
    static InstanceWrapMsg decode(ByteView body);
};

struct PropagateMsg {
    Transaction txn;
    Bytes encode() const;
    static PropagateMsg decode(ByteView body);
};

struct ReplaceVoteMsg {
    uint64_t epoch = 0;
    Bytes encode() const;
    static ReplaceVoteMsg decode(ByteView body);
};

struct GlobalShareMsg {
    uint32_t cluster = 0;
    uint64_t round = 0;
    std::vector<Transaction> batch;
    std::vector<Bytes> commit_frames;  // 2f_local+1 commit frames
    uint8_t forwarded = 0;             // set on the intra-cluster re-broadcast
    Bytes encode() const;
    static GlobalShareMsg decode(ByteView body);
};

struct PowBlockMsg {
    Block block;
    Bytes encode() const;
    static PowBlockMsg decode(ByteView body);
};

// --- adversary helpers ---

// If the frame is a proposal that embeds a transaction batch, replace the
// batch with `alt`, fix up the digest, and re-sign with the byzantine key.
std::optional<Bytes> rewrite_embedded_batch(ByteView frame_bytes, const Transaction& alt,
                                            const KeyMaterial& byz_key,
                                            const std::optional<Digest>& history = std::nullopt);

// Keep an ordered_request's batch but rewrite its speculative history.
std::optional<Bytes> patch_ordered_request_history(ByteView frame_bytes, const Digest& history,
                                                   const KeyMaterial& byz_key);

// Transactions a frame carries (used by the adversary's equivocation cache).
std::vector<Transaction> extract_transactions(const Frame& frame);

// Best-effort (type, sequence-or-round, digest) for traces and metrics.
struct FrameInfo {
    MsgType type = MsgType::client_request;
    uint64_t seq = 0;
    Digest digest;
};
FrameInfo frame_info(const Frame& frame);

}  // namespace bftlab
