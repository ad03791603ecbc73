// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftlab/wire.hpp"

namespace bftlab {

const char* msg_type_name(MsgType t) {
    switch (t) {
        case MsgType::client_request: return "client_request";
        case MsgType::client_reply: return "client_reply";
        case MsgType::preprepare: return "preprepare";
        case MsgType::prepare: return "prepare";
        case MsgType::commit: return "commit";
        case MsgType::view_change: return "view_change";
        case MsgType::new_view: return "new_view";
        case MsgType::ordered_request: return "ordered_request";
        case MsgType::spec_response: return "spec_response";
        case MsgType::commit_cert: return "commit_cert";
        case MsgType::commit_ack: return "commit_ack";
        case MsgType::sign_share: return "sign_share";
        case MsgType::full_cert: return "full_cert";
        case MsgType::exec_share: return "exec_share";
        case MsgType::exec_cert: return "exec_cert";
        case MsgType::slow_share: return "slow_share";
        case MsgType::slow_cert: return "slow_cert";
        case MsgType::hs_proposal: return "hs_proposal";
        case MsgType::hs_vote: return "hs_vote";
        case MsgType::hs_newround: return "hs_newround";
        case MsgType::poe_propose: return "poe_propose";
        case MsgType::poe_support: return "poe_support";
        case MsgType::poe_certify: return "poe_certify";
        case MsgType::instance_wrap: return "instance_wrap";
        case MsgType::propagate: return "propagate";
        case MsgType::replace_vote: return "replace_vote";
        case MsgType::global_share: return "global_share";
        case MsgType::pow_block: return "pow_block";
    }
    return "unknown";
}

Bytes frame_signing_bytes(MsgType type, const Bytes& body) {
    Writer w;
    w.u8(static_cast<uint8_t>(type));
    w.blob(body);
    return w.take();
}

Bytes encode_frame(const Frame& frame) {
    Writer w;
    w.u8(static_cast<uint8_t>(frame.type));
    w.blob(frame.body);
    w.u8(static_cast<uint8_t>(frame.auth.kind));
    w.u64(frame.auth.signer);
    w.blob(frame.auth.bytes);
    return w.take();
}

Bytes make_frame(MsgType type, Bytes body, const KeyMaterial& key, AuthKind kind) {
    Frame f;
    f.type = type;
    f.auth = sign(key, kind, frame_signing_bytes(type, body));
    f.body = std::move(body);
    return encode_frame(f);
}

std::optional<Frame> parse_frame(ByteView payload) {
    try {
        Reader r(payload);
        Frame f;
        uint8_t type = r.u8();
        if (type < 1 || type > 28) return std::nullopt;
        f.type = static_cast<MsgType>(type);
        f.body = r.blob();
        uint8_t kind = r.u8();
        if (kind > 1) return std::nullopt;
        f.auth.kind = static_cast<AuthKind>(kind);
        f.auth.signer = static_cast<NodeId>(r.u64());
        f.auth.bytes = r.blob();
        r.expect_done();
        return f;
    } catch (const DecodeError&) {
        return std::nullopt;
    }
}

bool frame_auth_ok(const Frame& frame, const Keyring& keyring) {
    return keyring.verify(frame_signing_bytes(frame.type, frame.body), frame.auth);
}

void put_digest(Writer& w, const Digest& d) { w.raw(d.view()); }

Digest get_digest(Reader& r) {
    Bytes raw = r.raw(32);
    Digest d;
    std::copy(raw.begin(), raw.end(), d.bytes.begin());
    return d;
}

void put_share(Writer& w, const ThresholdShare& s) {
    put_digest(w, s.msg_digest);
    w.u64(s.signer);
    w.blob(s.bytes);
}

ThresholdShare get_share(Reader& r) {
    ThresholdShare s;
    s.msg_digest = get_digest(r);
    s.signer = static_cast<NodeId>(r.u64());
    s.bytes = r.blob();
    return s;
}

void put_tsig(Writer& w, const ThresholdSignature& sig) {
    put_digest(w, sig.msg_digest);
    w.u64(sig.signers.size());
    for (NodeId id : sig.signers) w.u64(id);
    w.blob(sig.bytes);
}

ThresholdSignature get_tsig(Reader& r) {
    ThresholdSignature sig;
    sig.msg_digest = get_digest(r);
    uint64_t count = r.u64();
    if (count > 100000) throw DecodeError("absurd signer count");
    for (uint64_t i = 0; i < count; ++i) sig.signers.push_back(static_cast<NodeId>(r.u64()));
    sig.bytes = r.blob();
    return sig;
}

void put_batch(Writer& w, const std::vector<Transaction>& batch) {
    w.u64(batch.size());
    for (const auto& tx : batch) w.blob(tx.encode());
}

std::vector<Transaction> get_batch(Reader& r) {
    uint64_t count = r.u64();
    if (count > 100000) throw DecodeError("absurd batch size");
    std::vector<Transaction> batch;
    for (uint64_t i = 0; i < count; ++i) {
        Bytes txbytes = r.blob();
        Reader tr(txbytes);
        batch.push_back(Transaction::decode(tr));
        tr.expect_done();
    }
    return batch;
}

Digest batch_digest(const std::vector<Transaction>& batch) {
    Writer w;
    w.u64(batch.size());
    for (const auto& tx : batch) put_digest(w, tx.digest());
    return tagged_hash("bftlab.batch", w.bytes());
}

Digest history_extend(const Digest& prev, const Digest& batch) {
    Writer w;
    w.raw(prev.view());
    w.raw(batch.view());
    return tagged_hash("bftlab.history", w.bytes());
}

// --- body encodings ---

Bytes ClientRequestMsg::encode() const {
    Writer w;
    w.blob(txn.encode());
    return w.take();
}
ClientRequestMsg ClientRequestMsg::decode(ByteView body) {
    Reader r(body);
    Bytes txbytes = r.blob();
    Reader tr(txbytes);
    ClientRequestMsg m{Transaction::decode(tr)};
    tr.expect_done();
    r.expect_done();
    return m;
}

Bytes ClientReplyMsg::encode() const {
    Writer w;
    put_digest(w, request_digest);
    w.u64(seq);
    w.blob(result);
    w.u64(replica);
    return w.take();
}
ClientReplyMsg ClientReplyMsg::decode(ByteView body) {
    Reader r(body);
    ClientReplyMsg m;
    m.request_digest = get_digest(r);
    m.seq = r.u64();
    m.result = r.blob();
    m.replica = static_cast<NodeId>(r.u64());
    r.expect_done();
    return m;
}

Bytes PrePrepareMsg::encode() const {
    Writer w;
    w.u64(view);
    w.u64(seq);
    put_digest(w, digest);
    put_batch(w, batch);
    return w.take();
}
PrePrepareMsg PrePrepareMsg::decode(ByteView body) {
    Reader r(body);
    PrePrepareMsg m;
    m.view = r.u64();
    m.seq = r.u64();
    m.digest = get_digest(r);
    m.batch = get_batch(r);
    r.expect_done();
    return m;
}

Bytes PrepareMsg::encode() const {
    Writer w;
    w.u64(view);
    w.u64(seq);
    put_digest(w, digest);
    return w.take();
}
PrepareMsg PrepareMsg::decode(ByteView body) {
    Reader r(body);
    PrepareMsg m;
    m.view = r.u64();
    m.seq = r.u64();
    m.digest = get_digest(r);
    r.expect_done();
    return m;
}

Bytes CommitMsg::encode() const {
    Writer w;
    w.u64(view);
    w.u64(seq);
    put_digest(w, digest);
    return w.take();
}
CommitMsg CommitMsg::decode(ByteView body) {
    Reader r(body);
    CommitMsg m;
    m.view = r.u64();
    m.seq = r.u64();
    m.digest = get_digest(r);
    r.expect_done();
    return m;
}

static void put_proof(Writer& w, const LogProof& p) {
    w.u64(p.view);
    w.u64(p.seq);
    put_digest(w, p.digest);
    put_batch(w, p.batch);
    w.blob(p.cert);
}

static LogProof get_proof(Reader& r) {
    LogProof p;
    p.view = r.u64();
    p.seq = r.u64();
    p.digest = get_digest(r);
    p.batch = get_batch(r);
    p.cert = r.blob();
    return p;
}

Bytes ViewChangeMsg::encode() const {
    Writer w;
    w.u64(new_view);
    w.u64(proofs.size());
    for (const auto& p : proofs) put_proof(w, p);
    return w.take();
}
ViewChangeMsg ViewChangeMsg::decode(ByteView body) {
    Reader r(body);
    ViewChangeMsg m;
    m.new_view = r.u64();
    uint64_t count = r.u64();
    if (count > 100000) throw DecodeError("absurd proof count");
    for (uint64_t i = 0; i < count; ++i) m.proofs.push_back(get_proof(r));
    r.expect_done();
    return m;
}

Bytes NewViewMsg::encode() const {
    Writer w;
    w.u64(new_view);
    w.u64(view_change_frames.size());
    for (const auto& f : view_change_frames) w.blob(f);
    w.u64(preprepare_frames.size());
    for (const auto& f : preprepare_frames) w.blob(f);
    return w.take();
}
NewViewMsg NewViewMsg::decode(ByteView body) {
    Reader r(body);
    NewViewMsg m;
    m.new_view = r.u64();
    uint64_t vcs = r.u64();
    if (vcs > 100000) throw DecodeError("absurd frame count");
    for (uint64_t i = 0; i < vcs; ++i) m.view_change_frames.push_back(r.blob());
    uint64_t pps = r.u64();
    if (pps > 100000) throw DecodeError("absurd frame count");
    for (uint64_t i = 0; i < pps; ++i) m.preprepare_frames.push_back(r.blob());
    r.expect_done();
    return m;
}

Bytes OrderedRequestMsg::encode() const {
    Writer w;
    w.u64(view);
    w.u64(seq);
    put_digest(w, digest);
    put_digest(w, history);
    put_batch(w, batch);
    return w.take();
}
OrderedRequestMsg OrderedRequestMsg::decode(ByteView body) {
    Reader r(body);
    OrderedRequestMsg m;
    m.view = r.u64();
    m.seq = r.u64();
    m.digest = get_digest(r);
    m.history = get_digest(r);
    m.batch = get_batch(r);
    r.expect_done();
    return m;
}

Bytes SpecResponseMsg::encode() const {
    Writer w;
    w.u64(view);
    w.u64(seq);
    put_digest(w, digest);
    put_digest(w, history);
    put_digest(w, request_digest);
    w.blob(result);
    w.u64(replica);
    return w.take();
}
SpecResponseMsg SpecResponseMsg::decode(ByteView body) {
    Reader r(body);
    SpecResponseMsg m;
    m.view = r.u64();
    m.seq = r.u64();
    m.digest = get_digest(r);
    m.history = get_digest(r);
    m.request_digest = get_digest(r);
    m.result = r.blob();
    m.replica = static_cast<NodeId>(r.u64());
    r.expect_done();
    return m;
}
Bytes SpecResponseMsg::match_key() const {
    Writer w;
    w.u64(view);
    w.u64(seq);
    put_digest(w, digest);
    put_digest(w, history);
    put_digest(w, request_digest);
    w.blob(result);
    return w.take();
}

Bytes CommitCertMsg::encode() const {
    Writer w;
    w.u64(seq);
    put_digest(w, history);
    w.u64(response_frames.size());
    for (const auto& f : response_frames) w.blob(f);
    return w.take();
}
CommitCertMsg CommitCertMsg::decode(ByteView body) {
    Reader r(body);
    CommitCertMsg m;
    m.seq = r.u64();
    m.history = get_digest(r);
    uint64_t count = r.u64();
    if (count > 100000) throw DecodeError("absurd frame count");
    for (uint64_t i = 0; i < count; ++i) m.response_frames.push_back(r.blob());
    r.expect_done();
    return m;
}

Bytes CommitAckMsg::encode() const {
    Writer w;
    w.u64(seq);
    put_digest(w, history);
    return w.take();
}
CommitAckMsg CommitAckMsg::decode(ByteView body) {
    Reader r(body);
    CommitAckMsg m;
    m.seq = r.u64();
    m.history = get_digest(r);
    r.expect_done();
    return m;
}

Bytes SignShareMsg::encode() const {
    Writer w;
    w.u64(view);
    w.u64(seq);
    put_digest(w, digest);
    put_share(w, share);
    return w.take();
}
SignShareMsg SignShareMsg::decode(ByteView body) {
    Reader r(body);
    SignShareMsg m;
    m.view = r.u64();
    m.seq = r.u64();
    m.digest = get_digest(r);
    m.share = get_share(r);
    r.expect_done();
    return m;
}

Bytes FullCertMsg::encode() const {
    Writer w;
    w.u64(view);
    w.u64(seq);
    put_digest(w, digest);
    put_tsig(w, sig);
    return w.take();
}
FullCertMsg FullCertMsg::decode(ByteView body) {
    Reader r(body);
    FullCertMsg m;
    m.view = r.u64();
    m.seq = r.u64();
    m.digest = get_digest(r);
    m.sig = get_tsig(r);
    r.expect_done();
    return m;
}

Bytes ExecShareMsg::encode() const {
    Writer w;
    w.u64(view);
    w.u64(seq);
    put_digest(w, result_digest);
    w.blob(result);
    put_share(w, share);
    return w.take();
}
ExecShareMsg ExecShareMsg::decode(ByteView body) {
    Reader r(body);
    ExecShareMsg m;
    m.view = r.u64();
    m.seq = r.u64();
    m.result_digest = get_digest(r);
    m.result = r.blob();
    m.share = get_share(r);
    r.expect_done();
    return m;
}

Bytes ExecCertMsg::encode() const {
    Writer w;
    w.u64(view);
    w.u64(seq);
    put_digest(w, result_digest);
    w.blob(result);
    put_tsig(w, sig);
    return w.take();
}
ExecCertMsg ExecCertMsg::decode(ByteView body) {
    Reader r(body);
    ExecCertMsg m;
    m.view = r.u64();
    m.seq = r.u64();
    m.result_digest = get_digest(r);
    m.result = r.blob();
    m.sig = get_tsig(r);
    r.expect_done();
    return m;
}

Bytes SlowShareMsg::encode() const {
    Writer w;
    w.u8(phase);
    w.u64(view);
    w.u64(seq);
    put_digest(w, digest);
    put_share(w, share);
    return w.take();
}
SlowShareMsg SlowShareMsg::decode(ByteView body) {
    Reader r(body);
    SlowShareMsg m;
    m.phase = r.u8();
    m.view = r.u64();
    m.seq = r.u64();
    m.digest = get_digest(r);
    m.share = get_share(r);
    r.expect_done();
    return m;
}

Bytes SlowCertMsg::encode() const {
    Writer w;
    w.u8(phase);
    w.u64(view);
    w.u64(seq);
    put_digest(w, digest);
    put_tsig(w, sig);
    return w.take();
}
SlowCertMsg SlowCertMsg::decode(ByteView body) {
    Reader r(body);
    SlowCertMsg m;
    m.phase = r.u8();
    m.view = r.u64();
    m.seq = r.u64();
    m.digest = get_digest(r);
    m.sig = get_tsig(r);
    r.expect_done();
    return m;
}

static void put_opt_qc(Writer& w, const std::optional<QuorumCert>& qc) {
    w.u8(qc ? 1 : 0);
    if (qc) {
        w.u64(qc->round);
        put_digest(w, qc->digest);
        put_tsig(w, qc->sig);
    }
}

static std::optional<QuorumCert> get_opt_qc(Reader& r) {
    if (r.u8() == 0) return std::nullopt;
    QuorumCert qc;
    qc.round = r.u64();
    qc.digest = get_digest(r);
    qc.sig = get_tsig(r);
    return qc;
}

Bytes HsProposalMsg::encode() const {
    Writer w;
    w.u64(round);
    put_digest(w, digest);
    put_batch(w, batch);
    put_opt_qc(w, justify);
    return w.take();
}
HsProposalMsg HsProposalMsg::decode(ByteView body) {
    Reader r(body);
    HsProposalMsg m;
    m.round = r.u64();
    m.digest = get_digest(r);
    m.batch = get_batch(r);
    m.justify = get_opt_qc(r);
    r.expect_done();
    return m;
}

Bytes HsVoteMsg::encode() const {
    Writer w;
    w.u64(round);
    put_digest(w, digest);
    put_share(w, share);
    return w.take();
}
HsVoteMsg HsVoteMsg::decode(ByteView body) {
    Reader r(body);
    HsVoteMsg m;
    m.round = r.u64();
    m.digest = get_digest(r);
    m.share = get_share(r);
    r.expect_done();
    return m;
}

Bytes HsNewRoundMsg::encode() const {
    Writer w;
    w.u64(round);
    put_opt_qc(w, high_qc);
    return w.take();
}
HsNewRoundMsg HsNewRoundMsg::decode(ByteView body) {
    Reader r(body);
    HsNewRoundMsg m;
    m.round = r.u64();
    m.high_qc = get_opt_qc(r);
    r.expect_done();
    return m;
}

Bytes PoeProposeMsg::encode() const {
    Writer w;
    w.u64(view);
    w.u64(seq);
    put_digest(w, digest);
    put_batch(w, batch);
    return w.take();
}
PoeProposeMsg PoeProposeMsg::decode(ByteView body) {
    Reader r(body);
    PoeProposeMsg m;
    m.view = r.u64();
    m.seq = r.u64();
    m.digest = get_digest(r);
    m.batch = get_batch(r);
    r.expect_done();
    return m;
}

Bytes PoeSupportMsg::encode() const {
    Writer w;
    w.u64(view);
    w.u64(seq);
    put_digest(w, digest);
    put_share(w, share);
    return w.take();
}
PoeSupportMsg PoeSupportMsg::decode(ByteView body) {
    Reader r(body);
    PoeSupportMsg m;
    m.view = r.u64();
    m.seq = r.u64();
    m.digest = get_digest(r);
    m.share = get_share(r);
    r.expect_done();
    return m;
}

Bytes PoeCertifyMsg::encode() const {
    Writer w;
    w.u64(view);
    w.u64(seq);
    put_digest(w, digest);
    put_tsig(w, sig);
    return w.take();
}
PoeCertifyMsg PoeCertifyMsg::decode(ByteView body) {
    Reader r(body);
    PoeCertifyMsg m;
    m.view = r.u64();
    m.seq = r.u64();
    m.digest = get_digest(r);
    m.sig = get_tsig(r);
    r.expect_done();
    return m;
}

Bytes InstanceWrapMsg::encode() const {
    Writer w;
    w.u32(instance);
    w.blob(inner);
    return w.take();
}
InstanceWrapMsg InstanceWrapMsg::decode(ByteView body) {
    Reader r(body);
    InstanceWrapMsg m;
    m.instance = r.u32();
    m.inner = r.blob();
    r.expect_done();
    return m;
}

Bytes PropagateMsg::encode() const {
    Writer w;
    w.blob(txn.encode());
    return w.take();
}
PropagateMsg PropagateMsg::decode(ByteView body) {
    Reader r(body);
    Bytes txbytes = r.blob();
    Reader tr(txbytes);
    PropagateMsg m{Transaction::decode(tr)};
    tr.expect_done();
    r.expect_done();
    return m;
}

Bytes ReplaceVoteMsg::encode() const {
    Writer w;
    w.u64(epoch);
    return w.take();
}
ReplaceVoteMsg ReplaceVoteMsg::decode(ByteView body) {
    Reader r(body);
    ReplaceVoteMsg m;
    m.epoch = r.u64();
    r.expect_done();
    return m;
}

Bytes GlobalShareMsg::encode() const {
    Writer w;
    w.u32(cluster);
    w.u64(round);
    put_batch(w, batch);
    w.u64(commit_frames.size());
    for (const auto& f : commit_frames) w.blob(f);
    w.u8(forwarded);
    return w.take();
}
GlobalShareMsg GlobalShareMsg::decode(ByteView body) {
    Reader r(body);
    GlobalShareMsg m;
    m.cluster = r.u32();
    m.round = r.u64();
    m.batch = get_batch(r);
    uint64_t count = r.u64();
    if (count > 100000) throw DecodeError("absurd frame count");
    for (uint64_t i = 0; i < count; ++i) m.commit_frames.push_back(r.blob());
    m.forwarded = r.u8();
    r.expect_done();
    return m;
}

Bytes PowBlockMsg::encode() const {
    Writer w;
    w.blob(block.encode());
    return w.take();
}
PowBlockMsg PowBlockMsg::decode(ByteView body) {
    Reader r(body);
    PowBlockMsg m;
    m.block = Block::decode(r.blob());
    r.expect_done();
    return m;
}

std::optional<Bytes> rewrite_embedded_batch(ByteView frame_bytes, const Transaction& alt,
                                            const KeyMaterial& byz_key,
                                            const std::optional<Digest>& history) {
    auto frame = parse_frame(frame_bytes);
    if (!frame) return std::nullopt;
    std::vector<Transaction> batch{alt};
    Digest d = batch_digest(batch);
    Bytes body;
    try {
        switch (frame->type) {
            case MsgType::preprepare: {
                auto m = PrePrepareMsg::decode(frame->body);
                m.digest = d;
                m.batch = batch;
                body = m.encode();
                break;
            }
            case MsgType::ordered_request: {
                auto m = OrderedRequestMsg::decode(frame->body);
                if (m.batch.size() == 1 && m.batch[0].digest() == alt.digest()) return std::nullopt;
                m.digest = d;
                m.batch = batch;
                // Honest replicas verify the history chains onto their own,
                // so the caller supplies a consistent alternate history.
                if (history) m.history = *history;
                body = m.encode();
                break;
            }
            case MsgType::poe_propose: {
                auto m = PoeProposeMsg::decode(frame->body);
                m.digest = d;
                m.batch = batch;
                body = m.encode();
                break;
            }
            case MsgType::hs_proposal: {
                auto m = HsProposalMsg::decode(frame->body);
                m.digest = d;
                m.batch = batch;
                body = m.encode();
                break;
            }
            case MsgType::instance_wrap: {
                auto m = InstanceWrapMsg::decode(frame->body);
                auto inner = rewrite_embedded_batch(m.inner, alt, byz_key, history);
                if (!inner) return std::nullopt;
                m.inner = std::move(*inner);
                body = m.encode();
                break;
            }
            default:
                return std::nullopt;
        }
    } catch (const DecodeError&) {
        return std::nullopt;
    }
    return make_frame(frame->type, std::move(body), byz_key, frame->auth.kind);
}

std::optional<Bytes> patch_ordered_request_history(ByteView frame_bytes, const Digest& history,
                                                   const KeyMaterial& byz_key) {
    auto frame = parse_frame(frame_bytes);
    if (!frame || frame->type != MsgType::ordered_request) return std::nullopt;
    try {
        auto m = OrderedRequestMsg::decode(frame->body);
        m.history = history;
        return make_frame(MsgType::ordered_request, m.encode(), byz_key, frame->auth.kind);
    } catch (const DecodeError&) {
        return std::nullopt;
    }
}

std::vector<Transaction> extract_transactions(const Frame& frame) {
    try {
        switch (frame.type) {
            case MsgType::client_request: return {ClientRequestMsg::decode(frame.body).txn};
            case MsgType::propagate: return {PropagateMsg::decode(frame.body).txn};
            case MsgType::preprepare: return PrePrepareMsg::decode(frame.body).batch;
            case MsgType::ordered_request: return OrderedRequestMsg::decode(frame.body).batch;
            case MsgType::poe_propose: return PoeProposeMsg::decode(frame.body).batch;
            case MsgType::hs_proposal: return HsProposalMsg::decode(frame.body).batch;
            case MsgType::instance_wrap: {
                auto m = InstanceWrapMsg::decode(frame.body);
                auto inner = parse_frame(m.inner);
                return inner ? extract_transactions(*inner) : std::vector<Transaction>{};
            }
            default: return {};
        }
    } catch (const DecodeError&) {
        return {};
    }
}

FrameInfo frame_info(const Frame& frame) {
    FrameInfo info;
    info.type = frame.type;
    try {
        switch (frame.type) {
            case MsgType::preprepare: {
                auto m = PrePrepareMsg::decode(frame.body);
                info.seq = m.seq;
                info.digest = m.digest;
                break;
            }
            case MsgType::prepare: {
                auto m = PrepareMsg::decode(frame.body);
                info.seq = m.seq;
                info.digest = m.digest;
                break;
            }
            case MsgType::commit: {
                auto m = CommitMsg::decode(frame.body);
                info.seq = m.seq;
                info.digest = m.digest;
                break;
            }
            case MsgType::client_reply: {
                auto m = ClientReplyMsg::decode(frame.body);
                info.seq = m.seq;
                info.digest = m.request_digest;
                break;
            }
            case MsgType::ordered_request: {
                auto m = OrderedRequestMsg::decode(frame.body);
                info.seq = m.seq;
                info.digest = m.digest;
                break;
            }
            case MsgType::spec_response: {
                auto m = SpecResponseMsg::decode(frame.body);
                info.seq = m.seq;
                info.digest = m.digest;
                break;
            }
            case MsgType::commit_cert: info.seq = CommitCertMsg::decode(frame.body).seq; break;
            case MsgType::commit_ack: info.seq = CommitAckMsg::decode(frame.body).seq; break;
            case MsgType::sign_share: {
                auto m = SignShareMsg::decode(frame.body);
                info.seq = m.seq;
                info.digest = m.digest;
                break;
            }
            case MsgType::full_cert: {
                auto m = FullCertMsg::decode(frame.body);
                info.seq = m.seq;
                info.digest = m.digest;
                break;
            }
            case MsgType::exec_share: info.seq = ExecShareMsg::decode(frame.body).seq; break;
            case MsgType::exec_cert: info.seq = ExecCertMsg::decode(frame.body).seq; break;
            case MsgType::slow_share: info.seq = SlowShareMsg::decode(frame.body).seq; break;
            case MsgType::slow_cert: info.seq = SlowCertMsg::decode(frame.body).seq; break;
            case MsgType::hs_proposal: {
                auto m = HsProposalMsg::decode(frame.body);
                info.seq = m.round;
                info.digest = m.digest;
                break;
            }
            case MsgType::hs_vote: {
                auto m = HsVoteMsg::decode(frame.body);
                info.seq = m.round;
                info.digest = m.digest;
                break;
            }
            case MsgType::hs_newround: info.seq = HsNewRoundMsg::decode(frame.body).round; break;
            case MsgType::poe_propose: {
                auto m = PoeProposeMsg::decode(frame.body);
                info.seq = m.seq;
                info.digest = m.digest;
                break;
            }
            case MsgType::poe_support: {
                auto m = PoeSupportMsg::decode(frame.body);
                info.seq = m.seq;
                info.digest = m.digest;
                break;
            }
            case MsgType::poe_certify: {
                auto m = PoeCertifyMsg::decode(frame.body);
                info.seq = m.seq;
                info.digest = m.digest;
                break;
            }
            case MsgType::view_change: info.seq = ViewChangeMsg::decode(frame.body).new_view; break;
            case MsgType::new_view: info.seq = NewViewMsg::decode(frame.body).new_view; break;
            case MsgType::replace_vote: info.seq = ReplaceVoteMsg::decode(frame.body).epoch; break;
            case MsgType::global_share: info.seq = GlobalShareMsg::decode(frame.body).round; break;
            case MsgType::client_request: {
                auto m = ClientRequestMsg::decode(frame.body);
                info.digest = m.txn.digest();
                break;
            }
            case MsgType::instance_wrap: {
                auto m = InstanceWrapMsg::decode(frame.body);
                auto inner = parse_frame(m.inner);
                if (inner) {
                    FrameInfo ii = frame_info(*inner);
                    info.seq = ii.seq;
                    info.digest = ii.digest;
                }
                break;
            }
            case MsgType::pow_block: {
                auto m = PowBlockMsg::decode(frame.body);
                info.seq = m.block.number;
                info.digest = m.block.digest();
                break;
            }
            default: break;
        }
    } catch (const DecodeError&) {
    }
    return info;
}

}  // namespace bftlab
