// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftlab/client.hpp"

#include "bftlab/codec.hpp"

namespace bftlab {

ClientAutomaton::ClientAutomaton(ClientConfig config) : config_(std::move(config)) {}

Transaction ClientAutomaton::make_request(uint64_t nonce) const {
    Transaction txn;
    txn.client_id = config_.id;
    txn.nonce = nonce;
    Writer w;
    w.str("op");
    w.u64(config_.id);
    w.u64(nonce);
    txn.payload = w.take();
    txn.client_auth = sign(config_.key, AuthKind::signature, txn.signing_bytes());
    return txn;
}

void ClientAutomaton::send_request(Outputs& out, bool broadcast) {
    ClientRequestMsg m{current_};
    // Dual-signing mode wraps the signature-carrying transaction in a
    // MAC-authenticated frame, so the request carries both kinds.
    AuthKind frame_kind = config_.dual_sign ? AuthKind::mac : AuthKind::signature;
    Bytes payload = make_frame(MsgType::client_request, m.encode(), config_.key, frame_kind);
    if (broadcast || config_.target == ClientConfig::Target::all_replicas) {
        for (NodeId r : config_.replicas) out.push_back(SendOut{r, payload});
    } else {
        out.push_back(SendOut{config_.initial_primary, payload});
    }
}

Outputs ClientAutomaton::submit_next() {
    if (pending_) throw AlreadyPending();
    Outputs out;
    if (next_nonce_ >= config_.request_count) return out;
    current_ = make_request(next_nonce_++);
    current_digest_ = current_.digest();
    pending_ = true;
    cert_phase_ = false;
    matches_.clear();
    frames_.clear();
    result_by_key_.clear();
    acks_.clear();
    timeout_ = config_.initial_timeout;
    send_request(out, false);
    out.push_back(SetTimerOut{kRetransmitTimer, timeout_});
    return out;
}

void ClientAutomaton::complete(Outputs& out, const Bytes& result) {
    pending_ = false;
    cert_phase_ = false;
    ++completed_;
    out.push_back(CancelTimerOut{kRetransmitTimer});
    out.push_back(CancelTimerOut{kCertTimer});
    out.push_back(ReplyOut{config_.id, result});  // completion marker for the harness
    Outputs next = submit_next();
    out.insert(out.end(), next.begin(), next.end());
}

void ClientAutomaton::on_reply(Outputs& out, const Frame& frame) {
    if (config_.zyzzyva || config_.sbft_aggregate) return;
    auto m = ClientReplyMsg::decode(frame.body);
    if (m.request_digest != current_digest_) return;
    matches_[m.result].insert(frame.auth.signer);
    result_by_key_[m.result] = m.result;
    if (matches_[m.result].size() >= config_.match_quorum) complete(out, m.result);
}

void ClientAutomaton::on_spec_response(Outputs& out, const Frame& frame) {
    auto m = SpecResponseMsg::decode(frame.body);
    if (m.request_digest != current_digest_) return;
    Bytes key = m.match_key();
    matches_[key].insert(m.replica);
    frames_[key][m.replica] = encode_frame(frame);
    result_by_key_[key] = m.result;
    if (!cert_phase_ && matches_[key].size() >= config_.match_quorum) complete(out, m.result);
}

void ClientAutomaton::on_commit_ack(Outputs& out, const Frame& frame) {
    if (!cert_phase_) return;
    auto m = CommitAckMsg::decode(frame.body);
    if (m.history != cert_history_) return;
    acks_.insert(frame.auth.signer);
    if (acks_.size() >= config_.ack_quorum) {
        for (const auto& [key, replicas] : matches_) {
            if (replicas.size() >= config_.cert_quorum) {
                complete(out, result_by_key_[key]);
                return;
            }
        }
    }
}

void ClientAutomaton::on_timeout(Outputs& out) {
    if (!pending_) return;  // completed; stale timer
    if (config_.zyzzyva && !cert_phase_) {
        // Slow path: enough matching speculative responses form a commit
        // certificate; otherwise fall through to retransmission.
        for (const auto& [key, replicas] : matches_) {
            if (replicas.size() >= config_.cert_quorum) {
                const auto& group = frames_.at(key);
                auto m = SpecResponseMsg::decode(parse_frame(group.begin()->second)->body);
                CommitCertMsg cert;
                cert.seq = m.seq;
                cert.history = m.history;
                for (const auto& [replica, fr] : group) cert.response_frames.push_back(fr);
                cert_history_ = m.history;
                cert_phase_ = true;
                Bytes payload =
                    make_frame(MsgType::commit_cert, cert.encode(), config_.key,
                               config_.dual_sign ? AuthKind::mac : AuthKind::signature);
                for (NodeId r : config_.replicas) out.push_back(SendOut{r, payload});
                timeout_ *= 2;
                out.push_back(SetTimerOut{kRetransmitTimer, timeout_});
                return;
            }
        }
    }
    send_request(out, /*broadcast=*/true);
    timeout_ *= 2;
    out.push_back(SetTimerOut{kRetransmitTimer, timeout_});
}

Outputs ClientAutomaton::step(const AutomatonInput& input) {
    Outputs out;
    if (const auto* t = std::get_if<TimerFire>(&input)) {
        if (t->timer_id == kKickTimer) return submit_next();
        if (t->timer_id == kRetransmitTimer) on_timeout(out);
        return out;
    }
    const auto* d = std::get_if<Deliver>(&input);
    if (!d || !pending_) return out;
    auto frame = parse_frame(d->payload);
    if (!frame || !frame_auth_ok(*frame, *config_.keyring)) return out;  // BadAuthenticator
    switch (frame->type) {
        case MsgType::client_reply: on_reply(out, *frame); break;
        case MsgType::spec_response: on_spec_response(out, *frame); break;
        case MsgType::commit_ack: on_commit_ack(out, *frame); break;
        case MsgType::exec_cert: {
            if (!config_.sbft_aggregate || !config_.group) break;
            auto m = ExecCertMsg::decode(frame->body);
            Writer w;
            w.u64(m.seq);
            w.blob(m.result);
            if (config_.group->verify(w.bytes(), m.sig, config_.exec_params))
                complete(out, m.result);
            break;
        }
        default: break;
    }
    return out;
}

StateSummary ClientAutomaton::inspect() const {
    StateSummary s;
    s.view = 0;
    s.last_committed_seq = completed_;
    return s;
}

}  // namespace bftlab
