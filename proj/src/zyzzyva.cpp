// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftlab/zyzzyva.hpp"

namespace bftlab {

ZyzzyvaReplica::ZyzzyvaReplica(ReplicaContext ctx) : ReplicaBase(std::move(ctx)) {
    history_ = Block::genesis().digest();
}

Outputs ZyzzyvaReplica::step(const AutomatonInput& input) {
    Outputs out;
    if (const auto* req = std::get_if<ClientRequest>(&input)) {
        handle_request(out, req->txn);
        return out;
    }
    if (const auto* timer = std::get_if<TimerFire>(&input)) {
        // An unserved relayed request: the primary looks faulty. Full primary
        // replacement is outside this module; surface the suspicion.
        if (timer_requests_.count(timer->timer_id)) out.push_back(ViewChangeOut{view_ + 1});
        return out;
    }
    const auto& deliver = std::get<Deliver>(input);
    auto frame = checked_frame(deliver.payload);
    if (!frame) return out;
    switch (frame->type) {
        case MsgType::client_request:
            handle_request(out, ClientRequestMsg::decode(frame->body).txn);
            break;
        case MsgType::ordered_request: handle_ordered_request(out, *frame); break;
        case MsgType::commit_cert: handle_commit_cert(out, *frame); break;
        default: break;
    }
    return out;
}

void ZyzzyvaReplica::handle_request(Outputs& out, const Transaction& txn) {
    if (!client_auth_ok(txn)) return;
    NodeId client = static_cast<NodeId>(txn.client_id);
    if (const auto* cached = exec_.cached_reply(client, txn.nonce)) {
        reply_to(out, client, cached->request_digest, 0, cached->result);
        return;
    }
    pool_.add(txn);
    if (is_primary()) {
        maybe_propose(out);
        return;
    }
    Digest d = txn.digest();
    ClientRequestMsg m{txn};
    out.push_back(SendOut{ctx_.leader_of(view_), signed_frame(MsgType::client_request, m.encode())});
    if (!relay_timers_.count(d)) {
        uint64_t timer_id = next_relay_timer_++;
        relay_timers_[d] = timer_id;
        timer_requests_[timer_id] = d;
        out.push_back(SetTimerOut{timer_id, 20 * ctx_.mean_delay});
    }
}

void ZyzzyvaReplica::maybe_propose(Outputs& out) {
    while (true) {
        auto batch = pool_.next_batch(ctx_.batch_size);
        if (batch.empty()) return;
        OrderedRequestMsg m;
        m.view = view_;
        m.seq = next_seq_++;
        m.digest = batch_digest(batch);
        m.batch = std::move(batch);
        // The primary executes in the same speculative order it proposes.
        m.history = history_extend(history_, m.digest);
        out.push_back(BroadcastOut{signed_frame(MsgType::ordered_request, m.encode())});
        execute_speculatively(out, m);
    }
}

void ZyzzyvaReplica::handle_ordered_request(Outputs& out, const Frame& frame) {
    OrderedRequestMsg m = OrderedRequestMsg::decode(frame.body);
    if (m.view != view_ || frame.auth.signer != ctx_.leader_of(m.view)) return;
    if (m.digest != batch_digest(m.batch)) return;
    for (const auto& txn : m.batch)
        if (!client_auth_ok(txn)) return;
    if (m.seq < next_exec_) return;  // already executed
    if (m.seq > next_exec_) {
        buffered_.emplace(m.seq, std::move(m));  // hole: buffer, no execution
        return;
    }
    if (m.history != history_extend(history_, m.digest)) return;  // inconsistent order
    execute_speculatively(out, m);
    drain_buffer(out);
}

void ZyzzyvaReplica::drain_buffer(Outputs& out) {
    while (true) {
        auto it = buffered_.find(next_exec_);
        if (it == buffered_.end()) return;
        OrderedRequestMsg m = std::move(it->second);
        buffered_.erase(it);
        if (m.history != history_extend(history_, m.digest)) return;
        execute_speculatively(out, m);
    }
}

void ZyzzyvaReplica::execute_speculatively(Outputs& out, const OrderedRequestMsg& m) {
    history_ = history_extend(history_, m.digest);
    auto executed = exec_.execute(m.batch, 0, 0);
    executed_history_[m.seq] = history_;
    executed_digest_[m.seq] = m.digest;
    next_exec_ = m.seq + 1;
    out.push_back(CommitOut{m.seq, executed.block});
    for (const auto& reply : executed.replies) {
        SpecResponseMsg resp;
        resp.view = m.view;
        resp.seq = m.seq;
        resp.digest = m.digest;
        resp.history = history_;
        resp.request_digest = reply.request_digest;
        resp.result = reply.result;
        resp.replica = ctx_.id;
        out.push_back(SendOut{reply.client, signed_frame(MsgType::spec_response, resp.encode())});
    }
    for (const auto& txn : m.batch) {
        Digest d = txn.digest();
        pool_.completed(d);
        auto timer = relay_timers_.find(d);
        if (timer != relay_timers_.end()) {
            out.push_back(CancelTimerOut{timer->second});
            timer_requests_.erase(timer->second);
            relay_timers_.erase(timer);
        }
    }
}

void ZyzzyvaReplica::handle_commit_cert(Outputs& out, const Frame& frame) {
    CommitCertMsg m = CommitCertMsg::decode(frame.body);
    // The certificate must carry 2f+1 matching responses from distinct
    // replicas, each with a valid authenticator.
    std::set<NodeId> senders;
    for (const auto& bytes : m.response_frames) {
        auto resp = parse_frame(bytes);
        if (!resp || resp->type != MsgType::spec_response) return;
        if (!frame_auth_ok(*resp, *ctx_.keyring)) return;
        auto sr = SpecResponseMsg::decode(resp->body);
        if (sr.seq != m.seq || sr.history != m.history) return;
        senders.insert(sr.replica);
    }
    if (senders.size() < quorum(ctx_.quorum, QuorumKind::commit)) return;

    auto it = executed_history_.find(m.seq);
    if (it != executed_history_.end() && it->second == m.history) {
        committed_[m.seq] = true;
        CommitAckMsg ack{m.seq, m.history};
        out.push_back(SendOut{frame.auth.signer, signed_frame(MsgType::commit_ack, ack.encode())});
    } else if (it != executed_history_.end()) {
        // Certified history conflicts with what we executed: evidence of an
        // equivocating primary; the slow path ends here for this replica.
        out.push_back(ViewChangeOut{view_ + 1});
    }
}

StateSummary ZyzzyvaReplica::inspect() const {
    StateSummary s;
    s.view = view_;
    s.last_committed_seq = next_exec_ - 1;
    for (const auto& [seq, digest] : executed_digest_) s.log_digests.emplace_back(seq, digest);
    return s;
}

}  // namespace bftlab
