// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftlab/sbft.hpp"

namespace bftlab {

SbftReplica::SbftReplica(ReplicaContext ctx) : ReplicaBase(std::move(ctx)) {}

Bytes SbftReplica::order_msg(uint64_t view, uint64_t seq, const Digest& digest) const {
    Writer w;
    w.str("sbft.order");
    w.u64(view);
    w.u64(seq);
    put_digest(w, digest);
    return w.take();
}

Bytes SbftReplica::slow_msg(uint64_t view, uint64_t seq, const Digest& digest) const {
    Writer w;
    w.str("sbft.slow");
    w.u64(view);
    w.u64(seq);
    put_digest(w, digest);
    return w.take();
}

Bytes SbftReplica::exec_msg(uint64_t seq, const Bytes& result) const {
    Writer w;
    w.u64(seq);
    w.blob(result);
    return w.take();
}

Outputs SbftReplica::step(const AutomatonInput& input) {
    Outputs out;
    if (const auto* req = std::get_if<ClientRequest>(&input)) {
        handle_request(out, req->txn);
        return out;
    }
    if (const auto* timer = std::get_if<TimerFire>(&input)) {
        handle_timer(out, timer->timer_id);
        return out;
    }
    const auto& deliver = std::get<Deliver>(input);
    auto frame = checked_frame(deliver.payload);
    if (!frame) return out;
    switch (frame->type) {
        case MsgType::client_request:
            handle_request(out, ClientRequestMsg::decode(frame->body).txn);
            break;
        case MsgType::preprepare: handle_preprepare(out, *frame); break;
        case MsgType::sign_share: handle_sign_share(out, *frame); break;
        case MsgType::full_cert: handle_full_cert(out, *frame); break;
        case MsgType::slow_share: handle_slow_share(out, *frame); break;
        case MsgType::slow_cert: handle_slow_cert(out, *frame); break;
        case MsgType::exec_share: handle_exec_share(out, *frame); break;
        case MsgType::exec_cert: handle_exec_cert(out, *frame); break;
        default: break;
    }
    return out;
}

void SbftReplica::handle_request(Outputs& out, const Transaction& txn) {
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
    out.push_back(SendOut{ctx_.leader_of(view_),
                          signed_frame(MsgType::client_request, ClientRequestMsg{txn}.encode())});
    if (!relay_timers_.count(d)) {
        uint64_t timer_id = next_relay_timer_++;
        relay_timers_[d] = timer_id;
        timer_requests_[timer_id] = d;
        out.push_back(SetTimerOut{timer_id, 20 * ctx_.mean_delay});
    }
}

void SbftReplica::maybe_propose(Outputs& out) {
    while (true) {
        auto batch = pool_.next_batch(ctx_.batch_size);
        if (batch.empty()) return;
        PrePrepareMsg m;
        m.view = view_;
        m.seq = next_seq_++;
        m.digest = batch_digest(batch);
        m.batch = std::move(batch);
        out.push_back(BroadcastOut{signed_frame(MsgType::preprepare, m.encode())});
        accept_proposal(out, m);
    }
}

void SbftReplica::accept_proposal(Outputs& out, const PrePrepareMsg& m) {
    Entry& entry = log_[m.seq];
    if (entry.have_proposal) return;  // duplicate proposal: no second share
    entry.view = m.view;
    entry.seq = m.seq;
    entry.digest = m.digest;
    entry.batch = m.batch;
    entry.have_proposal = true;

    if (!entry.shared) {
        entry.shared = true;
        ThresholdShare share = ctx_.group->share(ctx_.key, order_msg(m.view, m.seq, m.digest));
        if (collector() == ctx_.id) {
            entry.order_shares[m.digest].push_back(share);
            entry.order_share_senders[m.digest].insert(ctx_.id);
            out.push_back(SetTimerOut{kCollectTimerBase + m.seq, 6 * ctx_.mean_delay});
            collector_try_fast(out, entry);
        } else {
            SignShareMsg s{m.view, m.seq, m.digest, share};
            out.push_back(SendOut{collector(), signed_frame(MsgType::sign_share, s.encode())});
        }
    }
    try_execute(out);  // a certificate may have arrived before the proposal
}

void SbftReplica::handle_preprepare(Outputs& out, const Frame& frame) {
    PrePrepareMsg m = PrePrepareMsg::decode(frame.body);
    if (m.view != view_ || frame.auth.signer != ctx_.leader_of(m.view)) return;
    if (m.digest != batch_digest(m.batch)) return;
    for (const auto& txn : m.batch)
        if (!client_auth_ok(txn)) return;
    accept_proposal(out, m);
}

void SbftReplica::handle_sign_share(Outputs& out, const Frame& frame) {
    if (collector() != ctx_.id) return;
    SignShareMsg m = SignShareMsg::decode(frame.body);
    if (m.view != view_) return;
    Entry& entry = log_[m.seq];
    entry.seq = m.seq;
    if (entry.certified) return;
    if (!ctx_.group->verify_share(order_msg(m.view, m.seq, m.digest), m.share)) return;
    bool first_share = entry.order_share_senders.empty();
    if (!entry.order_share_senders[m.digest].insert(m.share.signer).second) return;
    entry.order_shares[m.digest].push_back(m.share);
    if (first_share && !entry.have_proposal)
        out.push_back(SetTimerOut{kCollectTimerBase + m.seq, 6 * ctx_.mean_delay});
    collector_try_fast(out, entry);
}

void SbftReplica::collector_try_fast(Outputs& out, Entry& entry) {
    if (entry.certified || entry.slow_path || !entry.have_proposal) return;
    auto shares = entry.order_shares.find(entry.digest);
    if (shares == entry.order_shares.end()) return;
    if (entry.order_share_senders[entry.digest].size() < fast_threshold()) return;
    ThresholdParams params{fast_threshold(), ctx_.quorum.n};
    ThresholdSignature sig = ctx_.group->combine(shares->second, params);
    out.push_back(CancelTimerOut{kCollectTimerBase + entry.seq});
    FullCertMsg m{entry.view, entry.seq, entry.digest, sig};
    out.push_back(BroadcastOut{signed_frame(MsgType::full_cert, m.encode())});
    mark_certified(out, entry, sig);
}

void SbftReplica::handle_timer(Outputs& out, uint64_t timer_id) {
    if (timer_id >= kCollectTimerBase) {
        // Fast path expired at the collector: two extra linear phases at 2f+1.
        uint64_t seq = timer_id - kCollectTimerBase;
        auto it = log_.find(seq);
        if (it == log_.end() || it->second.certified || it->second.slow_path) return;
        Entry& entry = it->second;
        uint32_t slow_t = quorum(ctx_.quorum, QuorumKind::commit);
        if (!entry.have_proposal ||
            entry.order_share_senders[entry.digest].size() < slow_t) {
            out.push_back(SetTimerOut{timer_id, 6 * ctx_.mean_delay});  // keep waiting
            return;
        }
        entry.slow_path = true;
        ThresholdParams params{slow_t, ctx_.quorum.n};
        ThresholdSignature sig = ctx_.group->combine(entry.order_shares[entry.digest], params);
        SlowCertMsg m{1, entry.view, entry.seq, entry.digest, sig};
        out.push_back(BroadcastOut{signed_frame(MsgType::slow_cert, m.encode())});
        // The collector contributes its own phase-2 share directly.
        ThresholdShare mine = ctx_.group->share(ctx_.key, slow_msg(entry.view, entry.seq, entry.digest));
        entry.slow_shares.push_back(mine);
        entry.slow_share_senders.insert(ctx_.id);
        return;
    }
    if (timer_requests_.count(timer_id)) {
        // Primary suspected; full replacement is out of scope for this module.
        out.push_back(ViewChangeOut{view_ + 1});
    }
}

void SbftReplica::handle_slow_cert(Outputs& out, const Frame& frame) {
    SlowCertMsg m = SlowCertMsg::decode(frame.body);
    if (m.view != view_ || frame.auth.signer != collector()) return;
    uint32_t slow_t = quorum(ctx_.quorum, QuorumKind::commit);
    ThresholdParams params{slow_t, ctx_.quorum.n};
    if (m.phase == 1) {
        if (!ctx_.group->verify(order_msg(m.view, m.seq, m.digest), m.sig, params)) return;
        Entry& entry = log_[m.seq];
        entry.seq = m.seq;
        if (entry.certified) return;
        ThresholdShare share = ctx_.group->share(ctx_.key, slow_msg(m.view, m.seq, m.digest));
        SlowShareMsg reply{2, m.view, m.seq, m.digest, share};
        out.push_back(SendOut{collector(), signed_frame(MsgType::slow_share, reply.encode())});
        return;
    }
    if (!ctx_.group->verify(slow_msg(m.view, m.seq, m.digest), m.sig, params)) return;
    Entry& entry = log_[m.seq];
    entry.seq = m.seq;
    mark_certified(out, entry, m.sig);
}

void SbftReplica::handle_slow_share(Outputs& out, const Frame& frame) {
    if (collector() != ctx_.id) return;
    SlowShareMsg m = SlowShareMsg::decode(frame.body);
    if (m.view != view_ || m.phase != 2) return;
    Entry& entry = log_[m.seq];
    if (entry.certified || !entry.slow_path) return;
    if (!entry.have_proposal || entry.digest != m.digest) return;  // bind to our digest
    if (!ctx_.group->verify_share(slow_msg(m.view, m.seq, m.digest), m.share)) return;
    if (!entry.slow_share_senders.insert(m.share.signer).second) return;
    entry.slow_shares.push_back(m.share);
    uint32_t slow_t = quorum(ctx_.quorum, QuorumKind::commit);
    if (entry.slow_share_senders.size() < slow_t) return;
    ThresholdParams params{slow_t, ctx_.quorum.n};
    ThresholdSignature sig = ctx_.group->combine(entry.slow_shares, params);
    SlowCertMsg cert{2, entry.view, entry.seq, entry.digest, sig};
    out.push_back(BroadcastOut{signed_frame(MsgType::slow_cert, cert.encode())});
    mark_certified(out, entry, sig);
}

void SbftReplica::handle_full_cert(Outputs& out, const Frame& frame) {
    FullCertMsg m = FullCertMsg::decode(frame.body);
    if (m.view != view_ || frame.auth.signer != collector()) return;
    ThresholdParams params{fast_threshold(), ctx_.quorum.n};
    if (!ctx_.group->verify(order_msg(m.view, m.seq, m.digest), m.sig, params)) return;
    Entry& entry = log_[m.seq];
    entry.seq = m.seq;
    mark_certified(out, entry, m.sig);
}

void SbftReplica::mark_certified(Outputs& out, Entry& entry, const ThresholdSignature& sig) {
    if (entry.certified) return;
    entry.certified = true;
    Writer w;
    put_tsig(w, sig);
    entry.order_cert = w.take();
    out.push_back(CancelTimerOut{kCollectTimerBase + entry.seq});
    try_execute(out);
}

void SbftReplica::try_execute(Outputs& out) {
    while (true) {
        auto it = log_.find(next_exec_);
        if (it == log_.end() || !it->second.certified || !it->second.have_proposal) return;
        Entry& entry = it->second;
        if (entry.executed) return;
        auto executed = exec_.execute(entry.batch, 0, 0);
        entry.executed = true;
        ++next_exec_;
        out.push_back(CommitOut{entry.seq, executed.block});

        // One combined result per batch flows to the executor; the executor's
        // certificate answers both replicas and clients.
        Writer rw;
        for (const auto& reply : executed.replies) rw.blob(reply.result);
        Bytes result = rw.take();
        Digest result_digest = sha3_256(result);
        ThresholdShare share = ctx_.group->share(ctx_.key, exec_msg(entry.seq, result));
        if (executor() == ctx_.id) {
            entry.exec_shares[result_digest].push_back(share);
            entry.exec_share_senders[result_digest].insert(ctx_.id);
            entry.exec_results[result_digest] = result;
            executor_try_aggregate(out, entry);
        } else {
            ExecShareMsg m{entry.view, entry.seq, result_digest, result, share};
            out.push_back(SendOut{executor(), signed_frame(MsgType::exec_share, m.encode())});
        }

        for (const auto& txn : entry.batch) {
            Digest d = txn.digest();
            pool_.completed(d);
            auto timer = relay_timers_.find(d);
            if (timer != relay_timers_.end()) {
                out.push_back(CancelTimerOut{timer->second});
                timer_requests_.erase(timer->second);
                relay_timers_.erase(timer);
            }
        }
        if (is_primary()) maybe_propose(out);
    }
}

void SbftReplica::handle_exec_share(Outputs& out, const Frame& frame) {
    if (executor() != ctx_.id) return;
    ExecShareMsg m = ExecShareMsg::decode(frame.body);
    if (m.view != view_) return;
    if (sha3_256(m.result) != m.result_digest) return;
    if (!ctx_.group->verify_share(exec_msg(m.seq, m.result), m.share)) return;
    Entry& entry = log_[m.seq];
    entry.seq = m.seq;
    if (!entry.exec_share_senders[m.result_digest].insert(m.share.signer).second) return;
    entry.exec_shares[m.result_digest].push_back(m.share);
    entry.exec_results[m.result_digest] = m.result;
    executor_try_aggregate(out, entry);
}

void SbftReplica::executor_try_aggregate(Outputs& out, Entry& entry) {
    if (entry.exec_cert_sent || !entry.have_proposal) return;  // batch names the clients
    uint32_t needed = quorum(ctx_.quorum, QuorumKind::sbft_exec);  // f+1 identical
    for (const auto& [digest, senders] : entry.exec_share_senders) {
        if (senders.size() < needed) continue;
        ThresholdParams params{needed, ctx_.quorum.n};
        ThresholdSignature sig = ctx_.group->combine(entry.exec_shares.at(digest), params);
        ExecCertMsg m{entry.view, entry.seq, digest, entry.exec_results.at(digest), sig};
        Bytes payload = signed_frame(MsgType::exec_cert, m.encode());
        entry.exec_cert_sent = true;
        out.push_back(BroadcastOut{payload});
        for (const auto& txn : entry.batch)
            out.push_back(SendOut{static_cast<NodeId>(txn.client_id), payload});
        return;
    }
}

void SbftReplica::handle_exec_cert(Outputs&, const Frame& frame) {
    // Replicas learn the aggregated result; nothing further to do in the
    // simulation (execution already happened locally).
    (void)frame;
}

StateSummary SbftReplica::inspect() const {
    StateSummary s;
    s.view = view_;
    s.last_committed_seq = next_exec_ - 1;
    for (const auto& [seq, entry] : log_)
        if (entry.certified) s.log_digests.emplace_back(seq, entry.digest);
    return s;
}

}  // namespace bftlab
