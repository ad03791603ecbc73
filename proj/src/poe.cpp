// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftlab/poe.hpp"

#include <algorithm>

namespace bftlab {

PoeReplica::PoeReplica(ReplicaContext ctx) : ReplicaBase(std::move(ctx)) {}

Bytes PoeReplica::support_msg(uint64_t view, uint64_t seq, const Digest& digest) const {
    Writer w;
    w.str("poe.support");
    w.u64(view);
    w.u64(seq);
    put_digest(w, digest);
    return w.take();
}

uint64_t PoeReplica::outstanding() const {
    uint64_t count = 0;
    for (const auto& [seq, entry] : log_)
        if (entry.have_proposal && entry.view == view_ && !entry.certified) ++count;
    return count;
}

Outputs PoeReplica::step(const AutomatonInput& input) {
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
        case MsgType::poe_propose: handle_propose(out, *frame); break;
        case MsgType::poe_support: handle_support(out, *frame); break;
        case MsgType::poe_certify: handle_certify(out, *frame); break;
        case MsgType::view_change: handle_view_change(out, *frame); break;
        case MsgType::new_view: handle_new_view(out, *frame); break;
        default: break;
    }
    return out;
}

void PoeReplica::handle_request(Outputs& out, const Transaction& txn) {
    if (!client_auth_ok(txn)) return;
    NodeId client = static_cast<NodeId>(txn.client_id);
    if (const auto* cached = exec_.cached_reply(client, txn.nonce)) {
        reply_to(out, client, cached->request_digest, 0, cached->result);
        return;
    }
    pool_.add(txn);
    if (is_primary() && !in_view_change_) {
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

void PoeReplica::maybe_propose(Outputs& out) {
    // Out-of-order processing: up to `pipeline_window` uncertified proposals
    // may be in flight at once.
    while (outstanding() < ctx_.pipeline_window) {
        auto batch = pool_.next_batch(ctx_.batch_size);
        if (batch.empty()) return;
        PoeProposeMsg m;
        m.view = view_;
        m.seq = next_seq_++;
        m.digest = batch_digest(batch);
        m.batch = std::move(batch);
        out.push_back(BroadcastOut{signed_frame(MsgType::poe_propose, m.encode())});
        accept_propose(out, m, ctx_.id);
    }
}

void PoeReplica::accept_propose(Outputs& out, const PoeProposeMsg& m, NodeId signer) {
    if (m.view != view_ || signer != ctx_.leader_of(m.view)) return;
    if (m.digest != batch_digest(m.batch)) return;
    for (const auto& txn : m.batch)
        if (!client_auth_ok(txn)) return;

    // Support only the first k-th proposal seen in this view.
    auto [it, fresh] = first_seen_.emplace(std::make_pair(m.view, m.seq), m.digest);
    if (!fresh) {
        if (it->second != m.digest) ++equivocation_flags_;
        return;
    }

    Entry& entry = log_[m.seq];
    entry.view = m.view;
    entry.seq = m.seq;
    entry.digest = m.digest;
    entry.batch = m.batch;
    entry.have_proposal = true;
    for (const auto& txn : m.batch) pool_.hold(txn.digest());

    ThresholdShare share = ctx_.group->share(ctx_.key, support_msg(m.view, m.seq, m.digest));
    if (is_primary()) {
        entry.supports.push_back(share);
        entry.support_senders.insert(ctx_.id);
    } else {
        PoeSupportMsg s{m.view, m.seq, m.digest, share};
        out.push_back(SendOut{ctx_.leader_of(m.view),
                              signed_frame(MsgType::poe_support, s.encode())});
    }
    try_execute(out);  // a certificate may have arrived before the proposal
}

bool PoeReplica::stash_if_blocked(const Frame& frame, uint64_t msg_view) {
    if (msg_view < view_) return false;
    if (!in_view_change_ && msg_view == view_) return false;
    if (stashed_frames_.size() < 10000) stashed_frames_.push_back(encode_frame(frame));
    return true;
}

void PoeReplica::replay_stash(Outputs& out) {
    std::vector<Bytes> pending = std::move(stashed_frames_);
    stashed_frames_.clear();
    for (const Bytes& bytes : pending) {
        auto frame = parse_frame(bytes);
        if (!frame) continue;
        switch (frame->type) {
            case MsgType::poe_propose: handle_propose(out, *frame); break;
            case MsgType::poe_support: handle_support(out, *frame); break;
            case MsgType::poe_certify: handle_certify(out, *frame); break;
            default: break;
        }
    }
}

void PoeReplica::handle_propose(Outputs& out, const Frame& frame) {
    if (stash_if_blocked(frame, PoeProposeMsg::decode(frame.body).view)) return;
    accept_propose(out, PoeProposeMsg::decode(frame.body), frame.auth.signer);
}

void PoeReplica::handle_support(Outputs& out, const Frame& frame) {
    PoeSupportMsg m = PoeSupportMsg::decode(frame.body);
    if (stash_if_blocked(frame, m.view)) return;
    if (!is_primary()) return;
    if (m.view != view_) return;
    auto it = log_.find(m.seq);
    if (it == log_.end() || it->second.certify_sent) return;
    Entry& entry = it->second;
    if (entry.digest != m.digest) return;
    if (!ctx_.group->verify_share(support_msg(m.view, m.seq, m.digest), m.share)) return;
    if (!entry.support_senders.insert(m.share.signer).second) return;
    entry.supports.push_back(m.share);

    uint32_t needed = quorum(ctx_.quorum, QuorumKind::poe_client);  // 2f+1
    if (entry.support_senders.size() < needed) return;
    ThresholdParams params{needed, ctx_.quorum.n};
    ThresholdSignature sig = ctx_.group->combine(entry.supports, params);
    entry.certify_sent = true;
    PoeCertifyMsg cert{m.view, m.seq, m.digest, sig};
    out.push_back(BroadcastOut{signed_frame(MsgType::poe_certify, cert.encode())});
    mark_certified(out, m.seq, sig);
    maybe_propose(out);
}

void PoeReplica::handle_certify(Outputs& out, const Frame& frame) {
    PoeCertifyMsg m = PoeCertifyMsg::decode(frame.body);
    if (stash_if_blocked(frame, m.view)) return;
    if (m.view != view_) return;
    ThresholdParams params{quorum(ctx_.quorum, QuorumKind::poe_client), ctx_.quorum.n};
    if (!ctx_.group->verify(support_msg(m.view, m.seq, m.digest), m.sig, params)) return;
    auto it = log_.find(m.seq);
    if (it == log_.end() || it->second.digest != m.digest) return;
    mark_certified(out, m.seq, m.sig);
}

void PoeReplica::mark_certified(Outputs& out, uint64_t seq, const ThresholdSignature& sig) {
    Entry& entry = log_[seq];
    if (entry.certified) return;
    entry.certified = true;
    Writer w;
    put_tsig(w, sig);
    entry.cert_bytes = w.take();
    try_execute(out);
}

void PoeReplica::try_execute(Outputs& out) {
    // Speculative execution strictly in sequence order.
    while (true) {
        auto it = log_.find(next_exec_);
        if (it == log_.end() || !it->second.certified || !it->second.have_proposal) return;
        Entry& entry = it->second;
        auto executed = exec_.execute(entry.batch, 0, 0);
        entry.executed = true;
        ++next_exec_;
        out.push_back(CommitOut{entry.seq, executed.block});
        for (const auto& reply : executed.replies)
            reply_to(out, reply.client, reply.request_digest, entry.seq, reply.result);
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
        if (is_primary() && !in_view_change_) maybe_propose(out);
    }
}

std::vector<LogProof> PoeReplica::certified_proofs() const {
    std::vector<LogProof> proofs;
    for (const auto& [seq, entry] : log_)
        if (entry.certified)
            proofs.push_back(LogProof{entry.view, seq, entry.digest, entry.batch,
                                      entry.cert_bytes});
    return proofs;
}

void PoeReplica::start_view_change(Outputs& out, uint64_t target) {
    if (target <= view_) return;
    if (in_view_change_ && vc_target_ >= target) return;
    in_view_change_ = true;
    vc_target_ = target;
    ViewChangeMsg m;
    m.new_view = target;
    m.proofs = certified_proofs();
    Bytes vc = signed_frame(MsgType::view_change, m.encode());
    vc_frames_[target][ctx_.id] = vc;
    out.push_back(BroadcastOut{vc});
    out.push_back(ViewChangeOut{target});
    uint64_t doubling = std::min<uint64_t>(target - view_, 16);
    out.push_back(SetTimerOut{kViewChangeTimer, (20 * ctx_.mean_delay) << doubling});
    maybe_emit_new_view(out, target);
}

void PoeReplica::handle_view_change(Outputs& out, const Frame& frame) {
    ViewChangeMsg m = ViewChangeMsg::decode(frame.body);
    if (m.new_view <= view_) {
        if (!last_new_view_.empty())
            out.push_back(SendOut{frame.auth.signer, last_new_view_});
        return;
    }
    vc_frames_[m.new_view][frame.auth.signer] = encode_frame(frame);

    std::set<NodeId> demanding;
    uint64_t smallest = 0;
    for (const auto& [target, senders] : vc_frames_) {
        if (target <= view_) continue;
        for (const auto& [sender, bytes] : senders) demanding.insert(sender);
        if (smallest == 0) smallest = target;
    }
    if (!in_view_change_ && demanding.size() >= ctx_.quorum.f + 1)
        start_view_change(out, smallest);

    maybe_emit_new_view(out, m.new_view);
}

void PoeReplica::maybe_emit_new_view(Outputs& out, uint64_t target) {
    if (target <= view_) return;
    if (ctx_.leader_of(target) != ctx_.id || done_views_.count(target)) return;
    auto it = vc_frames_.find(target);
    if (it == vc_frames_.end()) return;
    if (it->second.size() < quorum(ctx_.quorum, QuorumKind::view_change)) return;

    // The certified set carried into the new view: strongest (highest-view)
    // certificate per sequence across the collected view changes.
    ThresholdParams params{quorum(ctx_.quorum, QuorumKind::poe_client), ctx_.quorum.n};
    std::map<uint64_t, LogProof> carried;
    for (const auto& [sender, vc_bytes] : it->second) {
        auto vc_frame = parse_frame(vc_bytes);
        if (!vc_frame) continue;
        for (const auto& proof : ViewChangeMsg::decode(vc_frame->body).proofs) {
            try {
                Reader r(proof.cert);
                ThresholdSignature sig = get_tsig(r);
                if (!ctx_.group->verify(support_msg(proof.view, proof.seq, proof.digest), sig,
                                        params))
                    continue;
            } catch (const DecodeError&) {
                continue;
            }
            auto existing = carried.find(proof.seq);
            if (existing == carried.end() || proof.view > existing->second.view)
                carried[proof.seq] = proof;
        }
    }

    done_views_.insert(target);
    NewViewMsg nv;
    nv.new_view = target;
    for (const auto& [sender, vc_bytes] : it->second) nv.view_change_frames.push_back(vc_bytes);

    uint64_t max_seq = 0;
    for (const auto& [seq, proof] : carried) max_seq = std::max(max_seq, seq);
    for (uint64_t seq = 1; seq <= max_seq; ++seq) {
        PoeProposeMsg pp;
        pp.view = target;
        pp.seq = seq;
        auto proof = carried.find(seq);
        if (proof != carried.end()) {
            pp.digest = proof->second.digest;
            pp.batch = proof->second.batch;
        } else {
            pp.digest = batch_digest({});  // uncovered gap becomes a no-op
        }
        nv.preprepare_frames.push_back(signed_frame(MsgType::poe_propose, pp.encode()));
    }
    Bytes nv_frame = signed_frame(MsgType::new_view, nv.encode());
    last_new_view_ = nv_frame;
    out.push_back(BroadcastOut{std::move(nv_frame)});
    adopt_new_view(out, target, nv.preprepare_frames);
}

void PoeReplica::handle_new_view(Outputs& out, const Frame& frame) {
    NewViewMsg m = NewViewMsg::decode(frame.body);
    if (m.new_view <= view_) return;
    if (frame.auth.signer != ctx_.leader_of(m.new_view)) return;
    std::set<NodeId> senders;
    for (const auto& vc_bytes : m.view_change_frames) {
        auto vc = parse_frame(vc_bytes);
        if (!vc || vc->type != MsgType::view_change) return;
        if (!frame_auth_ok(*vc, *ctx_.keyring)) return;
        if (ViewChangeMsg::decode(vc->body).new_view != m.new_view) return;
        senders.insert(vc->auth.signer);
    }
    if (senders.size() < quorum(ctx_.quorum, QuorumKind::view_change)) return;
    done_views_.insert(m.new_view);
    last_new_view_ = encode_frame(frame);
    adopt_new_view(out, m.new_view, m.preprepare_frames);
}

void PoeReplica::adopt_new_view(Outputs& out, uint64_t new_view,
                                const std::vector<Bytes>& propose_frames) {
    view_ = new_view;
    in_view_change_ = false;
    vc_target_ = 0;
    out.push_back(CancelTimerOut{kViewChangeTimer});

    // Decode the re-issued proposals; their extent decides what survives.
    std::map<uint64_t, PoeProposeMsg> reissued;
    uint64_t max_carried = 0;
    for (const auto& bytes : propose_frames) {
        auto f = parse_frame(bytes);
        if (!f || f->type != MsgType::poe_propose || !frame_auth_ok(*f, *ctx_.keyring)) continue;
        PoeProposeMsg pp = PoeProposeMsg::decode(f->body);
        if (pp.view != new_view) continue;
        max_carried = std::max(max_carried, pp.seq);
        reissued.emplace(pp.seq, std::move(pp));
    }

    // Roll back speculative execution the new view does not vouch for:
    // anything above the carried maximum, or diverging from a re-issue.
    uint64_t keep = next_exec_ - 1;
    for (uint64_t s = 1; s < next_exec_; ++s) {
        auto re = reissued.find(s);
        bool survives = s <= max_carried && re != reissued.end() &&
                        log_.count(s) && log_[s].digest == re->second.digest;
        if (!survives) {
            keep = s - 1;
            break;
        }
    }
    if (keep < next_exec_ - 1) {
        if (keep + 1 > exec_.next_number()) throw UndoUnavailable();
        // Undo records apply in reverse sequence order.
        for (uint64_t s = next_exec_ - 1; s > keep; --s) {
            auto it = log_.find(s);
            if (it == log_.end()) continue;
            for (const auto& txn : it->second.batch) pool_.reopen(txn);
            log_.erase(it);
        }
        exec_.undo_to(keep);
        ++rollbacks_;
        out.push_back(RollbackOut{keep});
        next_exec_ = keep + 1;
    }
    // Entries beyond the executed frontier restart from scratch in the new
    // view; drop their per-view vote state.
    for (auto it = log_.begin(); it != log_.end();) {
        if (it->first >= next_exec_ && !it->second.executed) {
            for (const auto& txn : it->second.batch) pool_.reopen(txn);
            it = log_.erase(it);
        } else {
            ++it;
        }
    }
    next_seq_ = std::max(next_exec_, max_carried + 1);

    for (const auto& bytes : propose_frames) {
        auto f = parse_frame(bytes);
        if (f && f->type == MsgType::poe_propose && frame_auth_ok(*f, *ctx_.keyring)) {
            PoeProposeMsg pp = PoeProposeMsg::decode(f->body);
            if (pp.seq >= next_exec_) accept_propose(out, pp, f->auth.signer);
        }
    }
    replay_stash(out);
    for (const auto& [digest, timer_id] : relay_timers_)
        out.push_back(SetTimerOut{timer_id, (20 * ctx_.mean_delay) << std::min<uint64_t>(view_, 16)});
    if (is_primary()) {
        pool_.reset_in_flight();
        maybe_propose(out);
    }
}

void PoeReplica::handle_timer(Outputs& out, uint64_t timer_id) {
    if (timer_id == kViewChangeTimer) {
        if (in_view_change_ && !timer_requests_.empty()) start_view_change(out, vc_target_ + 1);
        return;
    }
    auto it = timer_requests_.find(timer_id);
    if (it == timer_requests_.end()) return;
    if (!in_view_change_) start_view_change(out, view_ + 1);
    out.push_back(SetTimerOut{timer_id, (20 * ctx_.mean_delay) << std::min<uint64_t>(view_, 16)});
}

StateSummary PoeReplica::inspect() const {
    StateSummary s;
    s.view = view_;
    s.last_committed_seq = next_exec_ - 1;
    for (const auto& [seq, entry] : log_)
        if (entry.certified) s.log_digests.emplace_back(seq, entry.digest);
    return s;
}

}  // namespace bftlab
