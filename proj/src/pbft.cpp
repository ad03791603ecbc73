// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftlab/pbft.hpp"

#include <algorithm>

namespace bftlab {

PbftReplica::PbftReplica(ReplicaContext ctx) : ReplicaBase(std::move(ctx)) {}

const PbftReplica::LogEntry* PbftReplica::entry(uint64_t seq) const {
    auto it = log_.find(seq);
    return it == log_.end() ? nullptr : &it->second;
}

Tick PbftReplica::relay_timeout() const {
    uint64_t doubling = std::min<uint64_t>(view_, 16);
    return (ctx_.relay_timeout_factor * ctx_.mean_delay) << doubling;
}

Outputs PbftReplica::step(const AutomatonInput& input) {
    Outputs out;
    if (const auto* req = std::get_if<ClientRequest>(&input)) {
        handle_request(out, req->txn, false);
        return out;
    }
    if (const auto* timer = std::get_if<TimerFire>(&input)) {
        handle_timer(out, timer->timer_id);
        return out;
    }
    const auto& deliver = std::get<Deliver>(input);
    auto frame = checked_frame(deliver.payload);
    if (!frame) {
        ++suspicious_;
        return out;
    }
    switch (frame->type) {
        case MsgType::client_request: {
            auto m = ClientRequestMsg::decode(frame->body);
            handle_request(out, m.txn, true);
            break;
        }
        case MsgType::preprepare: handle_preprepare(out, *frame); break;
        case MsgType::prepare: handle_prepare(out, *frame); break;
        case MsgType::commit: handle_commit(out, *frame); break;
        case MsgType::view_change: handle_view_change(out, *frame); break;
        case MsgType::new_view: handle_new_view(out, *frame); break;
        default: break;
    }
    return out;
}

void PbftReplica::handle_request(Outputs& out, const Transaction& txn, bool) {
    if (!client_auth_ok(txn)) return;  // BadClientAuth
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
    // Backup: relay to the primary and watch it with a timer.
    Digest d = txn.digest();
    ClientRequestMsg m{txn};
    out.push_back(SendOut{ctx_.leader_of(view_), signed_frame(MsgType::client_request, m.encode())});
    if (!relay_timers_.count(d)) {
        uint64_t timer_id = next_relay_timer_++;
        relay_timers_[d] = timer_id;
        timer_requests_[timer_id] = d;
        out.push_back(SetTimerOut{timer_id, relay_timeout()});
    }
}

void PbftReplica::maybe_propose(Outputs& out) {
    while (true) {
        auto batch = pool_.next_batch(ctx_.batch_size);
        if (batch.empty()) return;
        uint64_t seq = next_seq_++;
        PrePrepareMsg m;
        m.view = view_;
        m.seq = seq;
        m.digest = batch_digest(batch);
        m.batch = batch;
        for (const auto& txn : batch) assigned_[txn.digest()] = seq;

        LogEntry& entry = log_[seq];
        entry.view = view_;
        entry.seq = seq;
        entry.digest = m.digest;
        entry.batch = batch;
        entry.have_preprepare = true;
        entry.status = Status::preprepared;
        out.push_back(BroadcastOut{signed_frame(MsgType::preprepare, m.encode())});
        check_prepared(out, entry);
    }
}

void PbftReplica::adopt_preprepare(Outputs& out, const Frame& frame, bool from_new_view) {
    PrePrepareMsg m = PrePrepareMsg::decode(frame.body);
    if (m.view != view_) return;
    if (frame.auth.signer != ctx_.leader_of(m.view)) return;          // check (ii)
    if (m.digest != batch_digest(m.batch)) return;
    for (const auto& txn : m.batch)
        if (!client_auth_ok(txn)) return;                             // check (i)

    LogEntry& entry = log_[m.seq];
    if (entry.have_preprepare && entry.view == m.view) {
        if (entry.digest != m.digest) ++suspicious_;                  // check (iii)
        return;
    }
    if (entry.status == Status::executed && entry.digest != m.digest) {
        ++suspicious_;
        return;
    }
    entry.view = m.view;
    entry.seq = m.seq;
    entry.digest = m.digest;
    entry.batch = m.batch;
    entry.have_preprepare = true;
    if (entry.status == Status::idle) entry.status = Status::preprepared;
    for (const auto& txn : m.batch) pool_.hold(txn.digest());

    if (ctx_.id != ctx_.leader_of(m.view)) {
        PrepareMsg p{m.view, m.seq, m.digest};
        entry.prepare_votes[m.digest].insert(ctx_.id);
        out.push_back(BroadcastOut{signed_frame(MsgType::prepare, p.encode())});
    }
    (void)from_new_view;
    check_prepared(out, entry);
}

// Deliveries are not FIFO: a message for the view we are about to enter can
// overtake the new-view announcement. Park it and replay after adoption.
bool PbftReplica::stash_if_blocked(const Frame& frame, uint64_t msg_view) {
    if (msg_view < view_) return false;
    if (!in_view_change_ && msg_view == view_) return false;
    if (stashed_frames_.size() < 10000) stashed_frames_.push_back(encode_frame(frame));
    return true;
}

void PbftReplica::replay_stash(Outputs& out) {
    std::vector<Bytes> pending = std::move(stashed_frames_);
    stashed_frames_.clear();
    for (const Bytes& bytes : pending) {
        auto frame = parse_frame(bytes);
        if (!frame) continue;
        switch (frame->type) {
            case MsgType::preprepare: handle_preprepare(out, *frame); break;
            case MsgType::prepare: handle_prepare(out, *frame); break;
            case MsgType::commit: handle_commit(out, *frame); break;
            default: break;
        }
    }
}

void PbftReplica::handle_preprepare(Outputs& out, const Frame& frame) {
    if (stash_if_blocked(frame, PrePrepareMsg::decode(frame.body).view)) return;
    adopt_preprepare(out, frame, false);
}

void PbftReplica::check_prepared(Outputs& out, LogEntry& entry) {
    if (entry.status != Status::preprepared || !entry.have_preprepare) return;
    uint32_t needed = quorum(ctx_.quorum, QuorumKind::prepare);
    if (entry.prepare_votes[entry.digest].size() < needed) return;
    entry.status = Status::prepared;
    CommitMsg c{entry.view, entry.seq, entry.digest};
    entry.commit_votes[entry.digest].insert(ctx_.id);
    out.push_back(BroadcastOut{signed_frame(MsgType::commit, c.encode())});
    check_committed(out, entry);
}

void PbftReplica::handle_prepare(Outputs& out, const Frame& frame) {
    PrepareMsg m = PrepareMsg::decode(frame.body);
    if (stash_if_blocked(frame, m.view)) return;
    if (m.view != view_) return;
    if (frame.auth.signer == ctx_.leader_of(m.view)) return;  // the primary never prepares
    LogEntry& entry = log_[m.seq];
    entry.seq = m.seq;
    entry.prepare_votes[m.digest].insert(frame.auth.signer);
    check_prepared(out, entry);
}

void PbftReplica::check_committed(Outputs& out, LogEntry& entry) {
    if (entry.status != Status::prepared) return;
    uint32_t needed = quorum(ctx_.quorum, QuorumKind::commit);
    if (entry.commit_votes[entry.digest].size() < needed) return;
    entry.status = Status::committed;
    try_execute(out);
}

void PbftReplica::handle_commit(Outputs& out, const Frame& frame) {
    CommitMsg m = CommitMsg::decode(frame.body);
    if (stash_if_blocked(frame, m.view)) return;
    if (m.view != view_) return;
    LogEntry& entry = log_[m.seq];
    entry.seq = m.seq;
    entry.commit_votes[m.digest].insert(frame.auth.signer);
    check_committed(out, entry);
}

void PbftReplica::try_execute(Outputs& out) {
    while (true) {
        auto it = log_.find(next_exec_);
        if (it == log_.end() || it->second.status != Status::committed) return;
        LogEntry& entry = it->second;
        // Only agreement-bound data may enter the block: the local view at
        // execution time differs across replicas after view changes.
        auto executed = exec_.execute(entry.batch, 0, 0);
        entry.status = Status::executed;
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

std::vector<LogProof> PbftReplica::prepared_proofs() const {
    std::vector<LogProof> proofs;
    for (const auto& [seq, entry] : log_) {
        if (entry.status == Status::prepared || entry.status == Status::committed ||
            entry.status == Status::executed) {
            proofs.push_back(LogProof{entry.view, seq, entry.digest, entry.batch, {}});
        }
    }
    return proofs;
}

void PbftReplica::start_view_change(Outputs& out, uint64_t target) {
    if (target <= view_) return;
    if (in_view_change_ && vc_target_ >= target) return;
    in_view_change_ = true;
    vc_target_ = target;
    ViewChangeMsg m;
    m.new_view = target;
    m.proofs = prepared_proofs();
    Bytes vc = signed_frame(MsgType::view_change, m.encode());
    vc_frames_[target][ctx_.id] = vc;
    out.push_back(BroadcastOut{vc});
    out.push_back(ViewChangeOut{target});
    uint64_t doubling = std::min<uint64_t>(target - view_, 16);
    out.push_back(SetTimerOut{kViewChangeTimer, (20 * ctx_.mean_delay) << doubling});
    maybe_emit_new_view(out, target);
}

void PbftReplica::handle_view_change(Outputs& out, const Frame& frame) {
    ViewChangeMsg m = ViewChangeMsg::decode(frame.body);
    if (m.new_view <= view_) {
        // A replica still trying to leave a view we already left: hand it
        // the new-view evidence so it can catch up.
        if (!last_new_view_.empty())
            out.push_back(SendOut{frame.auth.signer, last_new_view_});
        return;
    }
    vc_frames_[m.new_view][frame.auth.signer] = encode_frame(frame);

    // f+1 replicas demanding views above ours pulls us in as well.
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

void PbftReplica::maybe_emit_new_view(Outputs& out, uint64_t target) {
    if (target <= view_) return;
    if (ctx_.leader_of(target) != ctx_.id) return;
    if (done_views_.count(target)) return;
    auto it = vc_frames_.find(target);
    if (it == vc_frames_.end()) return;
    if (it->second.size() < quorum(ctx_.quorum, QuorumKind::view_change)) return;

    // Strongest proof per sequence across the collected view changes.
    std::map<uint64_t, LogProof> strongest;
    for (const auto& [sender, vc_bytes] : it->second) {
        auto vc_frame = parse_frame(vc_bytes);
        if (!vc_frame) continue;
        ViewChangeMsg vc = ViewChangeMsg::decode(vc_frame->body);
        for (const auto& proof : vc.proofs) {
            auto existing = strongest.find(proof.seq);
            if (existing == strongest.end() || proof.view > existing->second.view)
                strongest[proof.seq] = proof;
        }
    }

    done_views_.insert(target);
    view_ = target;
    in_view_change_ = false;
    vc_target_ = 0;
    out.push_back(CancelTimerOut{kViewChangeTimer});

    NewViewMsg nv;
    nv.new_view = target;
    for (const auto& [sender, vc_bytes] : it->second) nv.view_change_frames.push_back(vc_bytes);

    uint64_t max_seq = next_exec_ - 1;
    for (const auto& [seq, proof] : strongest) max_seq = std::max(max_seq, seq);
    // Re-issue the full proved log from sequence 1: replicas that already
    // executed a prefix ignore the old entries, while replicas that fell
    // behind in an abandoned view change replay them and catch up.
    for (uint64_t seq = 1; seq <= max_seq; ++seq) {
        PrePrepareMsg pp;
        pp.view = target;
        pp.seq = seq;
        auto proof = strongest.find(seq);
        if (proof != strongest.end()) {
            pp.digest = proof->second.digest;
            pp.batch = proof->second.batch;
        } else {
            pp.digest = batch_digest({});  // null request fills the gap
        }
        nv.preprepare_frames.push_back(signed_frame(MsgType::preprepare, pp.encode()));
    }
    next_seq_ = max_seq + 1;

    Bytes nv_frame = signed_frame(MsgType::new_view, nv.encode());
    last_new_view_ = nv_frame;
    out.push_back(BroadcastOut{std::move(nv_frame)});
    pool_.reset_in_flight();
    for (const auto& pp_bytes : nv.preprepare_frames) {
        auto pp_frame = parse_frame(pp_bytes);
        if (pp_frame) adopt_preprepare(out, *pp_frame, true);
    }
    replay_stash(out);
    maybe_propose(out);
}

void PbftReplica::handle_new_view(Outputs& out, const Frame& frame) {
    NewViewMsg m = NewViewMsg::decode(frame.body);
    if (m.new_view <= view_) return;
    if (frame.auth.signer != ctx_.leader_of(m.new_view)) return;

    // Re-check every embedded view-change authenticator.
    std::set<NodeId> senders;
    for (const auto& vc_bytes : m.view_change_frames) {
        auto vc = parse_frame(vc_bytes);
        if (!vc || vc->type != MsgType::view_change) return;
        if (!frame_auth_ok(*vc, *ctx_.keyring)) return;
        if (ViewChangeMsg::decode(vc->body).new_view != m.new_view) return;
        senders.insert(vc->auth.signer);
    }
    if (senders.size() < quorum(ctx_.quorum, QuorumKind::view_change)) return;

    view_ = m.new_view;
    in_view_change_ = false;
    vc_target_ = 0;
    done_views_.insert(view_);
    last_new_view_ = encode_frame(frame);
    out.push_back(CancelTimerOut{kViewChangeTimer});
    if (is_primary()) pool_.reset_in_flight();
    for (const auto& pp_bytes : m.preprepare_frames) {
        auto pp = parse_frame(pp_bytes);
        if (pp && pp->type == MsgType::preprepare && frame_auth_ok(*pp, *ctx_.keyring))
            adopt_preprepare(out, *pp, true);
    }
    replay_stash(out);
    // Unserved relayed requests get fresh, longer timers in the new view.
    for (const auto& [digest, timer_id] : relay_timers_)
        out.push_back(SetTimerOut{timer_id, relay_timeout()});
    if (is_primary()) maybe_propose(out);
}

void PbftReplica::handle_timer(Outputs& out, uint64_t timer_id) {
    if (timer_id == kViewChangeTimer) {
        if (in_view_change_ && !timer_requests_.empty()) start_view_change(out, vc_target_ + 1);
        return;
    }
    auto it = timer_requests_.find(timer_id);
    if (it == timer_requests_.end()) return;
    // The primary failed to serve a relayed request in time. Visible
    // execution progress since the last expiry defers suspicion, and the
    // view-change timer owns escalation once a change is under way.
    if (next_exec_ > exec_at_last_expiry_) {
        exec_at_last_expiry_ = next_exec_;
    } else if (!in_view_change_) {
        start_view_change(out, view_ + 1);
    }
    out.push_back(SetTimerOut{timer_id, relay_timeout()});
}

StateSummary PbftReplica::inspect() const {
    StateSummary s;
    s.view = view_;
    s.last_committed_seq = next_exec_ - 1;
    for (const auto& [seq, entry] : log_) {
        if (entry.status == Status::prepared || entry.status == Status::committed ||
            entry.status == Status::executed)
            s.log_digests.emplace_back(seq, entry.digest);
    }
    return s;
}

}  // namespace bftlab
