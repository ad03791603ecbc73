// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftlab/multiconsensus.hpp"

#include <algorithm>

namespace bftlab {

Bytes InstanceMux::wrap(uint32_t instance, const Bytes& inner_payload) const {
    InstanceWrapMsg m{instance, inner_payload};
    return make_frame(MsgType::instance_wrap, m.encode(), key_, kind_);
}

InstanceMux::Translated InstanceMux::translate(uint32_t instance, Outputs inner) const {
    Translated result;
    for (auto& output : inner) {
        if (auto* send = std::get_if<SendOut>(&output)) {
            if (send->dst >= replica_count_) continue;  // inner client replies are ours to make
            result.outer.push_back(SendOut{send->dst, wrap(instance, send->payload)});
        } else if (auto* bc = std::get_if<BroadcastOut>(&output)) {
            if (own_frame_cb_) {
                auto frame = parse_frame(bc->payload);
                if (frame) own_frame_cb_(*frame);
            }
            Bytes wrapped = wrap(instance, bc->payload);
            if (members_) {
                for (NodeId member : *members_)
                    if (member != self_) result.outer.push_back(SendOut{member, wrapped});
            } else {
                result.outer.push_back(BroadcastOut{std::move(wrapped)});
            }
        } else if (auto* commit = std::get_if<CommitOut>(&output)) {
            result.commits.push_back(std::move(*commit));
        } else if (auto* set = std::get_if<SetTimerOut>(&output)) {
            result.outer.push_back(SetTimerOut{set->id + instance * kStride, set->duration});
        } else if (auto* cancel = std::get_if<CancelTimerOut>(&output)) {
            result.outer.push_back(CancelTimerOut{cancel->id + instance * kStride});
        } else if (auto* vc = std::get_if<ViewChangeOut>(&output)) {
            result.outer.push_back(*vc);
        }
        // ReplyOut / RollbackOut from inner instances are dropped.
    }
    return result;
}

// --- RCC ---

RccReplica::RccReplica(ReplicaContext ctx, uint32_t z)
    : ctx_(std::move(ctx)),
      z_(z),
      mux_(ctx_.id, ctx_.quorum.n, ctx_.key, ctx_.auth_kind),
      decided_(z),
      total_decided_(z, 0),
      noop_outstanding_(z, false) {
    for (uint32_t i = 0; i < z_; ++i) {
        ReplicaContext inner = ctx_;
        uint32_t n = ctx_.quorum.n;
        inner.leader_schedule = [i, n](uint64_t view) {
            return static_cast<NodeId>((view + i) % n);
        };
        instances_.push_back(std::make_unique<PbftReplica>(inner));
    }
}

void RccReplica::dispatch_inner(Outputs& out, uint32_t instance, const AutomatonInput& input) {
    auto translated = mux_.translate(instance, instances_[instance]->step(input));
    out.insert(out.end(), translated.outer.begin(), translated.outer.end());
    for (auto& commit : translated.commits) {
        decided_[instance].push_back(commit.block.transactions);
        ++total_decided_[instance];
        noop_outstanding_[instance] = false;
    }
    unify(out);
}

Outputs RccReplica::step(const AutomatonInput& input) {
    Outputs out;
    if (const auto* req = std::get_if<ClientRequest>(&input)) {
        dispatch_inner(out, static_cast<uint32_t>(req->txn.client_id) % z_, input);
    } else if (const auto* timer = std::get_if<TimerFire>(&input)) {
        uint32_t instance = static_cast<uint32_t>(timer->timer_id / InstanceMux::kStride);
        if (instance >= z_) return out;
        dispatch_inner(out, instance,
                       AutomatonInput{TimerFire{timer->timer_id % InstanceMux::kStride}});
    } else {
        const auto& deliver = std::get<Deliver>(input);
        auto frame = parse_frame(deliver.payload);
        if (!frame) return out;
        if (frame->type == MsgType::client_request) {
            auto m = ClientRequestMsg::decode(frame->body);
            dispatch_inner(out, static_cast<uint32_t>(m.txn.client_id) % z_, input);
        } else if (frame->type == MsgType::instance_wrap) {
            auto m = InstanceWrapMsg::decode(frame->body);
            if (m.instance >= z_) return out;
            dispatch_inner(out, m.instance, AutomatonInput{Deliver{m.inner, deliver.src}});
        }
    }
    apply_noop_pressure(out);
    return out;
}

void RccReplica::unify(Outputs& out) {
    // A round completes when every instance has replicated its next batch;
    // execution applies them in ascending instance order as one block.
    while (true) {
        bool complete = true;
        for (uint32_t i = 0; i < z_; ++i)
            if (decided_[i].empty()) complete = false;
        if (!complete) return;
        std::vector<Transaction> combined;
        for (uint32_t i = 0; i < z_; ++i) {
            auto& batch = decided_[i].front();
            combined.insert(combined.end(), batch.begin(), batch.end());
            decided_[i].pop_front();
        }
        auto executed = exec_.execute(combined, next_round_, 0);
        out.push_back(CommitOut{next_round_, executed.block});
        ++next_round_;
        for (const auto& reply : executed.replies) {
            if (reply.client < ctx_.quorum.n) continue;  // no-op filler, not a client
            ClientReplyMsg m{reply.request_digest, next_round_ - 1, reply.result, ctx_.id};
            out.push_back(SendOut{reply.client,
                                  make_frame(MsgType::client_reply, m.encode(), ctx_.key,
                                             ctx_.auth_kind)});
        }
    }
}

void RccReplica::apply_noop_pressure(Outputs& out) {
    // An instance starved of requests blocks unification for everyone; its
    // primary proposes a no-op to let the round close. One no-op at a time
    // per instance.
    uint64_t max_total = *std::max_element(total_decided_.begin(), total_decided_.end());
    for (uint32_t i = 0; i < z_; ++i) {
        if (total_decided_[i] >= max_total || noop_outstanding_[i]) continue;
        PbftReplica& inst = *instances_[i];
        NodeId primary = (inst.view() + i) % ctx_.quorum.n;
        if (primary != ctx_.id || inst.pool_has_pending() || !inst.primary_idle()) continue;
        noop_outstanding_[i] = true;
        Transaction noop;
        noop.client_id = ctx_.id;
        noop.nonce = ++noop_nonce_;
        noop.payload = to_bytes("noop");
        noop.client_auth = sign(ctx_.key, AuthKind::signature, noop.signing_bytes());
        dispatch_inner(out, i, AutomatonInput{ClientRequest{noop}});
    }
}

StateSummary RccReplica::inspect() const {
    StateSummary s;
    s.view = instances_[0]->view();
    s.last_committed_seq = next_round_ - 1;
    return s;
}

// --- RBFT ---

RbftReplica::RbftReplica(ReplicaContext ctx, double degradation_ratio, Tick monitor_window)
    : ctx_(std::move(ctx)),
      instance_count_(ctx_.quorum.f + 1),
      mux_(ctx_.id, ctx_.quorum.n, ctx_.key, ctx_.auth_kind),
      window_counts_(instance_count_, 0),
      degradation_ratio_(degradation_ratio),
      monitor_window_(monitor_window) {
    for (uint32_t i = 0; i < instance_count_; ++i) {
        ReplicaContext inner = ctx_;
        uint32_t n = ctx_.quorum.n;
        inner.leader_schedule = [i, n](uint64_t view) {
            return static_cast<NodeId>((view + i) % n);
        };
        // The throughput monitor, not the per-request timer, is the failure
        // detector here: a clever primary stays below any timeout threshold.
        inner.relay_timeout_factor = 2000;
        instances_.push_back(std::make_unique<PbftReplica>(inner));
    }
}

void RbftReplica::dispatch_inner(Outputs& out, uint32_t instance, const AutomatonInput& input) {
    auto translated = mux_.translate(instance, instances_[instance]->step(input));
    out.insert(out.end(), translated.outer.begin(), translated.outer.end());
    for (auto& commit : translated.commits) {
        window_counts_[instance] += commit.block.transactions.size();
        if (instance != 0) continue;  // only the master instance executes
        auto executed = exec_.execute(commit.block.transactions, commit.block.meta.view,
                                      commit.block.meta.proposer);
        out.push_back(CommitOut{next_commit_seq_++, executed.block});
        for (const auto& reply : executed.replies) {
            if (outstanding_requests_ > 0) --outstanding_requests_;
            ClientReplyMsg m{reply.request_digest, next_commit_seq_ - 1, reply.result, ctx_.id};
            out.push_back(SendOut{reply.client,
                                  make_frame(MsgType::client_reply, m.encode(), ctx_.key,
                                             ctx_.auth_kind)});
        }
    }
}

void RbftReplica::feed_request(Outputs& out, const Transaction& txn, bool already_propagated) {
    Digest d = txn.digest();
    if (propagated_.count(d)) return;
    propagated_.insert(d);
    ++outstanding_requests_;
    if (!already_propagated) {
        PropagateMsg m{txn};
        out.push_back(BroadcastOut{
            make_frame(MsgType::propagate, m.encode(), ctx_.key, ctx_.auth_kind)});
    }
    for (uint32_t i = 0; i < instance_count_; ++i)
        dispatch_inner(out, i, AutomatonInput{ClientRequest{txn}});
    if (!monitor_armed_) {
        monitor_armed_ = true;
        out.push_back(SetTimerOut{kMonitorTimer, monitor_window_});
    }
}

Outputs RbftReplica::step(const AutomatonInput& input) {
    Outputs out;
    if (const auto* req = std::get_if<ClientRequest>(&input)) {
        feed_request(out, req->txn, false);
        return out;
    }
    if (const auto* timer = std::get_if<TimerFire>(&input)) {
        if (timer->timer_id == kMonitorTimer) {
            window_tick(out);
            return out;
        }
        uint32_t instance = static_cast<uint32_t>(timer->timer_id / InstanceMux::kStride);
        if (instance >= instance_count_) return out;
        dispatch_inner(out, instance,
                       AutomatonInput{TimerFire{timer->timer_id % InstanceMux::kStride}});
        return out;
    }
    const auto& deliver = std::get<Deliver>(input);
    auto frame = parse_frame(deliver.payload);
    if (!frame) return out;
    switch (frame->type) {
        case MsgType::client_request:
            feed_request(out, ClientRequestMsg::decode(frame->body).txn, false);
            break;
        case MsgType::propagate:
            feed_request(out, PropagateMsg::decode(frame->body).txn, true);
            break;
        case MsgType::replace_vote: {
            auto m = ReplaceVoteMsg::decode(frame->body);
            replace_votes_[m.epoch].insert(frame->auth.signer);
            uint64_t master_view = instances_[0]->view();
            if (m.epoch == master_view &&
                replace_votes_[m.epoch].size() >= quorum(ctx_.quorum, QuorumKind::view_change) &&
                !replaced_epochs_.count(m.epoch)) {
                replaced_epochs_.insert(m.epoch);
                ++replacements_;
                Outputs forced;
                instances_[0]->force_view_change(forced);
                auto translated = mux_.translate(0, std::move(forced));
                out.insert(out.end(), translated.outer.begin(), translated.outer.end());
            }
            break;
        }
        case MsgType::instance_wrap: {
            auto m = InstanceWrapMsg::decode(frame->body);
            if (m.instance >= instance_count_) return out;
            dispatch_inner(out, m.instance, AutomatonInput{Deliver{m.inner, deliver.src}});
            break;
        }
        default: break;
    }
    return out;
}

void RbftReplica::window_tick(Outputs& out) {
    uint64_t master = window_counts_[0];
    uint64_t best_backup = 0;
    for (uint32_t i = 1; i < instance_count_; ++i)
        best_backup = std::max(best_backup, window_counts_[i]);
    // A master ordering markedly slower than a backup instance points at a
    // clever throttling primary.
    uint64_t epoch = instances_[0]->view();
    if (static_cast<double>(best_backup) * degradation_ratio_ > static_cast<double>(master) &&
        !voted_epochs_.count(epoch)) {
        voted_epochs_.insert(epoch);
        ReplaceVoteMsg m{epoch};
        Bytes payload = make_frame(MsgType::replace_vote, m.encode(), ctx_.key, ctx_.auth_kind);
        out.push_back(BroadcastOut{payload});
        replace_votes_[epoch].insert(ctx_.id);
    }
    std::fill(window_counts_.begin(), window_counts_.end(), 0);
    if (outstanding_requests_ > 0) {
        out.push_back(SetTimerOut{kMonitorTimer, monitor_window_});
    } else {
        monitor_armed_ = false;
    }
}

StateSummary RbftReplica::inspect() const {
    StateSummary s;
    s.view = instances_[0]->view();
    s.last_committed_seq = next_commit_seq_ - 1;
    return s;
}

// --- GeoBFT ---

GeoBftReplica::GeoBftReplica(ReplicaContext ctx, uint32_t cluster,
                             std::vector<NodeId> cluster_members)
    : ctx_(std::move(ctx)),
      cluster_(cluster),
      members_(std::move(cluster_members)),
      mux_(ctx_.id, ctx_.quorum.n, ctx_.key, ctx_.auth_kind) {
    ReplicaContext inner = ctx_;
    inner.quorum.n = static_cast<uint32_t>(members_.size());
    inner.quorum.f = ctx_.quorum.cluster_f(cluster_);
    inner.quorum.cluster_sizes.clear();
    std::vector<NodeId> members = members_;
    inner.leader_schedule = [members](uint64_t view) { return members[view % members.size()]; };
    mux_.restrict_broadcast(members_);
    mux_.capture_own_frames([this](const Frame& frame) {
        if (frame.type != MsgType::commit) return;
        auto m = CommitMsg::decode(frame.body);
        commit_frames_[{m.seq, m.digest}][ctx_.id] = encode_frame(frame);
    });
    local_ = std::make_unique<PbftReplica>(inner);
}

NodeId GeoBftReplica::local_primary() const {
    return members_[local_->view() % members_.size()];
}

void GeoBftReplica::dispatch_inner(Outputs& out, const AutomatonInput& input) {
    auto translated = mux_.translate(0, local_->step(input));
    out.insert(out.end(), translated.outer.begin(), translated.outer.end());
    for (auto& commit : translated.commits) {
        noop_outstanding_ = false;
        on_local_decision(out, commit.seq, commit.block.transactions);
    }
}

Outputs GeoBftReplica::step(const AutomatonInput& input) {
    Outputs out;
    if (std::holds_alternative<ClientRequest>(input)) {
        dispatch_inner(out, input);
    } else if (const auto* timer = std::get_if<TimerFire>(&input)) {
        if (timer->timer_id >= kResendTimerBase) {
            uint64_t round = timer->timer_id - kResendTimerBase;
            if (next_exec_round_ <= round && local_share_payload_.count(round))
                send_global_shares(out, round);
            return out;
        }
        dispatch_inner(out, AutomatonInput{TimerFire{timer->timer_id % InstanceMux::kStride}});
    } else {
        const auto& deliver = std::get<Deliver>(input);
        auto frame = parse_frame(deliver.payload);
        if (!frame) return out;
        switch (frame->type) {
            case MsgType::client_request: dispatch_inner(out, input); break;
            case MsgType::instance_wrap: {
                auto m = InstanceWrapMsg::decode(frame->body);
                auto inner_frame = parse_frame(m.inner);
                if (inner_frame && inner_frame->type == MsgType::commit &&
                    frame_auth_ok(*inner_frame, *ctx_.keyring)) {
                    auto cm = CommitMsg::decode(inner_frame->body);
                    commit_frames_[{cm.seq, cm.digest}][inner_frame->auth.signer] = m.inner;
                }
                dispatch_inner(out, AutomatonInput{Deliver{m.inner, deliver.src}});
                break;
            }
            case MsgType::global_share: handle_global_share(out, *frame); break;
            default: break;
        }
    }
    apply_noop_pressure(out);
    return out;
}

void GeoBftReplica::on_local_decision(Outputs& out, uint64_t round,
                                      std::vector<Transaction> batch) {
    Digest digest = batch_digest(batch);
    local_decided_[round] = batch;

    // The cluster primary ships the decision plus its commit certificate to
    // f+1 members of every remote cluster.
    if (local_primary() == ctx_.id) {
        GlobalShareMsg m;
        m.cluster = cluster_;
        m.round = round;
        m.batch = std::move(batch);
        uint32_t needed = 2 * ctx_.quorum.cluster_f(cluster_) + 1;
        for (const auto& [signer, bytes] : commit_frames_[{round, digest}]) {
            if (m.commit_frames.size() >= needed) break;
            m.commit_frames.push_back(bytes);
        }
        if (m.commit_frames.size() >= needed) {
            local_share_payload_[round] =
                make_frame(MsgType::global_share, m.encode(), ctx_.key, ctx_.auth_kind);
            send_global_shares(out, round);
        }
    }
    try_execute_rounds(out);
}

void GeoBftReplica::send_global_shares(Outputs& out, uint64_t round) {
    const Bytes& payload = local_share_payload_.at(round);
    uint32_t base = 0;
    for (uint32_t c = 0; c < cluster_count(); ++c) {
        uint32_t size = ctx_.quorum.cluster_sizes[c];
        if (c != cluster_) {
            uint32_t recipients = ctx_.quorum.cluster_f(c) + 1;
            for (uint32_t i = 0; i < recipients && i < size; ++i)
                out.push_back(SendOut{base + i, payload});
        }
        base += size;
    }
    out.push_back(SetTimerOut{kResendTimerBase + round, 10 * ctx_.mean_delay});
}

bool GeoBftReplica::validate_share(const GlobalShareMsg& m) const {
    if (m.cluster >= cluster_count() || m.cluster == cluster_) return false;
    Digest digest = batch_digest(m.batch);
    uint32_t needed = 2 * ctx_.quorum.cluster_f(m.cluster) + 1;
    uint32_t base = 0;
    for (uint32_t c = 0; c < m.cluster; ++c) base += ctx_.quorum.cluster_sizes[c];
    uint32_t size = ctx_.quorum.cluster_sizes[m.cluster];

    std::set<NodeId> senders;
    std::optional<uint64_t> seen_view;
    for (const auto& bytes : m.commit_frames) {
        auto frame = parse_frame(bytes);
        if (!frame || frame->type != MsgType::commit) return false;
        if (!frame_auth_ok(*frame, *ctx_.keyring)) return false;
        if (frame->auth.signer < base || frame->auth.signer >= base + size) return false;
        CommitMsg cm = CommitMsg::decode(frame->body);
        if (cm.seq != m.round || cm.digest != digest) return false;
        if (seen_view && *seen_view != cm.view) return false;
        seen_view = cm.view;
        senders.insert(frame->auth.signer);
    }
    return senders.size() >= needed;
}

void GeoBftReplica::handle_global_share(Outputs& out, const Frame& frame) {
    GlobalShareMsg m;
    try {
        m = GlobalShareMsg::decode(frame.body);
    } catch (const DecodeError&) {
        return;
    }
    if (!validate_share(m)) {
        ++invalid_certificates_;
        return;
    }
    bool fresh = !remote_decided_[m.cluster].count(m.round);
    remote_decided_[m.cluster][m.round] = m.batch;
    if (!m.forwarded && fresh) {
        // Local phase of optimistic global sharing: fan the validated share
        // out inside the cluster.
        GlobalShareMsg fwd = m;
        fwd.forwarded = 1;
        Bytes payload = make_frame(MsgType::global_share, fwd.encode(), ctx_.key, ctx_.auth_kind);
        for (NodeId member : members_)
            if (member != ctx_.id) out.push_back(SendOut{member, payload});
    }
    try_execute_rounds(out);
}

void GeoBftReplica::try_execute_rounds(Outputs& out) {
    while (true) {
        if (!local_decided_.count(next_exec_round_)) return;
        for (uint32_t c = 0; c < cluster_count(); ++c)
            if (c != cluster_ && !remote_decided_[c].count(next_exec_round_)) return;

        std::vector<Transaction> combined;
        for (uint32_t c = 0; c < cluster_count(); ++c) {
            const auto& batch = c == cluster_ ? local_decided_[next_exec_round_]
                                              : remote_decided_[c][next_exec_round_];
            combined.insert(combined.end(), batch.begin(), batch.end());
        }
        auto executed = exec_.execute(combined, next_exec_round_, 0);
        out.push_back(CommitOut{next_exec_round_, executed.block});
        out.push_back(CancelTimerOut{kResendTimerBase + next_exec_round_});
        for (const auto& reply : executed.replies) {
            // Inform only local clients of the outcome.
            NodeId client = reply.client;
            bool local_client = client >= ctx_.quorum.n &&
                                (client - ctx_.quorum.n) % cluster_count() == cluster_;
            if (!local_client) continue;
            ClientReplyMsg m{reply.request_digest, next_exec_round_, reply.result, ctx_.id};
            out.push_back(SendOut{client, make_frame(MsgType::client_reply, m.encode(), ctx_.key,
                                                     ctx_.auth_kind)});
        }
        ++next_exec_round_;
    }
}

void GeoBftReplica::apply_noop_pressure(Outputs& out) {
    // Remote clusters are ahead of us and our pool is dry: the local primary
    // closes the gap with a no-op decision.
    uint64_t remote_max = 0;
    for (const auto& [c, rounds] : remote_decided_)
        if (!rounds.empty()) remote_max = std::max(remote_max, rounds.rbegin()->first);
    uint64_t local_max = local_decided_.empty() ? 0 : local_decided_.rbegin()->first;
    if (remote_max <= local_max || noop_outstanding_) return;
    if (local_primary() != ctx_.id || local_->pool_has_pending() || !local_->primary_idle())
        return;
    noop_outstanding_ = true;
    Transaction noop;
    noop.client_id = ctx_.id;
    noop.nonce = ++noop_nonce_;
    noop.payload = to_bytes("noop");
    noop.client_auth = sign(ctx_.key, AuthKind::signature, noop.signing_bytes());
    dispatch_inner(out, AutomatonInput{ClientRequest{noop}});
}

StateSummary GeoBftReplica::inspect() const {
    StateSummary s;
    s.view = local_->view();
    s.last_committed_seq = next_exec_round_ - 1;
    return s;
}

}  // namespace bftlab
