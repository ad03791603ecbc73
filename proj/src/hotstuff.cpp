// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftlab/hotstuff.hpp"

#include <algorithm>

namespace bftlab {

HotstuffReplica::HotstuffReplica(ReplicaContext ctx) : ReplicaBase(std::move(ctx)) {
    // Round 0 is a virtual, pre-certified root so that any leader can start
    // or restart the chain without waiting for a quorum that cannot form.
    QuorumCert genesis;
    genesis.round = 0;
    genesis.digest = Block::genesis().digest();
    qcs_.emplace(0, genesis);
    high_qc_ = genesis;
    Proposal& root = proposals_[0];
    root.digest = genesis.digest;
    root.executed = true;
}

Bytes HotstuffReplica::vote_msg(uint64_t round, const Digest& digest) const {
    Writer w;
    w.str("hs.vote");
    w.u64(round);
    put_digest(w, digest);
    return w.take();
}

bool HotstuffReplica::qc_valid(const QuorumCert& qc) const {
    if (qc.round == 0)
        return qc.digest == Block::genesis().digest() && qc.sig.signers.empty();
    ThresholdParams params{quorum(ctx_.quorum, QuorumKind::hotstuff), ctx_.quorum.n};
    return ctx_.group->verify(vote_msg(qc.round, qc.digest), qc.sig, params);
}

Outputs HotstuffReplica::step(const AutomatonInput& input) {
    Outputs out;
    if (const auto* req = std::get_if<ClientRequest>(&input)) {
        handle_request(out, req->txn);
        return out;
    }
    if (const auto* timer = std::get_if<TimerFire>(&input)) {
        if (timer->timer_id == kRoundTimer) handle_round_timer(out);
        return out;
    }
    const auto& deliver = std::get<Deliver>(input);
    auto frame = checked_frame(deliver.payload);
    if (!frame) return out;
    switch (frame->type) {
        case MsgType::client_request:
            handle_request(out, ClientRequestMsg::decode(frame->body).txn);
            break;
        case MsgType::hs_proposal: handle_proposal(out, *frame); break;
        case MsgType::hs_vote: handle_vote(out, *frame); break;
        case MsgType::hs_newround: handle_newround(out, *frame); break;
        default: break;
    }
    return out;
}

void HotstuffReplica::handle_request(Outputs& out, const Transaction& txn) {
    if (!client_auth_ok(txn)) return;
    NodeId client = static_cast<NodeId>(txn.client_id);
    if (const auto* cached = exec_.cached_reply(client, txn.nonce)) {
        reply_to(out, client, cached->request_digest, 0, cached->result);
        return;
    }
    pool_.add(txn);
    // The owner of the chain tip restarts a paused pipeline.
    uint64_t next = high_qc_->round + 1;
    if (ctx_.leader_of(next) == ctx_.id && !proposed_rounds_.count(next)) propose(out, next);
    manage_timer(out);
}

// Shared voting path: every replica (the proposer included) sends its
// threshold share to the leader of the following round.
void HotstuffReplica::cast_vote(Outputs& out, uint64_t round, const Digest& digest) {
    if (round <= last_vote_round_) return;  // monotone voting
    last_vote_round_ = round;
    ThresholdShare share = ctx_.group->share(ctx_.key, vote_msg(round, digest));
    NodeId next_leader = ctx_.leader_of(round + 1);
    if (next_leader == ctx_.id) {
        add_vote(out, round, digest, share);
    } else {
        HsVoteMsg v{round, digest, share};
        out.push_back(SendOut{next_leader, signed_frame(MsgType::hs_vote, v.encode())});
    }
}

void HotstuffReplica::add_vote(Outputs& out, uint64_t round, const Digest& digest,
                               const ThresholdShare& share) {
    if (qcs_.count(round)) return;
    if (vote_digest_.count(round) && vote_digest_[round] != digest) return;
    vote_digest_[round] = digest;
    if (!vote_senders_[round].insert(share.signer).second) return;
    votes_[round].push_back(share);

    uint32_t needed = quorum(ctx_.quorum, QuorumKind::hotstuff);
    if (vote_senders_[round].size() < needed) return;
    ThresholdParams params{needed, ctx_.quorum.n};
    QuorumCert qc;
    qc.round = round;
    qc.digest = digest;
    qc.sig = ctx_.group->combine(votes_[round], params);
    record_qc(qc);
    try_execute(out, qc.round);
    if (work_pending()) propose(out, round + 1);
    manage_timer(out);
}

void HotstuffReplica::propose(Outputs& out, uint64_t round) {
    if (round == 0 || proposed_rounds_.count(round)) return;
    if (!high_qc_ || high_qc_->round >= round) return;
    if (ctx_.leader_of(round) != ctx_.id) return;
    proposed_rounds_.insert(round);
    HsProposalMsg m;
    m.round = round;
    m.batch = pool_.next_batch(ctx_.batch_size);  // may be empty while draining
    m.digest = batch_digest(m.batch);
    m.justify = high_qc_;
    out.push_back(BroadcastOut{signed_frame(MsgType::hs_proposal, m.encode())});

    bool fresh = !proposals_.count(round);
    Proposal& p = proposals_[round];
    p.digest = m.digest;
    p.batch = m.batch;
    if (m.justify) {
        p.parent_round = m.justify->round;
        p.has_parent = true;
    }
    if (fresh && !p.batch.empty()) ++live_batches_;
    enter_round(out, round);
    cast_vote(out, round, m.digest);
    if (m.justify) try_execute(out, m.justify->round);
}

void HotstuffReplica::enter_round(Outputs& out, uint64_t round) {
    if (round > round_) {
        round_ = round;
        consecutive_timeouts_ = 0;
    }
    if (work_pending()) {
        out.push_back(SetTimerOut{kRoundTimer, (5 * ctx_.mean_delay) << std::min<uint32_t>(
                                                   consecutive_timeouts_, 16)});
        timer_armed_ = true;
    }
}

void HotstuffReplica::record_qc(const QuorumCert& qc) {
    qcs_.emplace(qc.round, qc);
    if (!high_qc_ || qc.round > high_qc_->round) high_qc_ = qc;
}

void HotstuffReplica::handle_proposal(Outputs& out, const Frame& frame) {
    HsProposalMsg m = HsProposalMsg::decode(frame.body);
    if (frame.auth.signer != ctx_.leader_of(m.round)) return;
    if (m.round < round_ || m.round == 0) return;  // monotone rounds
    if (m.digest != batch_digest(m.batch)) return;
    for (const auto& txn : m.batch)
        if (!client_auth_ok(txn)) return;
    if (!m.justify || m.justify->round >= m.round || !qc_valid(*m.justify)) return;
    // Share only for proposals extending the highest known certificate.
    if (m.justify->round < high_qc_->round) return;

    bool fresh = !proposals_.count(m.round);
    Proposal& p = proposals_[m.round];
    p.digest = m.digest;
    p.batch = m.batch;
    if (m.justify) {
        p.parent_round = m.justify->round;
        p.has_parent = true;
        record_qc(*m.justify);
    }
    if (fresh && !p.batch.empty()) ++live_batches_;
    for (const auto& txn : m.batch) pool_.hold(txn.digest());

    enter_round(out, m.round);
    cast_vote(out, m.round, m.digest);
    if (m.justify) try_execute(out, m.justify->round);
    manage_timer(out);
}

void HotstuffReplica::handle_vote(Outputs& out, const Frame& frame) {
    HsVoteMsg m = HsVoteMsg::decode(frame.body);
    if (ctx_.leader_of(m.round + 1) != ctx_.id) return;
    if (!ctx_.group->verify_share(vote_msg(m.round, m.digest), m.share)) return;
    add_vote(out, m.round, m.digest, m.share);
}

void HotstuffReplica::handle_newround(Outputs& out, const Frame& frame) {
    HsNewRoundMsg m = HsNewRoundMsg::decode(frame.body);
    if (m.high_qc) {
        if (!qc_valid(*m.high_qc)) return;
        record_qc(*m.high_qc);
    }
    if (ctx_.leader_of(m.round) != ctx_.id) return;
    if (m.round != newround_round_) {
        newround_round_ = m.round;
        newround_senders_.clear();
    }
    newround_senders_.insert(frame.auth.signer);
    if (newround_senders_.size() >= ctx_.quorum.f + 1 && !proposed_rounds_.count(m.round)) {
        if (m.round > round_) round_ = m.round;
        pool_.reset_in_flight();
        propose(out, m.round);
        manage_timer(out);
    }
}

void HotstuffReplica::handle_round_timer(Outputs& out) {
    timer_armed_ = false;
    if (!work_pending()) return;
    ++consecutive_timeouts_;
    ++round_;
    pool_.reset_in_flight();  // skipped rounds give their commands back
    NodeId leader = ctx_.leader_of(round_);
    if (leader == ctx_.id) {
        propose(out, round_);
    } else {
        HsNewRoundMsg m{round_, high_qc_};
        out.push_back(SendOut{leader, signed_frame(MsgType::hs_newround, m.encode())});
    }
    out.push_back(SetTimerOut{
        kRoundTimer, (5 * ctx_.mean_delay) << std::min<uint32_t>(consecutive_timeouts_, 16)});
    timer_armed_ = true;
}

void HotstuffReplica::try_execute(Outputs& out, uint64_t formed_round) {
    // Three-chain rule: consecutive QCs for rounds r-2, r-1, r release round
    // r-2 and its unexecuted ancestors. The QC for r arrives either inside
    // the round r+1 proposal or by local formation at that proposal's leader.
    if (formed_round < 2) return;
    uint64_t r = formed_round;
    if (!qcs_.count(r) || !qcs_.count(r - 1) || !qcs_.count(r - 2)) return;
    auto pr = proposals_.find(r);
    auto pr1 = proposals_.find(r - 1);
    if (pr == proposals_.end() || pr1 == proposals_.end()) return;
    if (!pr->second.has_parent || pr->second.parent_round != r - 1) return;
    if (!pr1->second.has_parent || pr1->second.parent_round != r - 2) return;

    std::vector<uint64_t> chain;
    uint64_t cursor = r - 2;
    while (true) {
        auto it = proposals_.find(cursor);
        if (it == proposals_.end() || it->second.executed) break;
        chain.push_back(cursor);
        if (!it->second.has_parent) break;
        cursor = it->second.parent_round;
    }
    std::reverse(chain.begin(), chain.end());
    for (uint64_t round : chain) {
        Proposal& p = proposals_[round];
        p.executed = true;
        if (!p.batch.empty() && live_batches_ > 0) --live_batches_;
        executed_round_ = std::max(executed_round_, round);
        sweep_dead_rounds();
        // A command re-proposed after a timeout may already be executed.
        std::vector<Transaction> batch;
        for (const auto& txn : p.batch)
            if (!exec_.cached_reply(static_cast<NodeId>(txn.client_id), txn.nonce))
                batch.push_back(txn);
        for (const auto& txn : p.batch) pool_.completed(txn.digest());
        if (batch.empty()) continue;
        auto executed = exec_.execute(batch, round, ctx_.leader_of(round));
        out.push_back(CommitOut{next_commit_seq_++, executed.block});
        for (const auto& reply : executed.replies)
            reply_to(out, reply.client, reply.request_digest, round, reply.result);
    }
}

// A round the execution frontier has passed without executing sits on a
// discarded branch and will never run; its commands go back to the pool
// (execution-time deduplication drops any that did land elsewhere).
void HotstuffReplica::sweep_dead_rounds() {
    while (swept_upto_ < executed_round_) {
        ++swept_upto_;
        auto it = proposals_.find(swept_upto_);
        if (it == proposals_.end() || it->second.executed) continue;
        it->second.executed = true;
        if (!it->second.batch.empty()) {
            if (live_batches_ > 0) --live_batches_;
            for (const auto& txn : it->second.batch) pool_.reopen(txn);
        }
    }
}

bool HotstuffReplica::work_pending() const {
    return pool_.has_pending() || live_batches_ > 0;
}

void HotstuffReplica::manage_timer(Outputs& out) {
    bool pending = work_pending();
    if (pending && !timer_armed_) {
        out.push_back(SetTimerOut{kRoundTimer, (5 * ctx_.mean_delay)
                                                   << std::min<uint32_t>(consecutive_timeouts_, 16)});
        timer_armed_ = true;
    } else if (!pending && timer_armed_) {
        out.push_back(CancelTimerOut{kRoundTimer});
        timer_armed_ = false;
    }
}

StateSummary HotstuffReplica::inspect() const {
    StateSummary s;
    s.view = round_;
    s.last_committed_seq = next_commit_seq_ - 1;
    for (const auto& [round, p] : proposals_)
        if (p.executed) s.log_digests.emplace_back(round, p.digest);
    return s;
}

}  // namespace bftlab
