// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftlab/permissionless.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace bftlab {

MiningTarget MiningTarget::leading_zero_bits(uint32_t bits) {
    MiningTarget t;
    if (bits >= 256) return t;  // all-zero threshold: nothing qualifies
    // threshold = 2^(256 - bits): a 1 bit placed after `bits` zero bits.
    uint32_t byte = bits / 8;
    uint32_t bit = bits % 8;
    t.threshold.bytes[byte] = static_cast<uint8_t>(0x80u >> bit);
    return t;
}

MiningTarget MiningTarget::max() {
    MiningTarget t;
    t.threshold.bytes.fill(0xff);
    return t;
}

MiningTarget MiningTarget::none() { return MiningTarget{}; }

Digest pow_digest(ByteView header, uint64_t nonce) {
    Writer w;
    w.raw(header);
    w.u64(nonce);
    return sha3_256(w.bytes());
}

std::optional<uint64_t> pow_mine(ByteView header, const MiningTarget& target, uint64_t lo,
                                 uint64_t hi) {
    for (uint64_t nonce = lo;; ++nonce) {
        if (target.winning(pow_digest(header, nonce))) return nonce;
        if (nonce == hi) break;
    }
    return std::nullopt;  // exhausted
}

bool pow_verify(ByteView header, uint64_t nonce, const MiningTarget& target) {
    return target.winning(pow_digest(header, nonce));
}

ForkTree::ForkTree() {
    Block g = Block::genesis();
    root_ = g.digest();
    nodes_[root_] = Node{g, Digest::zero(), 0, next_arrival_++};
}

bool ForkTree::insert(const Block& block) {
    Digest d = block.digest();
    if (nodes_.count(d)) return false;
    auto parent = nodes_.find(block.parent_digest);
    if (parent == nodes_.end()) return false;
    nodes_[d] = Node{block, block.parent_digest, parent->second.height + 1, next_arrival_++};
    return true;
}

Digest ForkTree::fork_choice() const {
    const Node* best = nullptr;
    Digest best_digest;
    for (const auto& [digest, node] : nodes_) {
        if (!best || node.height > best->height ||
            (node.height == best->height && node.arrival < best->arrival)) {
            best = &node;
            best_digest = digest;
        }
    }
    return best_digest;
}

uint64_t ForkTree::height_of(const Digest& d) const { return nodes_.at(d).height; }

std::optional<uint64_t> ForkTree::confirmation_depth(const Digest& d) const {
    auto it = nodes_.find(d);
    if (it == nodes_.end()) return std::nullopt;
    Digest cursor = fork_choice();
    uint64_t tip_height = nodes_.at(cursor).height;
    // Walk the canonical chain down to the block's height.
    while (nodes_.at(cursor).height > it->second.height) cursor = nodes_.at(cursor).parent;
    if (cursor != d) return std::nullopt;  // on a losing fork
    return tip_height - it->second.height;
}

std::vector<Block> ForkTree::canonical_chain() const {
    std::vector<Block> chain;
    Digest cursor = fork_choice();
    while (true) {
        const Node& node = nodes_.at(cursor);
        chain.push_back(node.block);
        if (cursor == root_) break;
        cursor = node.parent;
    }
    std::reverse(chain.begin(), chain.end());
    return chain;
}

std::string ForkTree::to_json() const {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& [digest, node] : nodes_) {
        arr.push_back({{"digest", digest.hex()},
                       {"parent", node.parent.hex()},
                       {"height", node.height},
                       {"arrival", node.arrival}});
    }
    return arr.dump();
}

NodeId pos_select(std::vector<Validator>& validators, Rng& rng, PosMode mode, Tick now) {
    std::vector<double> weights;
    weights.reserve(validators.size());
    double total = 0.0;
    for (const auto& v : validators) {
        double w = mode == PosMode::stake_proportional ? v.stake : v.coinage(now);
        weights.push_back(w);
        total += w;
    }
    if (total <= 0.0) throw ZeroTotalWeight();
    size_t winner = rng.weighted(weights.data(), weights.size());
    if (mode == PosMode::coinage) validators[winner].last_created = now;  // coinage spent
    return validators[winner].id;
}

bool poa_validate(const Block& block, const std::vector<Authenticator>& signatures,
                  const AuthoritySet& authorities, const Keyring& keyring) {
    Digest d = block.digest();
    std::set<NodeId> valid;
    for (const auto& sig : signatures) {
        if (!authorities.authorities.count(sig.signer)) continue;
        if (!keyring.verify(d.view(), sig)) continue;
        valid.insert(sig.signer);
    }
    return valid.size() * 2 > authorities.authorities.size();
}

// --- miner ---

MinerAutomaton::MinerAutomaton(Config config) : config_(std::move(config)) {
    mining_on_ = tree_.fork_choice();
}

Tick MinerAutomaton::draw_wait() {
    Writer w;
    w.u64(config_.seed);
    w.u64(config_.id);
    w.u64(attempt_);
    Digest d = tagged_hash("bftlab.mine", w.bytes());
    uint64_t seed = 0;
    for (int i = 0; i < 8; ++i) seed = (seed << 8) | d.bytes[i];
    Rng rng(seed);
    double mean = config_.mean_interval / (config_.share * rate_scale_);
    double wait = rng.exponential(mean);
    return std::max<Tick>(1, static_cast<Tick>(std::llround(wait)));
}

void MinerAutomaton::schedule_solve(Outputs& out) {
    if (tree_.height_of(tree_.fork_choice()) >= config_.blocks_target) {
        out.push_back(CancelTimerOut{kSolveTimer});
        return;
    }
    ++attempt_;
    out.push_back(SetTimerOut{kSolveTimer, draw_wait()});
}

void MinerAutomaton::sync_ledger(Outputs& out) {
    std::vector<Block> canonical = tree_.canonical_chain();
    std::vector<Digest> digests;
    for (size_t i = 1; i < canonical.size(); ++i) digests.push_back(canonical[i].digest());

    size_t common = 0;
    while (common < digests.size() && common < emitted_.size() &&
           digests[common] == emitted_[common])
        ++common;
    if (common < emitted_.size()) {
        out.push_back(RollbackOut{common});
        emitted_.resize(common);
    }
    for (size_t i = common; i < digests.size(); ++i) {
        out.push_back(CommitOut{canonical[i + 1].number, canonical[i + 1]});
        emitted_.push_back(digests[i]);
    }
}

Outputs MinerAutomaton::step(const AutomatonInput& input) {
    Outputs out;
    if (const auto* timer = std::get_if<TimerFire>(&input)) {
        if (timer->timer_id == kKickTimer) {
            schedule_solve(out);
            return out;
        }
        if (timer->timer_id != kSolveTimer) return out;
        // Solved a block on top of our local canonical tip.
        Digest tip = tree_.fork_choice();
        Block block;
        block.number = tree_.height_of(tip) + 1;
        block.parent_digest = tip;
        block.meta.proposer = config_.id;
        block.meta.view = attempt_;
        tree_.insert(block);
        ++mined_;
        recent_arrivals_.push_back(now_hint_);
        if (config_.retarget_every > 0 &&
            recent_arrivals_.size() % config_.retarget_every == 0 &&
            recent_arrivals_.size() >= 2 * config_.retarget_every) {
            size_t n = recent_arrivals_.size();
            double measured =
                static_cast<double>(recent_arrivals_[n - 1] -
                                    recent_arrivals_[n - config_.retarget_every]) /
                config_.retarget_every;
            if (measured > 0) rate_scale_ *= measured / config_.mean_interval;
        }
        // Announcements are unauthenticated: validity is the chain itself.
        Frame f;
        f.type = MsgType::pow_block;
        f.body = PowBlockMsg{block}.encode();
        f.auth.signer = config_.id;
        out.push_back(BroadcastOut{encode_frame(f)});
        sync_ledger(out);
        schedule_solve(out);
        return out;
    }
    const auto* deliver = std::get_if<Deliver>(&input);
    if (!deliver) return out;
    auto frame = parse_frame(deliver->payload);
    if (!frame || frame->type != MsgType::pow_block) return out;
    handle_block(out, PowBlockMsg::decode(frame->body).block);
    return out;
}

void MinerAutomaton::handle_block(Outputs& out, const Block& block) {
    if (!tree_.insert(block)) {
        if (!tree_.contains(block.digest())) orphans_.push_back(block);  // parent still in flight
        return;
    }
    // Orphans may now connect.
    bool progress = true;
    while (progress) {
        progress = false;
        for (auto it = orphans_.begin(); it != orphans_.end();) {
            if (tree_.insert(*it)) {
                it = orphans_.erase(it);
                progress = true;
            } else if (tree_.contains(it->digest())) {
                it = orphans_.erase(it);
            } else {
                ++it;
            }
        }
    }
    Digest tip = tree_.fork_choice();
    if (tip != mining_on_) {
        mining_on_ = tip;
        // Exponential waits are memoryless; redrawing on a tip switch keeps
        // the per-miner rate intact.
        schedule_solve(out);
    }
    sync_ledger(out);
}

StateSummary MinerAutomaton::inspect() const {
    StateSummary s;
    s.view = attempt_;
    s.last_committed_seq = tree_.height_of(tree_.fork_choice());
    return s;
}

// --- chain-based proof of stake ---

PosChainAutomaton::PosChainAutomaton(Config config) : config_(std::move(config)) {
    for (size_t i = 0; i < config_.stakes.size(); ++i)
        validators_.push_back(Validator{static_cast<NodeId>(i), config_.stakes[i], 0});
}

NodeId PosChainAutomaton::slot_winner(uint64_t slot) {
    // Every node derives the same winner from the shared seed, so the
    // selection needs no extra communication.
    Writer w;
    w.u64(config_.seed);
    w.u64(slot);
    Digest d = tagged_hash("bftlab.pos.slot", w.bytes());
    uint64_t seed = 0;
    for (int i = 0; i < 8; ++i) seed = (seed << 8) | d.bytes[i];
    Rng rng(seed);
    return pos_select(validators_, rng, config_.mode, slot);
}

Outputs PosChainAutomaton::step(const AutomatonInput& input) {
    Outputs out;
    if (const auto* timer = std::get_if<TimerFire>(&input)) {
        if (timer->timer_id != kKickTimer && timer->timer_id != kSlotTimer) return out;
        if (chain_.size() > config_.blocks_target) return out;
        ++slot_;
        NodeId winner = slot_winner(slot_);
        if (winner == config_.id && chain_.size() <= config_.blocks_target) {
            Block block;
            block.number = chain_.size();
            block.parent_digest = chain_.tip_digest();
            block.meta.proposer = winner;
            block.meta.view = slot_;
            chain_.append(block);
            out.push_back(CommitOut{block.number, block});
            Frame f;
            f.type = MsgType::pow_block;
            f.body = PowBlockMsg{block}.encode();
            f.auth.signer = config_.id;
            out.push_back(BroadcastOut{encode_frame(f)});
        }
        if (chain_.size() <= config_.blocks_target)
            out.push_back(SetTimerOut{kSlotTimer, config_.slot_ticks});
        return out;
    }
    const auto* deliver = std::get_if<Deliver>(&input);
    if (!deliver) return out;
    auto frame = parse_frame(deliver->payload);
    if (!frame || frame->type != MsgType::pow_block) return out;
    Block block = PowBlockMsg::decode(frame->body).block;
    try {
        chain_.append(block);
        out.push_back(CommitOut{block.number, block});
    } catch (const std::runtime_error&) {
        // stale or conflicting block
    }
    return out;
}

StateSummary PosChainAutomaton::inspect() const {
    StateSummary s;
    s.view = slot_;
    s.last_committed_seq = chain_.size() - 1;
    return s;
}

// --- proof of authority chain ---

PoaChainAutomaton::PoaChainAutomaton(Config config) : config_(std::move(config)) {}

NodeId PoaChainAutomaton::slot_authority(uint64_t slot) const {
    std::vector<NodeId> list(config_.authorities.authorities.begin(),
                             config_.authorities.authorities.end());
    return list[slot % list.size()];
}

Block PoaChainAutomaton::build_block(uint64_t slot) const {
    Block block;
    block.number = chain_.size();
    block.parent_digest = chain_.tip_digest();
    block.meta.proposer = config_.id;
    block.meta.view = slot;
    return block;
}

Outputs PoaChainAutomaton::step(const AutomatonInput& input) {
    Outputs out;
    if (const auto* timer = std::get_if<TimerFire>(&input)) {
        if (timer->timer_id != kKickTimer && timer->timer_id != kSlotTimer) return out;
        if (chain_.size() > config_.blocks_target) return out;
        ++slot_;
        if (slot_authority(slot_) == config_.id) {
            // Propose: broadcast the unsigned block, gather signatures.
            Block block = build_block(slot_);
            Frame f;
            f.type = MsgType::pow_block;
            f.body = PowBlockMsg{block}.encode();
            f.auth = sign(config_.key, config_.auth_kind,
                          frame_signing_bytes(MsgType::pow_block, f.body));
            out.push_back(BroadcastOut{encode_frame(f)});
            // The proposer's own signature counts.
            sigs_[block.digest()].push_back(
                sign(config_.key, config_.auth_kind, block.digest().view()));
        }
        out.push_back(SetTimerOut{kSlotTimer, config_.slot_ticks});
        return out;
    }
    const auto* deliver = std::get_if<Deliver>(&input);
    if (!deliver) return out;
    auto frame = parse_frame(deliver->payload);
    if (!frame) return out;

    if (frame->type == MsgType::pow_block) {
        Block block = PowBlockMsg::decode(frame->body).block;
        if (block.meta.certificate.empty()) {
            // Unsigned proposal: authorities answer with a signature.
            if (!config_.authorities.authorities.count(config_.id)) return out;
            if (!frame_auth_ok(*frame, *config_.keyring)) return out;
            Authenticator sig = sign(config_.key, config_.auth_kind, block.digest().view());
            ClientReplyMsg m;
            m.request_digest = block.digest();
            m.seq = block.meta.view;
            Writer w;
            w.u8(static_cast<uint8_t>(sig.kind));
            w.u64(sig.signer);
            w.blob(sig.bytes);
            m.result = w.take();
            m.replica = config_.id;
            out.push_back(SendOut{frame->auth.signer,
                                  make_frame(MsgType::client_reply, m.encode(), config_.key,
                                             config_.auth_kind)});
            return out;
        }
        // Certified block: accept if a majority of authorities signed it.
        Block bare = block;
        bare.meta.certificate.clear();
        std::vector<Authenticator> sigs;
        try {
            Reader r(block.meta.certificate);
            uint64_t count = r.u64();
            for (uint64_t i = 0; i < count && i < 64; ++i) {
                Authenticator a;
                a.kind = static_cast<AuthKind>(r.u8());
                a.signer = static_cast<NodeId>(r.u64());
                a.bytes = r.blob();
                sigs.push_back(std::move(a));
            }
        } catch (const DecodeError&) {
            ++rejected_;
            return out;
        }
        if (!poa_validate(bare, sigs, config_.authorities, *config_.keyring)) {
            ++rejected_;
            return out;
        }
        try {
            chain_.append(block);
            out.push_back(CommitOut{block.number, block});
        } catch (const std::runtime_error&) {
        }
        return out;
    }

    if (frame->type == MsgType::client_reply) {
        if (!frame_auth_ok(*frame, *config_.keyring)) return out;
        auto m = ClientReplyMsg::decode(frame->body);
        Authenticator sig;
        try {
            Reader r(m.result);
            sig.kind = static_cast<AuthKind>(r.u8());
            sig.signer = static_cast<NodeId>(r.u64());
            sig.bytes = r.blob();
        } catch (const DecodeError&) {
            return out;
        }
        if (announced_.count(m.request_digest)) return out;
        sigs_[m.request_digest].push_back(sig);

        // Rebuild the block this slot proposed and check for majority.
        Block block = build_block(m.seq);
        if (block.digest() != m.request_digest) return out;
        if (!poa_validate(block, sigs_[m.request_digest], config_.authorities,
                          *config_.keyring))
            return out;
        announced_.insert(m.request_digest);
        Writer w;
        w.u64(sigs_[m.request_digest].size());
        for (const auto& s : sigs_[m.request_digest]) {
            w.u8(static_cast<uint8_t>(s.kind));
            w.u64(s.signer);
            w.blob(s.bytes);
        }
        block.meta.certificate = w.take();
        chain_.append(block);
        out.push_back(CommitOut{block.number, block});
        Frame f;
        f.type = MsgType::pow_block;
        f.body = PowBlockMsg{block}.encode();
        f.auth = sign(config_.key, config_.auth_kind,
                      frame_signing_bytes(MsgType::pow_block, f.body));
        out.push_back(BroadcastOut{encode_frame(f)});
    }
    return out;
}

StateSummary PoaChainAutomaton::inspect() const {
    StateSummary s;
    s.view = slot_;
    s.last_committed_seq = chain_.size() - 1;
    return s;
}

}  // namespace bftlab
