// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftlab/replica_base.hpp"

namespace bftlab {

ExecEngine::ExecEngine() {
    Block g = Block::genesis();
    tip_digest_ = g.digest();
    state_ = tagged_hash("bftlab.state", g.digest().view());
}

ExecEngine::Executed ExecEngine::execute(const std::vector<Transaction>& batch, uint64_t view,
                                         NodeId proposer, Bytes certificate) {
    UndoRecord undo{state_, tip_digest_, {}};

    Block block;
    block.number = next_number_;
    block.parent_digest = tip_digest_;
    block.transactions = batch;
    block.meta.proposer = proposer;
    block.meta.view = view;
    block.meta.certificate = std::move(certificate);

    Executed done;
    for (const auto& txn : batch) {
        Writer w;
        w.raw(state_.view());
        w.raw(txn.digest().view());
        Digest result = tagged_hash("bftlab.exec", w.bytes());
        ExecutedTxn reply{static_cast<NodeId>(txn.client_id), txn.digest(),
                          Bytes(result.bytes.begin(), result.bytes.end())};
        undo.reply_keys.emplace_back(reply.client, txn.nonce);
        reply_cache_[{reply.client, txn.nonce}] = reply;
        done.replies.push_back(std::move(reply));
    }

    Digest block_digest = block.digest();
    Writer w;
    w.raw(state_.view());
    w.raw(block_digest.view());
    state_ = tagged_hash("bftlab.state", w.bytes());
    tip_digest_ = block_digest;
    ++next_number_;
    undo_.push_back(std::move(undo));

    done.block = std::move(block);
    return done;
}

void ExecEngine::undo_to(uint64_t keep_number) {
    while (next_number_ > keep_number + 1) {
        UndoRecord& undo = undo_.back();
        state_ = undo.state;
        tip_digest_ = undo.tip;
        for (const auto& key : undo.reply_keys) reply_cache_.erase(key);
        undo_.pop_back();
        --next_number_;
    }
}

const ExecEngine::ExecutedTxn* ExecEngine::cached_reply(NodeId client, uint64_t nonce) const {
    auto it = reply_cache_.find({client, nonce});
    return it == reply_cache_.end() ? nullptr : &it->second;
}

bool RequestPool::add(const Transaction& txn) {
    Digest d = txn.digest();
    if (all_.count(d) || done_.count(d)) return false;
    all_.emplace(d, txn);
    fifo_.push_back(d);
    return true;
}

std::vector<Transaction> RequestPool::next_batch(size_t max) {
    std::vector<Transaction> batch;
    for (const Digest& d : fifo_) {
        if (batch.size() >= max) break;
        if (done_.count(d) || in_flight_.count(d)) continue;
        batch.push_back(all_.at(d));
        in_flight_.insert(d);
    }
    return batch;
}

void RequestPool::completed(const Digest& d) {
    done_.insert(d);
    in_flight_.erase(d);
    all_.erase(d);
}

void RequestPool::hold(const Digest& d) {
    if (!done_.count(d)) in_flight_.insert(d);
}

void RequestPool::reopen(const Transaction& txn) {
    Digest d = txn.digest();
    done_.erase(d);
    in_flight_.erase(d);
    if (!all_.count(d)) {
        all_.emplace(d, txn);
        fifo_.push_back(d);
    }
}

void RequestPool::reset_in_flight() { in_flight_.clear(); }

bool RequestPool::has_pending() const {
    for (const Digest& d : fifo_)
        if (!done_.count(d) && !in_flight_.count(d)) return true;
    return false;
}

size_t RequestPool::pending() const {
    size_t count = 0;
    for (const Digest& d : fifo_)
        if (!done_.count(d) && !in_flight_.count(d)) ++count;
    return count;
}

}  // namespace bftlab
