// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <optional>

#include "bftlab/automaton.hpp"
#include "bftlab/crypto.hpp"
#include "bftlab/rng.hpp"
#include "bftlab/wire.hpp"

namespace bftlab {

// --- proof of work ---

// A header digest wins when it is numerically below the target (digests
// compared as big-endian integers).
struct MiningTarget {
    Digest threshold;

    bool winning(const Digest& d) const { return d < threshold; }

    // Target with the given number of leading zero bits.
    static MiningTarget leading_zero_bits(uint32_t bits);
    static MiningTarget max();   // every digest qualifies
    static MiningTarget none();  // no digest qualifies
};

Digest pow_digest(ByteView header, uint64_t nonce);

// Smallest nonce in [lo, hi] whose digest beats the target.
std::optional<uint64_t> pow_mine(ByteView header, const MiningTarget& target, uint64_t lo,
                                 uint64_t hi);
bool pow_verify(ByteView header, uint64_t nonce, const MiningTarget& target);

// --- fork choice ---

class ForkTree {
  public:
    ForkTree();  // rooted at the genesis block

    // Parent must already be present; returns false otherwise (or for
    // duplicates). Arrival order is recorded for tie-breaking.
    bool insert(const Block& block);
    bool contains(const Digest& d) const { return nodes_.count(d) != 0; }
    size_t size() const { return nodes_.size(); }

    // Tip of maximum height; ties break toward the earliest arrival.
    Digest fork_choice() const;
    uint64_t height_of(const Digest& d) const;

    // Canonical-chain blocks strictly below the tip and at-or-above the
    // block; nullopt when the block sits on a losing fork.
    std::optional<uint64_t> confirmation_depth(const Digest& d) const;

    std::vector<Block> canonical_chain() const;  // genesis first
    std::string to_json() const;

  private:
    struct Node {
        Block block;
        Digest parent;
        uint64_t height = 0;
        uint64_t arrival = 0;
    };
    std::map<Digest, Node> nodes_;
    Digest root_;
    uint64_t next_arrival_ = 0;
};

// --- proof of stake ---

struct Validator {
    NodeId id = 0;
    double stake = 0.0;
    Tick last_created = 0;  // coinage accrues since this tick

    double coinage(Tick now) const {
        return stake * static_cast<double>(now >= last_created ? now - last_created : 0);
    }
};

enum class PosMode { stake_proportional, coinage };

class ZeroTotalWeight : public std::runtime_error {
  public:
    ZeroTotalWeight() : std::runtime_error("total selection weight is zero") {}
};

// Draw a validator proportionally to stake or coinage; coinage mode resets
// the winner's accrual.
NodeId pos_select(std::vector<Validator>& validators, Rng& rng, PosMode mode, Tick now = 0);

// --- proof of authority ---

struct AuthoritySet {
    std::set<NodeId> authorities;
};

// Accepted iff distinct valid authority signatures over the block digest
// form a strict majority of the authority set.
bool poa_validate(const Block& block, const std::vector<Authenticator>& signatures,
                  const AuthoritySet& authorities, const Keyring& keyring);

// --- simulation automata ---

// Exponential-waiting-time miner: solve times are drawn per attempt with
// rate proportional to this miner's hash-power share, and each miner mines
// on its local longest chain. Chains reorganize through Rollback/Commit
// pairs so the harness ledger always mirrors the canonical chain.
class MinerAutomaton : public Automaton {
  public:
    struct Config {
        NodeId id = 0;
        uint32_t miners = 1;
        double share = 1.0;
        double mean_interval = 100.0;  // system-wide mean ticks between blocks
        uint64_t blocks_target = 100;
        uint64_t seed = 1;
        uint32_t retarget_every = 10;  // difficulty retarget cadence, blocks
    };

    explicit MinerAutomaton(Config config);

    Outputs step(const AutomatonInput& input) override;
    StateSummary inspect() const override;

    const ForkTree& tree() const { return tree_; }
    uint64_t blocks_mined() const { return mined_; }

    static constexpr uint64_t kKickTimer = 0;
    static constexpr uint64_t kSolveTimer = 1;

  private:
    Tick draw_wait();
    void schedule_solve(Outputs& out);
    void sync_ledger(Outputs& out);
    void handle_block(Outputs& out, const Block& block);

    Config config_;
    ForkTree tree_;
    Digest mining_on_;
    uint64_t attempt_ = 0;
    uint64_t mined_ = 0;
    double rate_scale_ = 1.0;
    std::vector<Tick> recent_arrivals_;
    Tick now_hint_ = 0;  // advanced by timer fires; used for retargeting
    std::vector<Block> orphans_;
    std::vector<Digest> emitted_;  // canonical prefix mirrored to the harness
};

// Slot-driven proof-of-stake chain (chain-based variant): every slot all
// nodes derive the same winner from the shared seed; the winner broadcasts
// the next block. Coinage mode spends the winner's accrual.
class PosChainAutomaton : public Automaton {
  public:
    struct Config {
        NodeId id = 0;
        std::vector<double> stakes;  // by validator id
        PosMode mode = PosMode::stake_proportional;
        Tick slot_ticks = 10;
        uint64_t blocks_target = 50;
        uint64_t seed = 1;
    };

    explicit PosChainAutomaton(Config config);

    Outputs step(const AutomatonInput& input) override;
    StateSummary inspect() const override;

    static constexpr uint64_t kKickTimer = 0;
    static constexpr uint64_t kSlotTimer = 1;

  private:
    NodeId slot_winner(uint64_t slot);

    Config config_;
    std::vector<Validator> validators_;
    Chain chain_;
    uint64_t slot_ = 0;
};

// Slot-driven proof-of-authority chain: the designated authority proposes,
// authorities answer with signatures, and a majority-signed block is
// broadcast and appended everywhere.
class PoaChainAutomaton : public Automaton {
  public:
    struct Config {
        NodeId id = 0;
        uint32_t nodes = 4;
        AuthoritySet authorities;
        Tick slot_ticks = 20;
        uint64_t blocks_target = 20;
        AuthKind auth_kind = AuthKind::signature;
        std::shared_ptr<const Keyring> keyring;
        KeyMaterial key;
    };

    explicit PoaChainAutomaton(Config config);

    Outputs step(const AutomatonInput& input) override;
    StateSummary inspect() const override;

    uint64_t rejected_blocks() const { return rejected_; }

    static constexpr uint64_t kKickTimer = 0;
    static constexpr uint64_t kSlotTimer = 1;

  private:
    NodeId slot_authority(uint64_t slot) const;
    Block build_block(uint64_t slot) const;

    Config config_;
    Chain chain_;
    uint64_t slot_ = 0;
    std::map<Digest, std::vector<Authenticator>> sigs_;
    std::set<Digest> announced_;
    uint64_t rejected_ = 0;
};

}  // namespace bftlab
