// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <map>
#include <memory>
#include <set>

#include "bftlab/automaton.hpp"
#include "bftlab/crypto.hpp"
#include "bftlab/wire.hpp"

namespace bftlab {

class AlreadyPending : public std::runtime_error {
  public:
    AlreadyPending() : std::runtime_error("client already has a pending request") {}
};

struct ClientConfig {
    NodeId id = 0;
    uint32_t request_count = 1;
    enum class Target { primary, all_replicas } target = Target::primary;
    std::vector<NodeId> replicas;   // replicas this client talks to
    NodeId initial_primary = 0;
    uint32_t match_quorum = 2;      // matching replies needed to complete
    bool zyzzyva = false;           // spec-response handling + slow path
    uint32_t cert_quorum = 3;       // zyzzyva: matches needed to form a commit cert
    uint32_t ack_quorum = 3;        // zyzzyva: acks completing the slow path
    bool sbft_aggregate = false;    // complete on one aggregated exec cert
    ThresholdParams exec_params{2, 4};
    std::shared_ptr<const ThresholdGroup> group;
    Tick initial_timeout = 10;
    AuthKind auth_kind = AuthKind::signature;
    bool dual_sign = false;
    std::shared_ptr<const Keyring> keyring;
    KeyMaterial key;
};

// One in-flight request at a time; submits request j+1 the moment request j
// completes. Completion is signalled by a ReplyOut addressed to the client
// itself, which the harness records.
//
// Timer id 0 is the kick that submits the first request; the harness
// schedules it at tick 0. Timer id 1 is the retransmission timer, doubling
// on every expiry; timer id 2 paces the zyzzyva slow path.
class ClientAutomaton : public Automaton {
  public:
    explicit ClientAutomaton(ClientConfig config);

    Outputs step(const AutomatonInput& input) override;
    StateSummary inspect() const override;

    uint32_t completed() const { return completed_; }
    bool all_done() const { return completed_ == config_.request_count; }

    static constexpr uint64_t kKickTimer = 0;
    static constexpr uint64_t kRetransmitTimer = 1;
    static constexpr uint64_t kCertTimer = 2;

  private:
    Transaction make_request(uint64_t nonce) const;
    Outputs submit_next();
    void send_request(Outputs& out, bool broadcast);
    void complete(Outputs& out, const Bytes& result);
    void on_reply(Outputs& out, const Frame& frame);
    void on_spec_response(Outputs& out, const Frame& frame);
    void on_commit_ack(Outputs& out, const Frame& frame);
    void on_timeout(Outputs& out);

    ClientConfig config_;
    uint32_t next_nonce_ = 0;
    uint32_t completed_ = 0;
    bool pending_ = false;
    bool cert_phase_ = false;
    Transaction current_;
    Digest current_digest_;
    Tick timeout_ = 0;
    std::map<Bytes, std::set<NodeId>> matches_;        // result key -> replicas
    std::map<Bytes, std::map<NodeId, Bytes>> frames_;  // result key -> signed frames
    std::map<Bytes, Bytes> result_by_key_;
    std::set<NodeId> acks_;
    Digest cert_history_;
};

}  // namespace bftlab
