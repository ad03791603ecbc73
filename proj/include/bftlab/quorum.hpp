// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "bftlab/bytes.hpp"

namespace bftlab {

class InvalidConfig : public std::runtime_error {
  public:
    explicit InvalidConfig(const std::string& what) : std::runtime_error(what) {}
};

// The (n, f, c, z) arithmetic every permissioned protocol's thresholds
// derive from. `c` is the SBFT crash-only allowance, `z` the number of
// parallel instances, `cluster_sizes` the per-cluster replica counts for
// clustered deployments.
struct QuorumConfig {
    uint32_t n = 4;
    uint32_t f = 1;
    uint32_t c = 0;
    uint32_t z = 1;
    std::vector<uint32_t> cluster_sizes;

    void validate() const;  // throws InvalidConfig

    // Per-cluster fault bound: cluster_sizes[i] = 3 * f_local + 1.
    uint32_t cluster_f(size_t cluster) const;
};

enum class QuorumKind {
    prepare,       // 2f
    commit,        // 2f+1
    view_change,   // 2f+1
    client_reply,  // f+1
    spec_client,   // 3f+1
    poe_client,    // 2f+1
    sbft_fast,     // 3f+2c+1
    sbft_exec,     // f+1
    hotstuff,      // 2f+1
};

uint32_t quorum(const QuorumConfig& config, QuorumKind kind);

NodeId primary_of(uint64_t view, uint32_t n);

}  // namespace bftlab
