// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftlab/quorum.hpp"

namespace bftlab {

void QuorumConfig::validate() const {
    if (n == 0) throw InvalidConfig("quorum.n: must be positive");
    if (cluster_sizes.empty()) {
        if (n < 3 * f + 1) throw InvalidConfig("quorum.n: need n >= 3f+1");
    } else {
        uint32_t total = 0;
        for (size_t i = 0; i < cluster_sizes.size(); ++i) {
            uint32_t size = cluster_sizes[i];
            if (size < 4 || (size - 1) % 3 != 0)
                throw InvalidConfig("quorum.clusters[" + std::to_string(i) +
                                    "]: size must be 3f+1 with f >= 1");
            total += size;
        }
        if (total != n) throw InvalidConfig("quorum.clusters: sizes must sum to n");
    }
    if (c > 0 && n < 3 * f + 2 * c + 1)
        throw InvalidConfig("quorum.n: SBFT fast path needs n >= 3f+2c+1");
    if (z < 1) throw InvalidConfig("quorum.z: must be >= 1");
}

uint32_t QuorumConfig::cluster_f(size_t cluster) const {
    if (cluster >= cluster_sizes.size()) throw InvalidConfig("cluster index out of range");
    return (cluster_sizes[cluster] - 1) / 3;
}

uint32_t quorum(const QuorumConfig& config, QuorumKind kind) {
    config.validate();
    switch (kind) {
        case QuorumKind::prepare: return 2 * config.f;
        case QuorumKind::commit: return 2 * config.f + 1;
        case QuorumKind::view_change: return 2 * config.f + 1;
        case QuorumKind::client_reply: return config.f + 1;
        case QuorumKind::spec_client: return 3 * config.f + 1;
        case QuorumKind::poe_client: return 2 * config.f + 1;
        case QuorumKind::sbft_fast: return 3 * config.f + 2 * config.c + 1;
        case QuorumKind::sbft_exec: return config.f + 1;
        case QuorumKind::hotstuff: return 2 * config.f + 1;
    }
    throw InvalidConfig("unknown quorum kind");
}

NodeId primary_of(uint64_t view, uint32_t n) { return static_cast<NodeId>(view % n); }

}  // namespace bftlab
