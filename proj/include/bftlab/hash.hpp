// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <array>
#include <compare>
#include <optional>
#include <string>

#include "bftlab/bytes.hpp"

namespace bftlab {

// 32-byte SHA3-256 digest. Comparing two digests as big-endian integers is
// the same as lexicographic comparison of the byte arrays, which is what
// operator<=> gives us; proof-of-work relies on this.
struct Digest {
    std::array<uint8_t, 32> bytes{};

    static Digest zero() { return Digest{}; }

    bool is_zero() const {
        for (uint8_t b : bytes)
            if (b != 0) return false;
        return true;
    }

    auto operator<=>(const Digest&) const = default;

    std::string hex() const;
    std::string short_hex() const;  // first 8 hex chars, for traces
    static std::optional<Digest> from_hex(std::string_view h);

    ByteView view() const { return ByteView(bytes.data(), bytes.size()); }
};

Digest sha3_256(ByteView data);

// Domain-separated hash: sha3_256(tag_len || tag || data).
Digest tagged_hash(std::string_view tag, ByteView data);

}  // namespace bftlab
