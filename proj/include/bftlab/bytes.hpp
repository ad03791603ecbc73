// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bftlab {

using Bytes = std::vector<uint8_t>;
using ByteView = std::span<const uint8_t>;

using NodeId = uint32_t;
using Tick = uint64_t;

inline Bytes to_bytes(std::string_view s) {
    return Bytes(s.begin(), s.end());
}

inline std::string to_string(ByteView b) {
    return std::string(b.begin(), b.end());
}

std::string to_hex(ByteView data);
std::optional<Bytes> from_hex(std::string_view hex);

}  // namespace bftlab
