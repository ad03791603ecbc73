// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftlab/hash.hpp"

#include <openssl/evp.h>

#include <stdexcept>

#include "bftlab/codec.hpp"

namespace bftlab {

namespace {
constexpr char kHexDigits[] = "0123456789abcdef";
}

std::string to_hex(ByteView data) {
    std::string out;
    out.reserve(data.size() * 2);
    for (uint8_t b : data) {
        out.push_back(kHexDigits[b >> 4]);
        out.push_back(kHexDigits[b & 0x0f]);
    }
    return out;
}

static int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

std::optional<Bytes> from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) return std::nullopt;
    Bytes out;
    out.reserve(hex.size() / 2);
    for (size_t i = 0; i < hex.size(); i += 2) {
        int hi = hex_nibble(hex[i]);
        int lo = hex_nibble(hex[i + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        out.push_back(static_cast<uint8_t>((hi << 4) | lo));
    }
    return out;
}

std::string Digest::hex() const { return to_hex(view()); }

std::string Digest::short_hex() const { return hex().substr(0, 8); }

std::optional<Digest> Digest::from_hex(std::string_view h) {
    auto raw = bftlab::from_hex(h);
    if (!raw || raw->size() != 32) return std::nullopt;
    Digest d;
    std::copy(raw->begin(), raw->end(), d.bytes.begin());
    return d;
}

Digest sha3_256(ByteView data) {
    Digest out;
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.bytes.data(), &len, EVP_sha3_256(), nullptr) != 1 ||
        len != out.bytes.size())
        throw std::runtime_error("sha3-256 failed");
    return out;
}

Digest tagged_hash(std::string_view tag, ByteView data) {
    Writer w;
    w.str(tag);
    w.raw(data);
    return sha3_256(w.bytes());
}

}  // namespace bftlab
