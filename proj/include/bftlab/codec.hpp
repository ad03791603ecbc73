// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstring>
#include <stdexcept>
#include <string>

#include "bftlab/bytes.hpp"

namespace bftlab {

// Canonical encoding used everywhere a digest or a wire frame is computed:
// fixed-width integers in big-endian byte order, variable-length fields
// prefixed with a u64 length.

class DecodeError : public std::runtime_error {
  public:
    explicit DecodeError(const std::string& what) : std::runtime_error(what) {}
};

class Writer {
  public:
    void u8(uint8_t v) { out_.push_back(v); }

    void u32(uint32_t v) {
        for (int shift = 24; shift >= 0; shift -= 8)
            out_.push_back(static_cast<uint8_t>(v >> shift));
    }

    void u64(uint64_t v) {
        for (int shift = 56; shift >= 0; shift -= 8)
            out_.push_back(static_cast<uint8_t>(v >> shift));
    }

    void raw(ByteView data) { out_.insert(out_.end(), data.begin(), data.end()); }

    void blob(ByteView data) {
        u64(data.size());
        raw(data);
    }

    void str(std::string_view s) {
        u64(s.size());
        out_.insert(out_.end(), s.begin(), s.end());
    }

    const Bytes& bytes() const { return out_; }
    Bytes take() { return std::move(out_); }

  private:
    Bytes out_;
};

class Reader {
  public:
    explicit Reader(ByteView data) : in_(data) {}

    uint8_t u8() {
        need(1);
        return in_[pos_++];
    }

    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | in_[pos_++];
        return v;
    }

    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = (v << 8) | in_[pos_++];
        return v;
    }

    Bytes raw(size_t len) {
        need(len);
        Bytes out(in_.begin() + pos_, in_.begin() + pos_ + len);
        pos_ += len;
        return out;
    }

    Bytes blob() {
        uint64_t len = u64();
        if (len > remaining()) throw DecodeError("blob length exceeds input");
        return raw(static_cast<size_t>(len));
    }

    std::string str() {
        Bytes b = blob();
        return std::string(b.begin(), b.end());
    }

    size_t remaining() const { return in_.size() - pos_; }
    bool done() const { return pos_ == in_.size(); }

    void expect_done() const {
        if (!done()) throw DecodeError("trailing bytes after decode");
    }

  private:
    void need(size_t n) const {
        if (remaining() < n) throw DecodeError("input truncated");
    }

    ByteView in_;
    size_t pos_ = 0;
};

}  // namespace bftlab
