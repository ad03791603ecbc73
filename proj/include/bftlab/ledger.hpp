// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "bftlab/bytes.hpp"
#include "bftlab/codec.hpp"
#include "bftlab/crypto.hpp"
#include "bftlab/hash.hpp"

namespace bftlab {

struct Transaction {
    uint64_t client_id = 0;
    uint64_t nonce = 0;
    Bytes payload;
    Authenticator client_auth;

    Bytes encode() const;
    static Transaction decode(Reader& r);
    Digest digest() const;

    // Bytes a client signs: everything except the authenticator itself.
    Bytes signing_bytes() const;

    bool operator==(const Transaction&) const = default;
};

struct BlockMeta {
    uint64_t proposer = 0;
    uint64_t view = 0;
    Bytes certificate;

    bool operator==(const BlockMeta&) const = default;
};

struct Block {
    uint64_t number = 0;
    Digest parent_digest;
    std::vector<Transaction> transactions;
    BlockMeta meta;

    // Canonical encoding: fields in declaration order, integers as 8-byte
    // big-endian, variable-length fields length-prefixed. The digest covers
    // the metadata (recorded decision; flagged for external comparisons).
    Bytes encode() const;
    static Block decode(ByteView data);
    Digest digest() const;

    static Block genesis();

    bool operator==(const Block&) const = default;
};

class WrongNumber : public std::runtime_error {
  public:
    WrongNumber(uint64_t got, uint64_t want)
        : std::runtime_error("block number " + std::to_string(got) + ", chain expects " +
                             std::to_string(want)) {}
};
class BrokenLink : public std::runtime_error {
  public:
    explicit BrokenLink(uint64_t number)
        : std::runtime_error("parent digest mismatch at block " + std::to_string(number)) {}
};

struct VerifyOk {};
struct FirstInvalid {
    uint64_t index = 0;
};
using VerifyResult = std::variant<VerifyOk, FirstInvalid>;

inline bool verify_ok(const VerifyResult& r) { return std::holds_alternative<VerifyOk>(r); }

// Append-only chain rooted at the genesis block. Value semantics; append
// returns a copy so existing snapshots are never altered.
class Chain {
  public:
    Chain();  // genesis-only

    // Wraps arbitrary blocks without validation; verify() is the judge.
    static Chain from_blocks(std::vector<Block> blocks);

    const std::vector<Block>& blocks() const { return blocks_; }
    size_t size() const { return blocks_.size(); }
    const Block& tip() const { return blocks_.back(); }
    Digest tip_digest() const { return blocks_.back().digest(); }

    // Throws WrongNumber / BrokenLink.
    void append(Block block);
    [[nodiscard]] Chain appended(Block block) const;

    // Keeps blocks [0, length); used by protocols that roll back
    // speculative execution.
    void truncate(size_t length);

    // Ok iff every number and parent link holds; otherwise the smallest
    // offending index.
    VerifyResult verify() const;

    std::string to_json() const;
    static Chain from_json(const std::string& text);  // throws DecodeError

    bool operator==(const Chain&) const = default;

  private:
    std::vector<Block> blocks_;
};

}  // namespace bftlab
