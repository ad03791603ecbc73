// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftlab/ledger.hpp"

#include <json.hpp>

#include "bftlab/codec.hpp"

namespace bftlab {

using ordered_json = nlohmann::ordered_json;

Bytes Transaction::signing_bytes() const {
    Writer w;
    w.u64(client_id);
    w.u64(nonce);
    w.blob(payload);
    return w.take();
}

Bytes Transaction::encode() const {
    Writer w;
    w.u64(client_id);
    w.u64(nonce);
    w.blob(payload);
    w.u8(static_cast<uint8_t>(client_auth.kind));
    w.u64(client_auth.signer);
    w.blob(client_auth.bytes);
    return w.take();
}

Transaction Transaction::decode(Reader& r) {
    Transaction tx;
    tx.client_id = r.u64();
    tx.nonce = r.u64();
    tx.payload = r.blob();
    uint8_t kind = r.u8();
    if (kind > 1) throw DecodeError("bad authenticator kind");
    tx.client_auth.kind = static_cast<AuthKind>(kind);
    tx.client_auth.signer = static_cast<NodeId>(r.u64());
    tx.client_auth.bytes = r.blob();
    return tx;
}

Digest Transaction::digest() const { return tagged_hash("bftlab.txn", encode()); }

Bytes Block::encode() const {
    Writer w;
    w.u64(number);
    w.raw(parent_digest.view());
    w.u64(transactions.size());
    for (const auto& tx : transactions) w.blob(tx.encode());
    w.u64(meta.proposer);
    w.u64(meta.view);
    w.blob(meta.certificate);
    return w.take();
}

Block Block::decode(ByteView data) {
    Reader r(data);
    Block b;
    b.number = r.u64();
    Bytes parent = r.raw(32);
    std::copy(parent.begin(), parent.end(), b.parent_digest.bytes.begin());
    uint64_t count = r.u64();
    for (uint64_t i = 0; i < count; ++i) {
        Bytes txbytes = r.blob();
        Reader tr(txbytes);
        b.transactions.push_back(Transaction::decode(tr));
        tr.expect_done();
    }
    b.meta.proposer = r.u64();
    b.meta.view = r.u64();
    b.meta.certificate = r.blob();
    r.expect_done();
    return b;
}

Digest Block::digest() const { return tagged_hash("bftlab.block", encode()); }

Block Block::genesis() {
    Block g;
    g.number = 0;
    g.parent_digest = Digest::zero();
    return g;
}

Chain::Chain() { blocks_.push_back(Block::genesis()); }

Chain Chain::from_blocks(std::vector<Block> blocks) {
    Chain chain;
    chain.blocks_ = std::move(blocks);
    return chain;
}

void Chain::append(Block block) {
    if (block.number != blocks_.size()) throw WrongNumber(block.number, blocks_.size());
    if (block.parent_digest != tip_digest()) throw BrokenLink(block.number);
    blocks_.push_back(std::move(block));
}

Chain Chain::appended(Block block) const {
    Chain next = *this;
    next.append(std::move(block));
    return next;
}

void Chain::truncate(size_t length) {
    if (length < 1) length = 1;  // genesis always stays
    if (length < blocks_.size()) blocks_.resize(length);
}

VerifyResult Chain::verify() const {
    if (blocks_.empty() || blocks_[0].number != 0 || !blocks_[0].parent_digest.is_zero() ||
        !blocks_[0].transactions.empty())
        return FirstInvalid{0};
    for (size_t i = 1; i < blocks_.size(); ++i) {
        if (blocks_[i].number != i) return FirstInvalid{i};
        if (blocks_[i].parent_digest != blocks_[i - 1].digest()) return FirstInvalid{i};
    }
    return VerifyOk{};
}

static ordered_json txn_to_json(const Transaction& tx) {
    ordered_json j;
    j["client"] = tx.client_id;
    j["nonce"] = tx.nonce;
    j["payload"] = to_hex(tx.payload);
    j["auth"] = {{"kind", tx.client_auth.kind == AuthKind::signature ? "sig" : "mac"},
                 {"signer", tx.client_auth.signer},
                 {"bytes", to_hex(tx.client_auth.bytes)}};
    return j;
}

static Transaction txn_from_json(const ordered_json& j) {
    Transaction tx;
    tx.client_id = j.at("client").get<uint64_t>();
    tx.nonce = j.at("nonce").get<uint64_t>();
    auto payload = from_hex(j.at("payload").get<std::string>());
    if (!payload) throw DecodeError("bad payload hex");
    tx.payload = *payload;
    const auto& a = j.at("auth");
    std::string kind = a.at("kind").get<std::string>();
    if (kind != "sig" && kind != "mac") throw DecodeError("bad auth kind");
    tx.client_auth.kind = kind == "sig" ? AuthKind::signature : AuthKind::mac;
    tx.client_auth.signer = a.at("signer").get<NodeId>();
    auto bytes = from_hex(a.at("bytes").get<std::string>());
    if (!bytes) throw DecodeError("bad auth hex");
    tx.client_auth.bytes = *bytes;
    return tx;
}

std::string Chain::to_json() const {
    ordered_json arr = ordered_json::array();
    for (const auto& b : blocks_) {
        ordered_json j;
        j["number"] = b.number;
        j["parent"] = b.parent_digest.hex();
        j["digest"] = b.digest().hex();
        ordered_json txs = ordered_json::array();
        for (const auto& tx : b.transactions) txs.push_back(txn_to_json(tx));
        j["transactions"] = std::move(txs);
        j["meta"] = {{"proposer", b.meta.proposer},
                     {"view", b.meta.view},
                     {"cert", to_hex(b.meta.certificate)}};
        arr.push_back(std::move(j));
    }
    return arr.dump();
}

Chain Chain::from_json(const std::string& text) {
    ordered_json arr = ordered_json::parse(text, nullptr, false);
    if (arr.is_discarded() || !arr.is_array() || arr.empty())
        throw DecodeError("chain json: expected a non-empty array");
    Chain chain;
    chain.blocks_.clear();
    for (const auto& j : arr) {
        Block b;
        b.number = j.at("number").get<uint64_t>();
        auto parent = Digest::from_hex(j.at("parent").get<std::string>());
        if (!parent) throw DecodeError("bad parent digest hex");
        b.parent_digest = *parent;
        for (const auto& tj : j.at("transactions")) b.transactions.push_back(txn_from_json(tj));
        const auto& m = j.at("meta");
        b.meta.proposer = m.at("proposer").get<uint64_t>();
        b.meta.view = m.at("view").get<uint64_t>();
        auto cert = from_hex(m.at("cert").get<std::string>());
        if (!cert) throw DecodeError("bad certificate hex");
        b.meta.certificate = *cert;
        // Exported digests are advisory; verify() recomputes them.
        chain.blocks_.push_back(std::move(b));
    }
    return chain;
}

}  // namespace bftlab
