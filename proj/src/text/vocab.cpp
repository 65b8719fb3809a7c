#include "mtr/text/vocab.hpp"

#include <algorithm>
#include <set>

#include "mtr/util/binio.hpp"
#include "mtr/util/error.hpp"

namespace mtr {

namespace {

std::vector<Token> special_entries() {
    return {
        Token{"<pad>", false}, Token{"<s>", false},   Token{"</s>", false},
        Token{"<unk>", false}, space_token(),
    };
}

}  // namespace

Vocab Vocab::from_tokens(const std::vector<TokenSeq>& corpus) {
    std::set<std::string> symbols;
    for (const TokenSeq& seq : corpus) {
        for (const Token& t : seq) {
            if (!t.space) symbols.insert(t.text);
        }
    }
    Vocab v;
    v.entries_ = special_entries();
    for (const std::string& s : symbols) {
        v.index_.emplace(s, static_cast<int32_t>(v.entries_.size()));
        v.entries_.push_back(Token{s, false});
    }
    return v;
}

int32_t Vocab::id(const Token& t) const {
    if (t.space) return kSpace;
    auto it = index_.find(t.text);
    return it == index_.end() ? kUnk : it->second;
}

bool Vocab::contains(const Token& t) const {
    return t.space || index_.count(t.text) > 0;
}

const Token& Vocab::token(int32_t id) const {
    if (id < 0 || static_cast<size_t>(id) >= entries_.size()) fail("vocab id out of range");
    return entries_[static_cast<size_t>(id)];
}

std::vector<int32_t> Vocab::ids(const TokenSeq& seq) const {
    std::vector<int32_t> out;
    out.reserve(seq.size());
    for (const Token& t : seq) out.push_back(id(t));
    return out;
}

TokenSeq Vocab::tokens(const std::vector<int32_t>& ids) const {
    TokenSeq out;
    out.reserve(ids.size());
    for (int32_t i : ids) out.push_back(token(i));
    return out;
}

void VocabCodec::write(std::string& out, const Vocab& v) {
    binio::put_u64(out, v.entries_.size() - Vocab::kNumSpecials);
    for (size_t i = Vocab::kNumSpecials; i < v.entries_.size(); ++i) {
        binio::put_str(out, v.entries_[i].text);
    }
}

Vocab VocabCodec::read(const std::string& in, size_t& pos) {
    Vocab v;
    v.entries_ = special_entries();
    uint64_t n = binio::get_u64(in, pos);
    for (uint64_t i = 0; i < n; ++i) {
        std::string s = binio::get_str(in, pos);
        v.index_.emplace(s, static_cast<int32_t>(v.entries_.size()));
        v.entries_.push_back(Token{std::move(s), false});
    }
    return v;
}

}  // namespace mtr
