#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "mtr/text/segmentation.hpp"

namespace mtr {

/// Symbol-to-id table with fixed special ids. The space marker is itself a
/// special: it is identified structurally (Token::space), so a literal
/// U+2581 character in text never collides with it.
class Vocab {
public:
    static constexpr int32_t kPad = 0;
    static constexpr int32_t kBos = 1;
    static constexpr int32_t kEos = 2;
    static constexpr int32_t kUnk = 3;
    static constexpr int32_t kSpace = 4;
    static constexpr int32_t kNumSpecials = 5;

    Vocab() = default;

    /// Collects every distinct symbol of the sequences; ids are assigned in
    /// byte-lexicographic symbol order after the specials, so construction is
    /// deterministic regardless of corpus order.
    static Vocab from_tokens(const std::vector<TokenSeq>& corpus);

    /// Unknown symbols map to kUnk.
    int32_t id(const Token& t) const;
    bool contains(const Token& t) const;

    /// PAD/BOS/EOS/UNK render as "<pad>", "<s>", "</s>", "<unk>".
    const Token& token(int32_t id) const;

    size_t size() const { return entries_.size(); }

    std::vector<int32_t> ids(const TokenSeq& seq) const;
    TokenSeq tokens(const std::vector<int32_t>& ids) const;

private:
    std::vector<Token> entries_;
    std::unordered_map<std::string, int32_t> index_;  // non-space symbols only

    friend struct VocabCodec;
};

/// Binary (de)serialization helpers shared by the checkpoint container.
struct VocabCodec {
    static void write(std::string& out, const Vocab& v);
    static Vocab read(const std::string& in, size_t& pos);
};

}  // namespace mtr
