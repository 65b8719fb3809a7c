#pragma once

#include <string>
#include <utility>
#include <vector>

namespace mtr {

/// One segmentation token. Word boundaries are carried by dedicated
/// space-marker tokens (`space == true`), so any byte sequence round-trips:
/// marker-ness is structural, never inferred from the text.
struct Token {
    std::string text;
    bool space = false;

    bool operator==(const Token&) const = default;
};

using TokenSeq = std::vector<Token>;

/// Display form of the space marker (U+2581). Never used for identity.
extern const std::string kSpaceMarkerDisplay;

inline Token space_token() { return Token{kSpaceMarkerDisplay, true}; }

/// Character-level or ordered-merge BPE segmentation. Merges apply strictly
/// within words; immutable after training, safe to share across threads.
struct SegmentationModel {
    enum class Kind { Character, Bpe };

    Kind kind = Kind::Character;
    /// Ordered (left, right) symbol pairs; empty for Character.
    std::vector<std::pair<std::string, std::string>> merges;
    /// Set when training exhausted distinct pairs before reaching the
    /// requested merge count.
    bool truncated = false;

    size_t n_merges() const { return merges.size(); }
};

/// One token per Unicode scalar value; U+0020 becomes the space marker.
/// Throws on invalid UTF-8.
TokenSeq char_tokenize(const std::string& text);

/// Inverse of segmentation: concatenates token texts, space markers become
/// literal spaces. Total on any token sequence.
std::string detokenize(const TokenSeq& seq);

/// Learns `n_merges` merges by repeatedly taking the highest-frequency
/// adjacent symbol pair, recounting after every merge. Pair counting never
/// crosses word boundaries; frequency ties break lexicographically on
/// (left, right). Throws on an empty corpus (no words) or n_merges < 1;
/// exhausting all pairs early sets `truncated` instead.
SegmentationModel bpe_train(const std::vector<std::string>& corpus, size_t n_merges);

/// Splits each word to characters and replays the model's merges in order,
/// leftmost-first within each merge. Characters unseen in training pass
/// through as singleton symbols. Requires kind == Bpe.
TokenSeq bpe_apply(const SegmentationModel& model, const std::string& text);

/// Character or BPE segmentation, per model kind.
TokenSeq segment(const SegmentationModel& model, const std::string& text);

/// Segments just one word (no spaces) into symbol strings.
std::vector<std::string> segment_word(const SegmentationModel& model, const std::string& word);

/// Merges file: UTF-8 text, header `#mtrobust-bpe v1 n=<count>`, then one
/// `left right` line per merge, in order.
void save_merges(const SegmentationModel& model, const std::string& path);
SegmentationModel load_merges(const std::string& path);

}  // namespace mtr
