#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace mtr {

/// Interpolated Kneser-Ney n-gram model over whitespace word tokens.
///
/// Counts: the highest order keeps raw corpus counts; every lower order k
/// uses continuation counts |{v : raw_{k+1}(v·g) > 0}|, except that k-grams
/// beginning with the sentence-start marker keep raw counts (they have no
/// left extensions beyond the padding). Each sentence is padded with order−1
/// start markers and one end marker; n-grams ending in the start marker are
/// never counted or scored. One discount per order, D = n1/(n1 + 2·n2) from
/// that order's count-of-counts. The unigram level interpolates with the
/// uniform distribution over the event space (training words + end marker +
/// the unknown word), which gives unknown words their probability floor.
class KnLanguageModel {
public:
    /// Errors on an empty corpus (no lines) or order < 1. A degenerate order
    /// (n1 + 2·n2 = 0) gets discount 0 and sets degenerate_discounts().
    static KnLanguageModel train(const std::vector<std::string>& corpus, int order);

    /// P(word | context), using the last order−1 context entries (fewer is
    /// fine; they are start-padded). Words outside the training vocabulary —
    /// in either slot — are treated as the unknown word. `word` may also be
    /// "</s>". Always positive; sums to 1 over the event space per context.
    double prob(const std::vector<std::string>& context, const std::string& word) const;

    /// exp(mean negative log probability) over all word tokens plus one end
    /// marker per sentence. Errors on an empty test list.
    double perplexity(const std::vector<std::string>& test) const;

    int order() const { return order_; }
    const std::vector<double>& discounts() const { return discounts_; }
    bool degenerate_discounts() const { return degenerate_; }

    /// Event strings the conditional distribution ranges over: every
    /// training word plus "</s>" and "<unk>".
    std::vector<std::string> event_space() const;

    /// Versioned text format with a self-describing header.
    void save(const std::string& path) const;
    static KnLanguageModel load(const std::string& path);

private:
    using Key = std::u32string;  // token ids, one char32_t per token

    struct Ctx {
        uint64_t total = 0;
        uint32_t n1plus = 0;
    };

    double prob_ids(const Key& context, char32_t word) const;
    void build_contexts();
    int32_t word_id(const std::string& w) const;

    int order_ = 0;
    bool degenerate_ = false;
    std::vector<double> discounts_;                     // [order]
    std::vector<std::string> id2word_;                  // 0 <unk>, 1 <s>, 2 </s>, then words
    std::unordered_map<std::string, int32_t> word2id_;  // real words only
    std::vector<std::unordered_map<Key, uint64_t>> events_;  // [order] adjusted counts
    std::vector<std::unordered_map<Key, Ctx>> contexts_;     // [order] per-context sums
};

}  // namespace mtr
