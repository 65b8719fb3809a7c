#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace mtr {

struct BleuScore {
    double score = 0.0;  // [0, 100]
    std::array<double, 4> precisions{};  // modified n-gram precisions, [0,1]
    double brevity_penalty = 0.0;
    uint64_t hyp_tokens = 0;
    uint64_t ref_tokens = 0;
};

/// Scorer tokenization: every Unicode punctuation/symbol character becomes a
/// standalone token, then the line splits on whitespace. Fixed so scores are
/// comparable across character- and subword-based systems; case-sensitive.
std::vector<std::string> bleu_tokenize(const std::string& line);

/// Corpus-level BLEU-4: clipped modified n-gram precision, unsmoothed,
/// geometric mean over orders 1..4, multiplied by the brevity penalty
/// exp(1 - ref/hyp) when the hypothesis side is shorter. Scores 0 when any
/// order has no match. Errors on empty input or length mismatch.
BleuScore corpus_bleu(const std::vector<std::string>& hypotheses,
                      const std::vector<std::string>& references);

/// Diagnostic only: single-sentence BLEU with add-one smoothing on orders
/// 2..4 so it never collapses to 0 on short sentences.
double sentence_bleu_smoothed(const std::string& hypothesis, const std::string& reference);

}  // namespace mtr
