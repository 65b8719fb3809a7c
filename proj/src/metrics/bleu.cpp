#include "mtr/metrics/bleu.hpp"

#include <cmath>
#include <unordered_map>

#include "mtr/util/error.hpp"
#include "mtr/util/uchar_class.hpp"
#include "mtr/util/utf8.hpp"

namespace mtr {

std::vector<std::string> bleu_tokenize(const std::string& line) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) tokens.push_back(std::move(cur));
        cur.clear();
    };
    size_t i = 0;
    while (i < line.size()) {
        char32_t cp = utf8::decode_next(line, i);
        if (cp == U' ' || cp == U'\t') {
            flush();
        } else if (is_punct_or_symbol(cp)) {
            flush();
            tokens.push_back(utf8::encode_one(cp));
        } else {
            utf8::append(cur, cp);
        }
    }
    flush();
    return tokens;
}

namespace {

// n-grams keyed by their joined tokens; \x1F never appears inside a token.
std::unordered_map<std::string, uint64_t> ngram_counts(const std::vector<std::string>& tokens,
                                                       size_t n) {
    std::unordered_map<std::string, uint64_t> counts;
    if (tokens.size() < n) return counts;
    for (size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key = tokens[i];
        for (size_t j = 1; j < n; ++j) {
            key += '\x1F';
            key += tokens[i + j];
        }
        ++counts[key];
    }
    return counts;
}

}  // namespace

BleuScore corpus_bleu(const std::vector<std::string>& hypotheses,
                      const std::vector<std::string>& references) {
    if (hypotheses.empty()) fail("corpus_bleu: empty corpus");
    if (hypotheses.size() != references.size()) {
        fail("corpus_bleu: " + std::to_string(hypotheses.size()) + " hypotheses vs " +
             std::to_string(references.size()) + " references");
    }

    std::array<uint64_t, 4> matches{};
    std::array<uint64_t, 4> totals{};
    BleuScore out;
    for (size_t s = 0; s < hypotheses.size(); ++s) {
        std::vector<std::string> hyp = bleu_tokenize(hypotheses[s]);
        std::vector<std::string> ref = bleu_tokenize(references[s]);
        out.hyp_tokens += hyp.size();
        out.ref_tokens += ref.size();
        for (size_t n = 1; n <= 4; ++n) {
            if (hyp.size() < n) continue;
            totals[n - 1] += hyp.size() - n + 1;
            auto rc = ngram_counts(ref, n);
            for (const auto& [gram, count] : ngram_counts(hyp, n)) {
                auto it = rc.find(gram);
                if (it != rc.end()) matches[n - 1] += std::min(count, it->second);
            }
        }
    }

    double log_prec_sum = 0.0;
    bool zero = false;
    for (size_t n = 0; n < 4; ++n) {
        out.precisions[n] =
            totals[n] == 0 ? 0.0 : static_cast<double>(matches[n]) / static_cast<double>(totals[n]);
        if (out.precisions[n] == 0.0) {
            zero = true;
        } else {
            log_prec_sum += std::log(out.precisions[n]);
        }
    }

    if (out.hyp_tokens == 0) {
        out.brevity_penalty = 0.0;
    } else if (out.hyp_tokens >= out.ref_tokens) {
        out.brevity_penalty = 1.0;
    } else {
        out.brevity_penalty = std::exp(1.0 - static_cast<double>(out.ref_tokens) /
                                                 static_cast<double>(out.hyp_tokens));
    }

    out.score = zero ? 0.0 : 100.0 * out.brevity_penalty * std::exp(log_prec_sum / 4.0);
    return out;
}

double sentence_bleu_smoothed(const std::string& hypothesis, const std::string& reference) {
    std::vector<std::string> hyp = bleu_tokenize(hypothesis);
    std::vector<std::string> ref = bleu_tokenize(reference);
    double log_prec_sum = 0.0;
    for (size_t n = 1; n <= 4; ++n) {
        uint64_t total = hyp.size() >= n ? hyp.size() - n + 1 : 0;
        uint64_t match = 0;
        auto rc = ngram_counts(ref, n);
        for (const auto& [gram, count] : ngram_counts(hyp, n)) {
            auto it = rc.find(gram);
            if (it != rc.end()) match += std::min(count, it->second);
        }
        double p = n == 1 ? (total ? static_cast<double>(match) / static_cast<double>(total) : 0.0)
                          : (static_cast<double>(match) + 1.0) / (static_cast<double>(total) + 1.0);
        if (p == 0.0) return 0.0;
        log_prec_sum += std::log(p);
    }
    double bp = 1.0;
    if (hyp.empty()) return 0.0;
    if (hyp.size() < ref.size()) {
        bp = std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(hyp.size()));
    }
    return 100.0 * bp * std::exp(log_prec_sum / 4.0);
}

}  // namespace mtr
