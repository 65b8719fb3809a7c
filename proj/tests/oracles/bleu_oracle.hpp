#pragma once

// Reference corpus BLEU, written independently of the library scorer: its
// own tokenizer loop, vector-keyed ordered maps, and per-order accumulation.
// Formula: BP · exp(¼ Σ_{n=1..4} log p_n) · 100 with clipped counts.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "mtr/util/uchar_class.hpp"
#include "mtr/util/utf8.hpp"

namespace oracle {

inline std::vector<std::string> bleu_tokens(const std::string& line) {
    std::vector<std::string> out;
    std::vector<char32_t> cps = mtr::utf8::decode(line);
    std::string word;
    for (char32_t cp : cps) {
        if (cp == U' ' || cp == U'\t') {
            if (!word.empty()) out.push_back(word);
            word.clear();
        } else if (mtr::is_punct_or_symbol(cp)) {
            if (!word.empty()) out.push_back(word);
            word.clear();
            out.push_back(mtr::utf8::encode_one(cp));
        } else {
            word += mtr::utf8::encode_one(cp);
        }
    }
    if (!word.empty()) out.push_back(word);
    return out;
}

inline double corpus_bleu(const std::vector<std::string>& hyps,
                          const std::vector<std::string>& refs) {
    long long hyp_len = 0, ref_len = 0;
    double numer[5] = {0, 0, 0, 0, 0};
    double denom[5] = {0, 0, 0, 0, 0};
    for (size_t s = 0; s < hyps.size(); ++s) {
        std::vector<std::string> h = bleu_tokens(hyps[s]);
        std::vector<std::string> r = bleu_tokens(refs[s]);
        hyp_len += static_cast<long long>(h.size());
        ref_len += static_cast<long long>(r.size());
        for (int n = 1; n <= 4; ++n) {
            std::map<std::vector<std::string>, long long> hc, rc;
            for (int i = 0; i + n <= static_cast<int>(h.size()); ++i) {
                hc[std::vector<std::string>(h.begin() + i, h.begin() + i + n)]++;
            }
            for (int i = 0; i + n <= static_cast<int>(r.size()); ++i) {
                rc[std::vector<std::string>(r.begin() + i, r.begin() + i + n)]++;
            }
            for (const auto& [gram, count] : hc) {
                denom[n] += static_cast<double>(count);
                auto it = rc.find(gram);
                if (it != rc.end()) {
                    numer[n] += static_cast<double>(std::min(count, it->second));
                }
            }
        }
    }
    double log_sum = 0.0;
    for (int n = 1; n <= 4; ++n) {
        if (numer[n] == 0.0 || denom[n] == 0.0) return 0.0;
        log_sum += std::log(numer[n] / denom[n]) / 4.0;
    }
    if (hyp_len == 0) return 0.0;
    double bp = hyp_len >= ref_len
                    ? 1.0
                    : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
    return 100.0 * bp * std::exp(log_sum);
}

}  // namespace oracle
