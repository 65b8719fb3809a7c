#pragma once

// Brute-force BPE trainer kept deliberately independent of the library
// implementation: plain maps keyed by symbol vectors, full recount each
// round, no shared helpers. Used as the ground-truth oracle for merge lists.

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mtr/util/utf8.hpp"

namespace oracle {

inline std::vector<std::vector<std::string>> words_as_chars(const std::vector<std::string>& corpus) {
    std::vector<std::vector<std::string>> words;
    for (const std::string& line : corpus) {
        std::vector<std::string> cur;
        size_t i = 0;
        while (i < line.size()) {
            char32_t cp = mtr::utf8::decode_next(line, i);
            if (cp == U' ') {
                if (!cur.empty()) words.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(mtr::utf8::encode_one(cp));
            }
        }
        if (!cur.empty()) words.push_back(cur);
    }
    return words;
}

// Returns the ordered merge list; may be shorter than n_merges when the
// corpus runs out of adjacent pairs.
inline std::vector<std::pair<std::string, std::string>> bpe_merges(
    const std::vector<std::string>& corpus, size_t n_merges) {
    // Keep every word occurrence separately; no frequency bucketing at all.
    std::vector<std::vector<std::string>> words = words_as_chars(corpus);
    std::vector<std::pair<std::string, std::string>> merges;
    for (size_t round = 0; round < n_merges; ++round) {
        std::map<std::pair<std::string, std::string>, size_t> counts;
        for (const auto& w : words) {
            for (size_t i = 0; i + 1 < w.size(); ++i) counts[{w[i], w[i + 1]}]++;
        }
        if (counts.empty()) break;
        std::pair<std::string, std::string> best;
        size_t best_count = 0;
        for (const auto& [pair, count] : counts) {
            if (count > best_count || (count == best_count && pair < best)) {
                best = pair;
                best_count = count;
            }
        }
        merges.push_back(best);
        for (auto& w : words) {
            std::vector<std::string> out;
            size_t i = 0;
            while (i < w.size()) {
                if (i + 1 < w.size() && w[i] == best.first && w[i + 1] == best.second) {
                    out.push_back(best.first + best.second);
                    i += 2;
                } else {
                    out.push_back(w[i]);
                    ++i;
                }
            }
            w = std::move(out);
        }
    }
    return merges;
}

}  // namespace oracle
