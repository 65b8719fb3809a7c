#pragma once

// Shared generators for randomized tests.

#include <string>
#include <vector>

#include "mtr/util/rng.hpp"
#include "mtr/util/utf8.hpp"

namespace testgen {

// Mixed-script code point pool: ASCII letters/digits/punctuation, Latin-1
// letters, Greek, Cyrillic, CJK, symbols, and the space marker display
// character itself (round-trips must survive it appearing literally).
inline char32_t random_scalar(mtr::Rng& rng) {
    switch (rng.below(10)) {
        case 0: return U'a' + static_cast<char32_t>(rng.below(26));
        case 1: return U'A' + static_cast<char32_t>(rng.below(26));
        case 2: return U'0' + static_cast<char32_t>(rng.below(10));
        case 3: return U'!' + static_cast<char32_t>(rng.below(15));  // ASCII punctuation
        case 4: return U'À' + static_cast<char32_t>(rng.below(0x50));  // Latin-1 letters
        case 5: return U'Α' + static_cast<char32_t>(rng.below(0x30));  // Greek
        case 6: return U'А' + static_cast<char32_t>(rng.below(0x40));  // Cyrillic
        case 7: return U'一' + static_cast<char32_t>(rng.below(0x200));  // CJK
        case 8: return U'€';  // euro sign (Sc)
        default: return U'▁';  // the space-marker display character
    }
}

inline std::string random_text(mtr::Rng& rng, size_t max_len) {
    std::string s;
    size_t len = rng.below(max_len + 1);
    for (size_t i = 0; i < len; ++i) {
        if (rng.below(5) == 0) {
            s += ' ';
        } else {
            mtr::utf8::append(s, random_scalar(rng));
        }
    }
    return s;
}

// Small-alphabet word corpus for BPE/LM tests: `words` words of length 1..6
// over letters a..e so pair collisions (and frequency ties) are common.
inline std::vector<std::string> random_word_corpus(mtr::Rng& rng, size_t words,
                                                   size_t words_per_line = 6) {
    std::vector<std::string> lines;
    std::string line;
    size_t in_line = 0;
    for (size_t i = 0; i < words; ++i) {
        size_t len = 1 + rng.below(6);
        if (!line.empty()) line += ' ';
        for (size_t j = 0; j < len; ++j) line += static_cast<char>('a' + rng.below(5));
        if (++in_line == words_per_line) {
            lines.push_back(line);
            line.clear();
            in_line = 0;
        }
    }
    if (!line.empty()) lines.push_back(line);
    return lines;
}

}  // namespace testgen
