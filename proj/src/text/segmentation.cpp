#include "mtr/text/segmentation.hpp"

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "mtr/util/error.hpp"
#include "mtr/util/io.hpp"
#include "mtr/util/utf8.hpp"

namespace mtr {

const std::string kSpaceMarkerDisplay = "\xE2\x96\x81";  // U+2581

TokenSeq char_tokenize(const std::string& text) {
    TokenSeq out;
    size_t i = 0;
    while (i < text.size()) {
        char32_t cp = utf8::decode_next(text, i);
        if (cp == U' ') {
            out.push_back(space_token());
        } else {
            out.push_back(Token{utf8::encode_one(cp), false});
        }
    }
    return out;
}

std::string detokenize(const TokenSeq& seq) {
    std::string out;
    for (const Token& t : seq) {
        if (t.space) {
            out += ' ';
        } else {
            out += t.text;
        }
    }
    return out;
}

namespace {

// Splits a sentence into maximal space-free words; spaces are re-inserted by
// the callers that need them.
std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> words;
    std::string cur;
    size_t i = 0;
    while (i < text.size()) {
        size_t start = i;
        char32_t cp = utf8::decode_next(text, i);
        if (cp == U' ') {
            if (!cur.empty()) words.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.append(text, start, i - start);
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    return words;
}

std::vector<std::string> word_chars(const std::string& word) {
    std::vector<std::string> syms;
    size_t i = 0;
    while (i < word.size()) {
        char32_t cp = utf8::decode_next(word, i);
        syms.push_back(utf8::encode_one(cp));
    }
    return syms;
}

// One full left-to-right pass replacing every non-overlapping (left, right)
// occurrence; a freshly merged symbol can immediately pair with the symbol
// after it on the same pass.
void apply_merge(std::vector<std::string>& syms, const std::string& left,
                 const std::string& right) {
    size_t w = 0;
    size_t r = 0;
    while (r < syms.size()) {
        if (r + 1 < syms.size() && syms[r] == left && syms[r + 1] == right) {
            syms[w] = left + right;
            r += 2;
        } else {
            if (w != r) syms[w] = std::move(syms[r]);
            ++r;
        }
        ++w;
    }
    syms.resize(w);
}

}  // namespace

SegmentationModel bpe_train(const std::vector<std::string>& corpus, size_t n_merges) {
    if (n_merges < 1) fail("bpe_train: n_merges must be at least 1");

    std::unordered_map<std::string, uint64_t> freq;
    for (const std::string& line : corpus) {
        for (std::string& w : split_words(line)) freq[std::move(w)]++;
    }
    if (freq.empty()) fail("bpe_train: corpus contains no words");

    struct Entry {
        std::vector<std::string> syms;
        uint64_t count;
    };
    std::vector<Entry> words;
    words.reserve(freq.size());
    for (const auto& [word, count] : freq) words.push_back({word_chars(word), count});

    SegmentationModel model;
    model.kind = SegmentationModel::Kind::Bpe;
    model.merges.reserve(n_merges);

    using Pair = std::pair<std::string, std::string>;
    for (size_t step = 0; step < n_merges; ++step) {
        std::map<Pair, uint64_t> pairs;
        for (const Entry& e : words) {
            for (size_t i = 0; i + 1 < e.syms.size(); ++i) {
                pairs[{e.syms[i], e.syms[i + 1]}] += e.count;
            }
        }
        if (pairs.empty()) {
            model.truncated = true;
            break;
        }
        // std::map iterates in lexicographic pair order, so the first entry
        // with the maximal count is the tie-break winner.
        const Pair* best = nullptr;
        uint64_t best_count = 0;
        for (const auto& [pair, count] : pairs) {
            if (count > best_count) {
                best = &pair;
                best_count = count;
            }
        }
        model.merges.push_back(*best);
        for (Entry& e : words) apply_merge(e.syms, best->first, best->second);
    }
    return model;
}

std::vector<std::string> segment_word(const SegmentationModel& model, const std::string& word) {
    std::vector<std::string> syms = word_chars(word);
    if (model.kind == SegmentationModel::Kind::Bpe) {
        for (const auto& [left, right] : model.merges) apply_merge(syms, left, right);
    }
    return syms;
}

TokenSeq bpe_apply(const SegmentationModel& model, const std::string& text) {
    if (model.kind != SegmentationModel::Kind::Bpe) fail("bpe_apply: model is not BPE");
    return segment(model, text);
}

TokenSeq segment(const SegmentationModel& model, const std::string& text) {
    TokenSeq out;
    std::string word;
    auto flush = [&] {
        if (word.empty()) return;
        for (std::string& s : segment_word(model, word)) out.push_back(Token{std::move(s), false});
        word.clear();
    };
    size_t i = 0;
    while (i < text.size()) {
        size_t start = i;
        char32_t cp = utf8::decode_next(text, i);
        if (cp == U' ') {
            flush();
            out.push_back(space_token());
        } else {
            word.append(text, start, i - start);
        }
    }
    flush();
    return out;
}

void save_merges(const SegmentationModel& model, const std::string& path) {
    std::ostringstream os;
    os << "#mtrobust-bpe v1 n=" << model.merges.size() << "\n";
    for (const auto& [left, right] : model.merges) os << left << ' ' << right << "\n";
    write_file(path, os.str());
}

SegmentationModel load_merges(const std::string& path) {
    std::vector<std::string> lines = read_lines(path);
    if (lines.empty()) fail("merges file is empty: " + path);

    const std::string prefix = "#mtrobust-bpe v1 n=";
    if (lines[0].rfind(prefix, 0) != 0) fail("merges file has a bad header: " + path);
    size_t declared = 0;
    try {
        declared = std::stoull(lines[0].substr(prefix.size()));
    } catch (const std::exception&) {
        fail("merges file has a bad merge count: " + path);
    }
    if (lines.size() - 1 != declared) {
        fail("merges file declares " + std::to_string(declared) + " merges but has " +
             std::to_string(lines.size() - 1) + ": " + path);
    }

    SegmentationModel model;
    model.kind = SegmentationModel::Kind::Bpe;
    model.merges.reserve(declared);
    // Every merge side must be reachable: a single character or the product
    // of an earlier merge. Catches corrupt or reordered files.
    std::unordered_set<std::string> products;
    for (size_t n = 1; n < lines.size(); ++n) {
        const std::string& line = lines[n];
        size_t sp = line.find(' ');
        if (sp == std::string::npos || sp == 0 || sp + 1 >= line.size() ||
            line.find(' ', sp + 1) != std::string::npos) {
            fail("merges file line " + std::to_string(n + 1) + " is not `left right`: " + path);
        }
        std::string left = line.substr(0, sp);
        std::string right = line.substr(sp + 1);
        for (const std::string* side : {&left, &right}) {
            if (!utf8::valid(*side)) {
                fail("merges file line " + std::to_string(n + 1) + " is not UTF-8: " + path);
            }
            size_t i = 0;
            utf8::decode_next(*side, i);
            bool single_char = i == side->size();
            if (!single_char && !products.count(*side)) {
                fail("merges file line " + std::to_string(n + 1) + " uses symbol `" + *side +
                     "` before any merge produces it: " + path);
            }
        }
        products.insert(left + right);
        model.merges.emplace_back(std::move(left), std::move(right));
    }
    return model;
}

}  // namespace mtr
