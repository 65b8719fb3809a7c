#include "mtr/text/noise.hpp"

#include <algorithm>
#include <set>

#include "mtr/util/error.hpp"
#include "mtr/util/io.hpp"
#include "mtr/util/rng.hpp"
#include "mtr/util/uchar_class.hpp"
#include "mtr/util/utf8.hpp"

namespace mtr {

const char* noise_kind_name(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::Delete: return "delete";
        case NoiseKind::Insert: return "insert";
        case NoiseKind::Replace: return "replace";
        case NoiseKind::Switch: return "switch";
        case NoiseKind::All: return "all";
        case NoiseKind::Natural: return "natural";
    }
    fail("unknown noise kind");
}

std::optional<NoiseKind> parse_noise_kind(const std::string& name) {
    for (NoiseKind k : {NoiseKind::Delete, NoiseKind::Insert, NoiseKind::Replace,
                        NoiseKind::Switch, NoiseKind::All, NoiseKind::Natural}) {
        if (name == noise_kind_name(k)) return k;
    }
    return std::nullopt;
}

std::vector<char32_t> default_alphabet(const std::vector<std::string>& corpus) {
    std::set<char32_t> chars;
    for (const std::string& line : corpus) {
        size_t i = 0;
        while (i < line.size()) {
            char32_t cp = utf8::decode_next(line, i);
            if (cp != U' ' && !is_punct_or_symbol(cp)) chars.insert(cp);
        }
    }
    return {chars.begin(), chars.end()};
}

namespace {

bool needs_alphabet(NoiseKind kind) {
    return kind == NoiseKind::Insert || kind == NoiseKind::Replace || kind == NoiseKind::All;
}

std::u32string decode_all(const std::string& s) {
    std::u32string out;
    size_t i = 0;
    while (i < s.size()) out.push_back(utf8::decode_next(s, i));
    return out;
}

std::string encode_all(const std::u32string& s) {
    std::string out;
    for (char32_t cp : s) utf8::append(out, cp);
    return out;
}

bool delete_eligible(const std::u32string& cs, size_t i) {
    return cs.size() > 1 && !is_punct_or_symbol(cs[i]);
}

char32_t draw_replacement(char32_t cur, const std::vector<char32_t>& alphabet, Rng& rng) {
    char32_t a = alphabet[rng.below(alphabet.size())];
    if (alphabet.size() == 1) return a;  // degenerate alphabet: may repeat cur
    while (a == cur) a = alphabet[rng.below(alphabet.size())];
    return a;
}

// Every current character position consumes exactly one uniform draw whether
// or not it is eligible, so streams depend only on position counts and
// corruption decisions, never on content classes. Extra draws happen only
// when a corruption fires (choosing the inserted/replacement character).
void corrupt_word(std::u32string& cs, const NoiseSpec& spec, Rng& rng, NoiseStats& stats) {
    const double p = spec.p;
    switch (spec.kind) {
        case NoiseKind::Delete: {
            size_t i = 0;
            while (i < cs.size()) {
                bool eligible = delete_eligible(cs, i);
                double u = rng.unit();
                if (eligible) {
                    stats.eligible += 1;
                    if (u < p) {
                        cs.erase(cs.begin() + static_cast<ptrdiff_t>(i));
                        ++stats.corrupted;
                        continue;  // the shifted-in character gets its own draw
                    }
                }
                ++i;
            }
            break;
        }
        case NoiseKind::Insert: {
            size_t i = 0;
            while (i < cs.size()) {
                double u = rng.unit();
                stats.eligible += 1;
                if (u < p) {
                    char32_t a = spec.alphabet[rng.below(spec.alphabet.size())];
                    cs.insert(cs.begin() + static_cast<ptrdiff_t>(i) + 1, a);
                    ++stats.corrupted;
                    i += 2;  // skip the inserted character: not an original position
                } else {
                    ++i;
                }
            }
            break;
        }
        case NoiseKind::Replace: {
            for (size_t i = 0; i < cs.size(); ++i) {
                double u = rng.unit();
                stats.eligible += 1;
                if (u < p) {
                    cs[i] = draw_replacement(cs[i], spec.alphabet, rng);
                    ++stats.corrupted;
                }
            }
            break;
        }
        case NoiseKind::Switch: {
            std::vector<bool> swapped(cs.size(), false);
            for (size_t i = 0; i < cs.size(); ++i) {
                bool eligible = i >= 1 && i + 2 < cs.size() && !swapped[i] && !swapped[i + 1];
                double u = rng.unit();
                if (eligible) {
                    stats.eligible += 1;
                    if (u < p) {
                        std::swap(cs[i], cs[i + 1]);
                        swapped[i] = swapped[i + 1] = true;
                        ++stats.corrupted;
                    }
                }
            }
            break;
        }
        case NoiseKind::All: {
            // One draw decides both whether and which: sub-ranges of [0, p)
            // of width p/4 select delete/insert/replace/switch. A draw whose
            // sub-noise is ineligible here is discarded. Positions that
            // already took part in a swap are entirely ineligible, so no
            // position is corrupted twice.
            std::vector<bool> swapped(cs.size(), false);
            const double q = p / 4.0;
            size_t i = 0;
            while (i < cs.size()) {
                if (swapped[i]) {
                    rng.unit();
                    ++i;
                    continue;
                }
                bool de = delete_eligible(cs, i);
                bool se = i >= 1 && i + 2 < cs.size() && !swapped[i + 1];
                stats.eligible += (2 + de + se) / 4.0;  // insert/replace always eligible
                double u = rng.unit();
                if (u < p) {
                    if (u < q) {
                        if (de) {
                            cs.erase(cs.begin() + static_cast<ptrdiff_t>(i));
                            swapped.erase(swapped.begin() + static_cast<ptrdiff_t>(i));
                            ++stats.corrupted;
                            continue;
                        }
                    } else if (u < 2 * q) {
                        char32_t a = spec.alphabet[rng.below(spec.alphabet.size())];
                        cs.insert(cs.begin() + static_cast<ptrdiff_t>(i) + 1, a);
                        swapped.insert(swapped.begin() + static_cast<ptrdiff_t>(i) + 1, false);
                        ++stats.corrupted;
                        i += 2;
                        continue;
                    } else if (u < 3 * q) {
                        cs[i] = draw_replacement(cs[i], spec.alphabet, rng);
                        ++stats.corrupted;
                    } else {
                        if (se) {
                            std::swap(cs[i], cs[i + 1]);
                            swapped[i] = swapped[i + 1] = true;
                            ++stats.corrupted;
                        }
                    }
                }
                ++i;
            }
            break;
        }
        case NoiseKind::Natural:
            fail("corrupt_word: Natural is handled per word string");
    }
}

std::string corrupt_sentence(const std::string& sentence, const NoiseSpec& spec,
                             const ConfusionLexicon* lexicon, Rng& rng, NoiseStats& stats) {
    std::u32string u = decode_all(sentence);
    std::string out;
    out.reserve(sentence.size());
    size_t i = 0;
    while (i < u.size()) {
        if (u[i] == U' ') {
            out += ' ';
            ++i;
            continue;
        }
        size_t j = i;
        while (j < u.size() && u[j] != U' ') ++j;
        std::u32string word = u.substr(i, j - i);
        if (spec.kind == NoiseKind::Natural) {
            std::string w = encode_all(word);
            double draw = rng.unit();
            const std::vector<std::string>* vars = lexicon->find(w);
            if (vars) {
                stats.eligible += 1;
                if (draw < spec.p) {
                    w = (*vars)[rng.below(vars->size())];
                    ++stats.corrupted;
                }
            }
            out += w;
        } else {
            corrupt_word(word, spec, rng, stats);
            out += encode_all(word);
        }
        i = j;
    }
    return out;
}

NoiseSpec validated(const NoiseSpec& spec, const ConfusionLexicon* lexicon) {
    if (!(spec.p >= 0.0 && spec.p <= 1.0)) fail("noise probability must be in [0,1]");
    if (spec.kind == NoiseKind::Natural && lexicon == nullptr) {
        fail("natural noise requires a confusion lexicon");
    }
    NoiseSpec s = spec;
    std::sort(s.alphabet.begin(), s.alphabet.end());
    s.alphabet.erase(std::unique(s.alphabet.begin(), s.alphabet.end()), s.alphabet.end());
    if (needs_alphabet(s.kind)) {
        if (s.alphabet.empty()) fail("insert/replace/all noise requires a non-empty alphabet");
        if (std::binary_search(s.alphabet.begin(), s.alphabet.end(), U' ')) {
            fail("noise alphabet must not contain a space");
        }
    }
    return s;
}

}  // namespace

std::vector<std::string> corrupt_corpus(const std::vector<std::string>& corpus,
                                        const NoiseSpec& spec, const ConfusionLexicon* lexicon,
                                        NoiseStats* stats) {
    NoiseSpec s = validated(spec, lexicon);
    NoiseStats local;
    std::vector<std::string> out;
    out.reserve(corpus.size());
    for (size_t idx = 0; idx < corpus.size(); ++idx) {
        Rng rng(Rng::derive(s.seed, idx));
        out.push_back(corrupt_sentence(corpus[idx], s, lexicon, rng, local));
    }
    if (stats) {
        stats->eligible += local.eligible;
        stats->corrupted += local.corrupted;
    }
    return out;
}

std::vector<SweepLevel> build_noise_sweep(const std::vector<std::string>& testset,
                                          const NoiseSpec& spec, const ConfusionLexicon* lexicon) {
    if (testset.empty()) fail("noise sweep needs a non-empty test set");
    std::vector<SweepLevel> levels;
    levels.reserve(10);
    for (int k = 1; k <= 10; ++k) {
        SweepLevel level;
        level.percent = spec.kind == NoiseKind::Natural ? 10 * k : k;
        level.p = level.percent / 100.0;
        NoiseSpec s = spec;
        s.p = level.p;
        s.seed = spec.seed + static_cast<uint64_t>(k);
        level.corpus = corrupt_corpus(testset, s, lexicon);
        levels.push_back(std::move(level));
    }
    return levels;
}

std::string sweep_file_name(NoiseKind kind, int percent) {
    return "noise." + std::string(noise_kind_name(kind)) + ".p" + std::to_string(percent) +
           ".txt";
}

ConfusionLexicon load_confusion_lexicon(const std::string& path) {
    ConfusionLexicon lex;
    for (const std::string& line : read_lines(path)) {
        std::vector<std::string> fields;
        size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
            size_t start = i;
            while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
            if (i > start) fields.push_back(line.substr(start, i - start));
        }
        if (fields.size() < 2) {
            ++lex.skipped_lines;
            continue;
        }
        std::vector<std::string>& vars = lex.variants[fields[0]];
        vars.insert(vars.end(), fields.begin() + 1, fields.end());
    }
    if (lex.variants.empty()) fail("confusion lexicon has no valid records: " + path);
    return lex;
}

}  // namespace mtr
