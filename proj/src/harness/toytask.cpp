#include "mtr/harness/toytask.hpp"

#include <filesystem>
#include <set>

#include "mtr/util/error.hpp"
#include "mtr/util/io.hpp"
#include "mtr/util/rng.hpp"

namespace mtr {

namespace {

std::string rotate_line(const std::string& line, int shift) {
    std::string out = line;
    for (char& c : out) {
        if (c >= 'a' && c <= 'z') c = static_cast<char>('a' + (c - 'a' + shift) % 26);
    }
    return out;
}

std::vector<std::string> make_lexicon(Rng& rng, size_t n) {
    std::set<std::string> words;
    while (words.size() < n) {
        size_t len = 3 + rng.below(6);
        std::string w;
        for (size_t i = 0; i < len; ++i) w += static_cast<char>('a' + rng.below(26));
        words.insert(w);
    }
    return {words.begin(), words.end()};
}

/// Sampling weights 1/(rank+1), cumulative for inverse-transform draws.
std::vector<double> harmonic_cdf(size_t n) {
    std::vector<double> cdf(n);
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
        total += 1.0 / static_cast<double>(i + 1);
        cdf[i] = total;
    }
    for (double& c : cdf) c /= total;
    return cdf;
}

size_t draw_rank(Rng& rng, const std::vector<double>& cdf) {
    double u = rng.unit();
    size_t lo = 0, hi = cdf.size() - 1;
    while (lo < hi) {
        size_t mid = (lo + hi) / 2;
        if (cdf[mid] < u) lo = mid + 1;
        else hi = mid;
    }
    return lo;
}

std::vector<std::string> make_sentences(Rng& rng, const ToySpec& spec,
                                        const std::vector<std::string>& lexicon,
                                        const std::vector<double>& cdf, size_t n) {
    std::vector<std::string> lines;
    lines.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        size_t words = spec.min_words + rng.below(spec.max_words - spec.min_words + 1);
        std::string line;
        for (size_t w = 0; w < words; ++w) {
            if (w) line += ' ';
            line += lexicon[draw_rank(rng, cdf)];
        }
        lines.push_back(line);
    }
    return lines;
}

std::vector<std::string> ciphered(const std::vector<std::string>& lines) {
    std::vector<std::string> out;
    out.reserve(lines.size());
    for (const std::string& l : lines) out.push_back(cipher_line(l));
    return out;
}

}  // namespace

std::string cipher_line(const std::string& line) { return rotate_line(line, 7); }

std::string decipher_line(const std::string& line) { return rotate_line(line, 19); }

ToyDataset make_toy_dataset(const ToySpec& spec) {
    if (spec.lexicon < 2) throw Error("toy lexicon needs at least 2 words");
    if (spec.min_words < 1 || spec.max_words < spec.min_words) {
        throw Error("toy sentence length range is empty");
    }
    Rng lex_rng(Rng::derive(spec.seed, 0));
    std::vector<std::string> lexicon = make_lexicon(lex_rng, spec.lexicon);
    std::vector<double> cdf = harmonic_cdf(lexicon.size());

    ToyDataset d;
    Rng train_rng(Rng::derive(spec.seed, 1));
    d.train_src = make_sentences(train_rng, spec, lexicon, cdf, spec.train_sentences);
    Rng val_rng(Rng::derive(spec.seed, 2));
    d.val_src = make_sentences(val_rng, spec, lexicon, cdf, spec.val_sentences);
    Rng test_rng(Rng::derive(spec.seed, 3));
    d.test_src = make_sentences(test_rng, spec, lexicon, cdf, spec.test_sentences);
    d.train_tgt = ciphered(d.train_src);
    d.val_tgt = ciphered(d.val_src);
    d.test_tgt = ciphered(d.test_src);
    return d;
}

std::vector<std::string> write_toy_dataset(const std::string& dir, const ToySpec& spec) {
    ToyDataset d = make_toy_dataset(spec);
    std::filesystem::create_directories(dir);
    std::vector<std::pair<std::string, const std::vector<std::string>*>> files = {
        {"train.src", &d.train_src}, {"train.tgt", &d.train_tgt},
        {"val.src", &d.val_src},     {"val.tgt", &d.val_tgt},
        {"test.src", &d.test_src},   {"test.tgt", &d.test_tgt},
    };
    std::vector<std::string> paths;
    for (const auto& [name, lines] : files) {
        std::string path = (std::filesystem::path(dir) / name).string();
        write_lines(path, *lines);
        paths.push_back(path);
    }
    return paths;
}

}  // namespace mtr
