#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace mtr {

enum class NoiseKind { Delete, Insert, Replace, Switch, All, Natural };

const char* noise_kind_name(NoiseKind kind);
std::optional<NoiseKind> parse_noise_kind(const std::string& name);

/// Corruption request. `p` is per character for synthetic kinds and per word
/// for Natural. `alphabet` feeds Insert/Replace draws; it is deduplicated,
/// sorted, and must never contain a space (word counts are preserved by
/// construction).
struct NoiseSpec {
    NoiseKind kind = NoiseKind::Delete;
    double p = 0.0;
    uint64_t seed = 0;
    std::vector<char32_t> alphabet;
};

/// Correct word -> non-empty list of misspelled variants, exact-match lookup.
struct ConfusionLexicon {
    std::unordered_map<std::string, std::vector<std::string>> variants;
    size_t skipped_lines = 0;

    const std::vector<std::string>* find(const std::string& word) const {
        auto it = variants.find(word);
        return it == variants.end() ? nullptr : &it->second;
    }
};

/// Eligible/corrupted tallies for the empirical-rate invariant. Every
/// character position of a synthetic run consumes one uniform draw; only
/// positions eligible for the kind count toward `eligible`, so
/// corrupted/eligible concentrates on p. For All, a position adds
/// (eligible sub-noises)/4, matching its p/4-per-sub-noise split.
struct NoiseStats {
    double eligible = 0.0;
    uint64_t corrupted = 0;
};

/// Alphabet default: the distinct characters of the corpus minus spaces,
/// punctuation, and symbols, in code-point order.
std::vector<char32_t> default_alphabet(const std::vector<std::string>& corpus);

/// Deterministic corruption: sentence i uses the stream derived from
/// (spec.seed, i), so output is independent of processing schedule.
/// Word-count preservation holds for every kind. Requires a lexicon for
/// Natural and a non-empty alphabet for Insert/Replace/All.
std::vector<std::string> corrupt_corpus(const std::vector<std::string>& corpus,
                                        const NoiseSpec& spec,
                                        const ConfusionLexicon* lexicon = nullptr,
                                        NoiseStats* stats = nullptr);

/// One sweep level: its percentage tag (1..10 synthetic, 10..100 natural),
/// probability, and corrupted corpus.
struct SweepLevel {
    int percent = 0;
    double p = 0.0;
    std::vector<std::string> corpus;
};

/// Ten corruption levels, p = 1%..10% for synthetic kinds and 10%..100% for
/// Natural; level k (1-based) runs with seed spec.seed + k so levels are
/// independent. spec.p is ignored.
std::vector<SweepLevel> build_noise_sweep(const std::vector<std::string>& testset,
                                          const NoiseSpec& spec,
                                          const ConfusionLexicon* lexicon = nullptr);

/// Sweep file name: `noise.<kind>.p<percent>.txt`.
std::string sweep_file_name(NoiseKind kind, int percent);

/// Parses one record per line (correct word, then variants, whitespace
/// separated); lines with fewer than two fields are skipped and tallied.
/// Errors on unreadable files and on zero valid records.
ConfusionLexicon load_confusion_lexicon(const std::string& path);

}  // namespace mtr
