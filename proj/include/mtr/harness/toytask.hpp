#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mtr {

/// The bundled toy "translation" task: sentences over a small synthetic
/// lexicon, the target side a fixed letter-substitution cipher of the source.
/// The mapping is deterministic and character-local, so a character-level
/// system can learn it exactly while word-level systems must memorize whole
/// lexicon entries — the contrast the robustness sweeps measure.

/// Rotates a-z forward by 7 places; everything else passes through.
std::string cipher_line(const std::string& line);

/// Inverse rotation, for sanity checks.
std::string decipher_line(const std::string& line);

struct ToyDataset {
    std::vector<std::string> train_src, train_tgt;
    std::vector<std::string> val_src, val_tgt;
    std::vector<std::string> test_src, test_tgt;
};

struct ToySpec {
    size_t lexicon = 120;      // distinct words
    size_t train_sentences = 1500;
    size_t val_sentences = 120;
    size_t test_sentences = 120;
    size_t min_words = 3, max_words = 9;  // sentence length range
    uint64_t seed = 1;
};

/// Word shapes are random lowercase strings of 3..8 letters; sentence words
/// are drawn with harmonic (Zipf-like) rank weights so subword learners see
/// a realistic frequency tail. Targets are the cipher of the source lines.
ToyDataset make_toy_dataset(const ToySpec& spec);

/// Writes {train,val,test}.{src,tgt} under dir (created if missing) and
/// returns the six paths in that order.
std::vector<std::string> write_toy_dataset(const std::string& dir, const ToySpec& spec);

}  // namespace mtr
