#pragma once

#include <string>
#include <unordered_set>
#include <vector>

namespace mtr {

/// Whitespace-separated word tokens of a corpus, no normalization
/// (case-sensitive, punctuation left attached).
std::vector<std::string> word_tokens(const std::vector<std::string>& corpus);
std::unordered_set<std::string> word_set(const std::vector<std::string>& corpus);

/// Percentage of test word tokens absent from the training vocabulary.
/// Errors when the test side has no tokens.
double unseen_rate(const std::vector<std::string>& test,
                   const std::unordered_set<std::string>& train_vocabulary);

}  // namespace mtr
