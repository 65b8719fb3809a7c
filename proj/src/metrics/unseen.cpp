#include "mtr/metrics/unseen.hpp"

#include "mtr/util/error.hpp"

namespace mtr {

std::vector<std::string> word_tokens(const std::vector<std::string>& corpus) {
    std::vector<std::string> tokens;
    for (const std::string& line : corpus) {
        std::string cur;
        for (char c : line) {
            if (c == ' ' || c == '\t') {
                if (!cur.empty()) tokens.push_back(std::move(cur));
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (!cur.empty()) tokens.push_back(std::move(cur));
    }
    return tokens;
}

std::unordered_set<std::string> word_set(const std::vector<std::string>& corpus) {
    std::vector<std::string> tokens = word_tokens(corpus);
    return {tokens.begin(), tokens.end()};
}

double unseen_rate(const std::vector<std::string>& test,
                   const std::unordered_set<std::string>& train_vocabulary) {
    std::vector<std::string> tokens = word_tokens(test);
    if (tokens.empty()) fail("unseen_rate: test corpus has no word tokens");
    size_t unseen = 0;
    for (const std::string& t : tokens) {
        if (!train_vocabulary.count(t)) ++unseen;
    }
    return 100.0 * static_cast<double>(unseen) / static_cast<double>(tokens.size());
}

}  // namespace mtr
