#include "mtr/lm/kn_lm.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "mtr/util/error.hpp"
#include "mtr/util/io.hpp"
#include "mtr/util/rng.hpp"
#include "oracles/kn_oracle.hpp"

using namespace mtr;

namespace {

std::vector<std::string> toy_corpus(uint64_t seed, size_t sentences, size_t vocab) {
    static const char* kPool[] = {"the", "a",   "cat", "dog",  "bird", "sat",  "ran",
                                  "saw", "on",  "in",  "mat",  "sun",  "tree", "fast",
                                  "big", "red", "old", "blue", "and",  "near"};
    Rng rng(seed);
    std::vector<std::string> corpus;
    for (size_t s = 0; s < sentences; ++s) {
        std::string line;
        size_t words = 2 + rng.below(9);
        for (size_t w = 0; w < words; ++w) {
            if (w) line += ' ';
            line += kPool[rng.below(std::min(vocab, std::size(kPool)))];
        }
        corpus.push_back(line);
    }
    // a long tail of singletons, so every order has n1 > 0 and the
    // discounts (and with them the unknown-word floor) stay positive
    corpus.push_back("klaxon quill zephyr");
    return corpus;
}

}  // namespace

TEST_CASE("repeated two-word corpus") {
    // Every bigram appears 5 times, so the top-order count-of-counts is empty:
    // discount 0 plus the degenerate warning, and P(b|a) is exactly 1.
    std::vector<std::string> corpus(5, "a b");
    KnLanguageModel m = KnLanguageModel::train(corpus, 2);
    oracle::KnModel ref(corpus, 2);
    double got = m.prob({"a"}, "b");
    CHECK(std::abs(got - ref.prob({"a"}, "b")) < 1e-6);
    CHECK(got == doctest::Approx(1.0));
    CHECK(m.degenerate_discounts());
    // a zero top-order discount leaves no interpolation mass in seen
    // contexts, so unknowns get probability 0 there — the price of the
    // degenerate-corpus rule
    CHECK(m.prob({"a"}, "zzz") == 0.0);

    std::vector<std::string> mixed = {"a b", "a b", "a c", "b a", "c c"};
    KnLanguageModel m2 = KnLanguageModel::train(mixed, 2);
    oracle::KnModel ref2(mixed, 2);
    CHECK_FALSE(m2.degenerate_discounts());
    for (const std::string& w : m2.event_space()) {
        CHECK(m2.prob({"a"}, w) == doctest::Approx(ref2.prob({"a"}, w)).epsilon(1e-10));
    }
}

TEST_CASE("conditional distributions sum to one") {
    std::vector<std::string> corpus = toy_corpus(41, 60, 12);
    for (int order : {1, 2, 3, 5}) {
        KnLanguageModel m = KnLanguageModel::train(corpus, order);
        std::vector<std::string> events = m.event_space();
        Rng rng(7);
        for (int trial = 0; trial < 25; ++trial) {
            // seen, unseen, and partially-unknown contexts
            std::vector<std::string> ctx;
            size_t len = rng.below(static_cast<uint64_t>(order));
            for (size_t i = 0; i < len; ++i) {
                ctx.push_back(rng.below(4) == 0 ? "zzz-unknown"
                                                : events[rng.below(events.size())]);
            }
            double sum = 0.0;
            for (const std::string& w : events) sum += m.prob(ctx, w);
            CHECK(std::abs(sum - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("discounts stay in range") {
    std::vector<std::string> corpus = toy_corpus(43, 80, 16);
    for (int order : {1, 2, 3, 4, 5}) {
        KnLanguageModel m = KnLanguageModel::train(corpus, order);
        for (double d : m.discounts()) {
            CHECK(d >= 0.0);
            CHECK(d < 1.0);
        }
    }
}

TEST_CASE("probabilities match the reference implementation") {
    Rng rng(99);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<std::string> corpus = toy_corpus(100 + trial, 20 + rng.below(40), 14);
        int order = 2 + static_cast<int>(rng.below(4));
        KnLanguageModel m = KnLanguageModel::train(corpus, order);
        oracle::KnModel ref(corpus, order);

        std::vector<std::string> events = m.event_space();
        for (int q = 0; q < 30; ++q) {
            std::vector<std::string> ctx;
            size_t len = rng.below(static_cast<uint64_t>(order));
            for (size_t i = 0; i < len; ++i) ctx.push_back(events[rng.below(events.size())]);
            std::string w = events[rng.below(events.size())];
            double got = m.prob(ctx, w);
            double expect = ref.prob(ctx, w);
            CHECK(got == doctest::Approx(expect).epsilon(1e-10));
        }
    }
}

TEST_CASE("perplexity matches the reference implementation") {
    Rng rng(123);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::string> corpus = toy_corpus(200 + trial, 15 + rng.below(30), 12);
        std::vector<std::string> test = toy_corpus(900 + trial, 8, 14);
        int order = 2 + static_cast<int>(trial % 4);  // orders 2..5
        KnLanguageModel m = KnLanguageModel::train(corpus, order);
        oracle::KnModel ref(corpus, order);
        double got = m.perplexity(test);
        double expect = ref.perplexity(test);
        CHECK(std::abs(got - expect) / expect < 1e-6);
    }
}

TEST_CASE("perplexity basics") {
    std::vector<std::string> corpus = toy_corpus(5, 50, 10);
    KnLanguageModel m = KnLanguageModel::train(corpus, 3);
    CHECK(m.perplexity(corpus) >= 1.0);
    CHECK(m.perplexity({"qqq www eee"}) > m.perplexity(corpus));
    CHECK_THROWS_AS(m.perplexity({}), Error);
    CHECK_THROWS_AS(KnLanguageModel::train({}, 3), Error);
    CHECK_THROWS_AS(KnLanguageModel::train(corpus, 0), Error);
}

TEST_CASE("training is deterministic") {
    namespace fs = std::filesystem;
    std::vector<std::string> corpus = toy_corpus(77, 40, 12);
    KnLanguageModel a = KnLanguageModel::train(corpus, 4);
    KnLanguageModel b = KnLanguageModel::train(corpus, 4);

    fs::path dir = fs::temp_directory_path() / "mtr_lm_test";
    fs::create_directories(dir);
    std::string pa = (dir / "a.knlm").string();
    std::string pb = (dir / "b.knlm").string();
    a.save(pa);
    b.save(pb);
    CHECK(read_file(pa) == read_file(pb));
    fs::remove_all(dir);
}

TEST_CASE("model files round-trip") {
    namespace fs = std::filesystem;
    std::vector<std::string> corpus = toy_corpus(88, 50, 14);
    std::vector<std::string> test = toy_corpus(89, 10, 16);
    KnLanguageModel m = KnLanguageModel::train(corpus, 3);

    fs::path dir = fs::temp_directory_path() / "mtr_lm_rt";
    fs::create_directories(dir);
    std::string path = (dir / "m.knlm").string();
    m.save(path);
    KnLanguageModel back = KnLanguageModel::load(path);
    CHECK(back.order() == m.order());
    CHECK(back.discounts() == m.discounts());
    CHECK(back.perplexity(test) == m.perplexity(test));

    write_file(path, "#mtrobust-knlm v2\n");
    CHECK_THROWS_AS(KnLanguageModel::load(path), Error);
    fs::remove_all(dir);
}

TEST_CASE("seen training sentence does not get less probable when re-added") {
    std::vector<std::string> corpus = toy_corpus(31, 40, 12);
    std::vector<std::string> probe = {corpus[0]};
    KnLanguageModel before = KnLanguageModel::train(corpus, 3);
    std::vector<std::string> bigger = corpus;
    bigger.push_back(corpus[0]);
    KnLanguageModel after = KnLanguageModel::train(bigger, 3);
    CHECK(after.perplexity(probe) <= before.perplexity(probe) * (1.0 + 1e-9));
}

TEST_CASE("training text scores better than a shuffle of its tokens") {
    std::vector<std::string> corpus = toy_corpus(53, 1500, 18);  // > 10k tokens
    KnLanguageModel m = KnLanguageModel::train(corpus, 3);

    // shuffle all tokens across the corpus, keeping line lengths
    std::vector<std::string> tokens;
    std::vector<size_t> lens;
    for (const std::string& line : corpus) {
        size_t n = 0;
        std::istringstream is(line);
        std::string w;
        while (is >> w) {
            tokens.push_back(w);
            ++n;
        }
        lens.push_back(n);
    }
    Rng rng(999);
    for (size_t i = tokens.size(); i > 1; --i) {
        std::swap(tokens[i - 1], tokens[rng.below(i)]);
    }
    std::vector<std::string> shuffled;
    size_t at = 0;
    for (size_t n : lens) {
        std::string line;
        for (size_t i = 0; i < n; ++i) {
            if (i) line += ' ';
            line += tokens[at++];
        }
        shuffled.push_back(line);
    }
    CHECK(m.perplexity(corpus) < m.perplexity(shuffled));
}

TEST_CASE("unknown words keep positive probability") {
    std::vector<std::string> corpus = toy_corpus(61, 30, 10);
    KnLanguageModel m = KnLanguageModel::train(corpus, 3);
    double p = m.prob({"the", "cat"}, "qqqq");
    CHECK(p > 0.0);
    CHECK(std::isfinite(m.perplexity({"qqqq zzzz vvvv"})));
}
