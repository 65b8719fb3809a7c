#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mtr/metrics/bleu.hpp"
#include "mtr/metrics/sensitivity.hpp"
#include "mtr/metrics/unseen.hpp"
#include "mtr/util/error.hpp"
#include "mtr/util/rng.hpp"
#include "oracles/bleu_oracle.hpp"
#include "oracles/ols_oracle.hpp"
#include "test_util.hpp"

using namespace mtr;

namespace {

// sentences over a small vocabulary so n-gram overlap is common
std::string random_sentence(Rng& rng, size_t max_words) {
    static const char* kWords[] = {"the", "cat", "sat", "on", "a",  "mat",
                                   "dog", "ran", "far", ",",  "."};
    std::string s;
    size_t n = 1 + rng.below(max_words);
    for (size_t i = 0; i < n; ++i) {
        if (i) s += ' ';
        s += kWords[rng.below(std::size(kWords))];
    }
    return s;
}

}  // namespace

TEST_CASE("bleu tokenization separates punctuation") {
    CHECK(bleu_tokenize("a,b c.") == std::vector<std::string>{"a", ",", "b", "c", "."});
    CHECK(bleu_tokenize("x  y") == std::vector<std::string>{"x", "y"});
    CHECK(bleu_tokenize("50\xE2\x82\xAC!") == std::vector<std::string>{"50", "\xE2\x82\xAC", "!"});
    CHECK(bleu_tokenize("").empty());
}

TEST_CASE("identical corpora score 100") {
    std::vector<std::string> text = {"the cat sat on the mat today", "a dog ran far away now"};
    BleuScore b = corpus_bleu(text, text);
    CHECK(b.score == doctest::Approx(100.0));
    CHECK(b.brevity_penalty == 1.0);
    for (double p : b.precisions) CHECK(p == 1.0);
}

TEST_CASE("zero 4-gram overlap scores 0") {
    BleuScore b = corpus_bleu({"the the the cat"}, {"the cat sat down"});
    CHECK(b.score == 0.0);
    CHECK(b.precisions[0] == doctest::Approx(0.5));        // the, cat match clipped
    CHECK(b.precisions[1] == doctest::Approx(1.0 / 3.0));  // only "the cat"
    CHECK(b.precisions[2] == 0.0);
    CHECK(b.score == doctest::Approx(oracle::corpus_bleu({"the the the cat"},
                                                         {"the cat sat down"})));
}

TEST_CASE("bleu input validation") {
    CHECK_THROWS_AS(corpus_bleu({}, {}), Error);
    CHECK_THROWS_AS(corpus_bleu({"a"}, {"a", "b"}), Error);
}

TEST_CASE("bleu matches the reference implementation on random corpora") {
    Rng rng(314);
    for (int trial = 0; trial < 100; ++trial) {
        size_t lines = 1 + rng.below(8);
        std::vector<std::string> hyp, ref;
        for (size_t i = 0; i < lines; ++i) {
            hyp.push_back(random_sentence(rng, 12));
            ref.push_back(random_sentence(rng, 12));
        }
        // half the trials: make some hypotheses partially match the reference
        if (trial % 2) {
            for (size_t i = 0; i < lines; i += 2) {
                hyp[i] = ref[i];
                if (hyp[i].size() > 4) hyp[i].resize(hyp[i].size() / 2);
            }
        }
        double expect = oracle::corpus_bleu(hyp, ref);
        BleuScore got = corpus_bleu(hyp, ref);
        CHECK(std::abs(got.score - expect) < 1e-4);
    }
}

TEST_CASE("bleu is invariant under joint permutation") {
    Rng rng(99);
    std::vector<std::string> hyp, ref;
    for (int i = 0; i < 10; ++i) {
        hyp.push_back(random_sentence(rng, 10));
        ref.push_back(random_sentence(rng, 10));
    }
    double base = corpus_bleu(hyp, ref).score;
    std::vector<size_t> perm(hyp.size());
    for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::reverse(perm.begin(), perm.end());
    std::vector<std::string> h2, r2;
    for (size_t i : perm) {
        h2.push_back(hyp[i]);
        r2.push_back(ref[i]);
    }
    CHECK(corpus_bleu(h2, r2).score == doctest::Approx(base));
}

TEST_CASE("brevity penalty never increases under truncation") {
    std::vector<std::string> ref = {"the cat sat on the mat in the sun today"};
    std::vector<std::string> hyp = {"the cat sat on the mat in the sun today"};
    double prev_bp = corpus_bleu(hyp, ref).brevity_penalty;
    for (int cut = 0; cut < 3; ++cut) {
        size_t sp = hyp[0].rfind(' ');
        hyp[0] = hyp[0].substr(0, sp);
        double bp = corpus_bleu(hyp, ref).brevity_penalty;
        CHECK(bp <= prev_bp);
        prev_bp = bp;
    }
    CHECK(prev_bp < 1.0);
}

TEST_CASE("smoothed sentence bleu stays positive on partial matches") {
    CHECK(sentence_bleu_smoothed("the cat", "the cat sat down") > 0.0);
    CHECK(sentence_bleu_smoothed("zzz", "the cat") == 0.0);
}

TEST_CASE("sensitivity is exact on collinear points") {
    // x values exactly representable in binary, y = 30 - 20 x
    SensitivityFit f = fit_sensitivity({{0.0, 30.0}, {0.25, 25.0}, {0.5, 20.0}});
    CHECK(f.beta == -20.0);
    CHECK(f.alpha == 30.0);
    CHECK(f.r2 == 1.0);

    f = fit_sensitivity({{0.00, 30.0}, {0.05, 25.0}, {0.10, 20.0}});
    CHECK(f.beta == doctest::Approx(-100.0).epsilon(1e-12));
    CHECK(f.alpha == doctest::Approx(30.0).epsilon(1e-12));
    CHECK(f.r2 == 1.0);
}

TEST_CASE("sensitivity matches the frozen hand computation") {
    SensitivityFit f = fit_sensitivity({{0.0, 10.0}, {0.1, 9.0}, {0.2, 7.0}});
    CHECK(f.beta == doctest::Approx(-15.0).epsilon(1e-12));
    CHECK(f.alpha == doctest::Approx(61.0 / 6.0).epsilon(1e-12));
    CHECK(f.r2 == doctest::Approx(27.0 / 28.0).epsilon(1e-12));
}

TEST_CASE("sensitivity rejects degenerate input") {
    CHECK_THROWS_AS(fit_sensitivity({{0.0, 20.0}}), Error);
    CHECK_THROWS_AS(fit_sensitivity({{0.0, 20.0}, {0.0, 22.0}}), Error);
}

TEST_CASE("sensitivity matches the closed-form oracle on random point sets") {
    Rng rng(555);
    for (int trial = 0; trial < 100; ++trial) {
        size_t n = 3 + rng.below(9);
        std::vector<std::pair<double, double>> pts;
        for (size_t i = 0; i < n; ++i) {
            pts.push_back({static_cast<double>(i) / 10.0 + rng.unit() * 0.05,
                           rng.unit() * 60.0});
        }
        oracle::OlsFit expect = oracle::ols(pts);
        SensitivityFit got = fit_sensitivity(pts);
        CHECK(got.beta == doctest::Approx(expect.beta).epsilon(1e-9));
        CHECK(got.alpha == doctest::Approx(expect.alpha).epsilon(1e-9));
        CHECK(got.r2 == doctest::Approx(expect.r2).epsilon(1e-9));
    }
}

TEST_CASE("sensitivity scale equivariance") {
    Rng rng(77);
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < 8; ++i) pts.push_back({i / 100.0, 40.0 - 2.0 * i + rng.unit()});
    SensitivityFit base = fit_sensitivity(pts);
    std::vector<std::pair<double, double>> scaled;
    for (auto [x, y] : pts) scaled.push_back({100.0 * x, y});
    SensitivityFit s = fit_sensitivity(scaled);
    CHECK(s.beta == doctest::Approx(base.beta / 100.0).epsilon(1e-12));
    CHECK(s.alpha == doctest::Approx(base.alpha).epsilon(1e-12));
    CHECK(s.r2 == doctest::Approx(base.r2).epsilon(1e-12));
}

TEST_CASE("unseen rate counts absent tokens") {
    std::unordered_set<std::string> vocab = {"a", "b"};
    CHECK(unseen_rate({"a b a"}, vocab) == 0.0);
    CHECK(unseen_rate({"a b c"}, vocab) == doctest::Approx(100.0 / 3.0));
    CHECK(unseen_rate({"c d"}, vocab) == 100.0);
    CHECK_THROWS_AS(unseen_rate({"", "  "}, vocab), Error);

    // zero iff every token is known
    std::vector<std::string> train = {"x y z", "w x"};
    CHECK(unseen_rate(train, word_set(train)) == 0.0);
    CHECK(unseen_rate({"x Q"}, word_set(train)) > 0.0);
}
