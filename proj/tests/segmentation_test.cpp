#include "mtr/text/segmentation.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "mtr/text/vocab.hpp"
#include "mtr/util/io.hpp"
#include "mtr/util/error.hpp"
#include "mtr/util/rng.hpp"
#include "oracles/bpe_oracle.hpp"
#include "test_util.hpp"

using namespace mtr;

namespace {

TokenSeq toks(std::initializer_list<const char*> texts) {
    TokenSeq seq;
    for (const char* t : texts) {
        if (std::string(t) == " ") {
            seq.push_back(space_token());
        } else {
            seq.push_back(Token{t, false});
        }
    }
    return seq;
}

}  // namespace

TEST_CASE("char_tokenize maps scalars and spaces") {
    CHECK(char_tokenize("ab cd") == toks({"a", "b", " ", "c", "d"}));
    CHECK(char_tokenize("").empty());
    CHECK(char_tokenize("Fa\xC3\x9F") == toks({"F", "a", "\xC3\x9F"}));  // Faß, no folding
    CHECK_THROWS_AS(char_tokenize("\xFF"), Error);
}

TEST_CASE("detokenize inverts tokenization") {
    CHECK(detokenize(toks({"a", "b", " ", "c"})) == "ab c");
    CHECK(detokenize({}) == "");
}

TEST_CASE("a literal space-marker character is not a space") {
    std::string marker = kSpaceMarkerDisplay;
    TokenSeq seq = char_tokenize(marker + " " + marker);
    REQUIRE(seq.size() == 3);
    CHECK_FALSE(seq[0].space);
    CHECK(seq[1].space);
    CHECK(detokenize(seq) == marker + " " + marker);
}

TEST_CASE("bpe_train picks the most frequent pair") {
    SegmentationModel m = bpe_train({"aa ab aa"}, 1);
    REQUIRE(m.merges.size() == 1);
    CHECK(m.merges[0] == std::pair<std::string, std::string>("a", "a"));
    CHECK_FALSE(m.truncated);
}

TEST_CASE("bpe_train truncates when pairs run out") {
    SegmentationModel m = bpe_train({"x"}, 1);
    CHECK(m.merges.empty());
    CHECK(m.truncated);

    // "ab" has exactly one learnable pair, then its only word is one symbol.
    m = bpe_train({"ab"}, 5);
    CHECK(m.merges.size() == 1);
    CHECK(m.truncated);
}

TEST_CASE("bpe_train rejects empty input") {
    CHECK_THROWS_AS(bpe_train({}, 1), Error);
    CHECK_THROWS_AS(bpe_train({"   "}, 1), Error);
    CHECK_THROWS_AS(bpe_train({"ab"}, 0), Error);
}

TEST_CASE("bpe_train is deterministic") {
    std::vector<std::string> corpus = {"abab baba", "abba baab", "aa bb ab"};
    SegmentationModel a = bpe_train(corpus, 8);
    SegmentationModel b = bpe_train(corpus, 8);
    CHECK(a.merges == b.merges);
}

TEST_CASE("bpe_apply is leftmost-first per merge") {
    SegmentationModel m;
    m.kind = SegmentationModel::Kind::Bpe;
    m.merges = {{"a", "a"}};
    CHECK(bpe_apply(m, "aaa") == toks({"aa", "a"}));
    CHECK(bpe_apply(m, "aaaa") == toks({"aa", "aa"}));
    CHECK(bpe_apply(m, "bcb") == toks({"b", "c", "b"}));

    m.merges = {};
    CHECK(bpe_apply(m, "abc") == toks({"a", "b", "c"}));
}

TEST_CASE("merged symbol can feed a later merge") {
    SegmentationModel m = bpe_train({"abc abc abc"}, 2);
    REQUIRE(m.merges.size() == 2);
    CHECK(m.merges[0] == std::pair<std::string, std::string>("a", "b"));
    CHECK(m.merges[1] == std::pair<std::string, std::string>("ab", "c"));
    CHECK(bpe_apply(m, "abc") == toks({"abc"}));
}

TEST_CASE("frequency ties break lexicographically") {
    // Pairs (b,a) and (a,b)... corpus "ba ba ab ab": both occur twice.
    SegmentationModel m = bpe_train({"ba ba ab ab"}, 1);
    REQUIRE(m.merges.size() == 1);
    CHECK(m.merges[0] == std::pair<std::string, std::string>("a", "b"));
}

TEST_CASE("merges match the brute-force oracle on random corpora") {
    Rng rng(2026);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::string> corpus =
            testgen::random_word_corpus(rng, 20 + rng.below(180));
        size_t n = 1 + rng.below(20);
        SegmentationModel m = bpe_train(corpus, n);
        auto expect = oracle::bpe_merges(corpus, n);
        CHECK(m.merges == expect);
        CHECK(m.truncated == (expect.size() < n));
    }
}

TEST_CASE("merge list is a prefix of a longer training run") {
    Rng rng(7);
    std::vector<std::string> corpus = testgen::random_word_corpus(rng, 120);
    SegmentationModel small = bpe_train(corpus, 5);
    SegmentationModel big = bpe_train(corpus, 6);
    REQUIRE(small.merges.size() == 5);
    CHECK(std::equal(small.merges.begin(), small.merges.end(), big.merges.begin()));
}

TEST_CASE("round trip holds for character and BPE segmentation") {
    Rng rng(11);
    std::vector<std::string> corpus = testgen::random_word_corpus(rng, 150);
    SegmentationModel bpe = bpe_train(corpus, 12);
    SegmentationModel chars;  // kind = Character
    for (int trial = 0; trial < 1000; ++trial) {
        std::string text = testgen::random_text(rng, 60);
        CHECK(detokenize(segment(chars, text)) == text);
        CHECK(detokenize(segment(bpe, text)) == text);
    }
}

TEST_CASE("zero merges equals character segmentation") {
    SegmentationModel none;
    none.kind = SegmentationModel::Kind::Bpe;
    Rng rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        std::string text = testgen::random_text(rng, 40);
        CHECK(segment(none, text) == char_tokenize(text));
    }
}

TEST_CASE("no token spans a word boundary") {
    Rng rng(17);
    std::vector<std::string> corpus = testgen::random_word_corpus(rng, 150);
    SegmentationModel m = bpe_train(corpus, 30);
    for (const std::string& line : corpus) {
        for (const Token& t : segment(m, line)) {
            if (!t.space) CHECK(t.text.find(' ') == std::string::npos);
        }
    }
}

TEST_CASE("merges files round-trip and validate") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "mtr_seg_test";
    fs::create_directories(dir);
    std::string path = (dir / "model.bpe").string();

    SegmentationModel m = bpe_train({"abab abab", "abc abc"}, 4);
    save_merges(m, path);
    SegmentationModel back = load_merges(path);
    CHECK(back.merges == m.merges);
    CHECK(back.kind == SegmentationModel::Kind::Bpe);

    write_file(path, "#mtrobust-bpe v1 n=2\na b\n");
    CHECK_THROWS_AS(load_merges(path), Error);  // count mismatch
    write_file(path, "#mtrobust-bpe v1 n=1\nab c\n");
    CHECK_THROWS_AS(load_merges(path), Error);  // `ab` never produced
    write_file(path, "#mtrobust-bpe v1 n=2\na b\nab c\n");
    CHECK(load_merges(path).merges.size() == 2);
    fs::remove_all(dir);
}

TEST_CASE("vocab assigns deterministic ids and maps unknowns") {
    std::vector<TokenSeq> corpus = {char_tokenize("ba c"), char_tokenize("ab")};
    Vocab v = Vocab::from_tokens(corpus);
    CHECK(v.size() == Vocab::kNumSpecials + 3);  // a, b, c
    CHECK(v.id(Token{"a", false}) == Vocab::kNumSpecials + 0);
    CHECK(v.id(Token{"b", false}) == Vocab::kNumSpecials + 1);
    CHECK(v.id(Token{"c", false}) == Vocab::kNumSpecials + 2);
    CHECK(v.id(space_token()) == Vocab::kSpace);
    CHECK(v.id(Token{"z", false}) == Vocab::kUnk);
    CHECK(v.token(Vocab::kNumSpecials).text == "a");
    CHECK(v.token(Vocab::kSpace).space);

    std::vector<int32_t> ids = v.ids(char_tokenize("ab c"));
    CHECK(detokenize(v.tokens(ids)) == "ab c");
}
