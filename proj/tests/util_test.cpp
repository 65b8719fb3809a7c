#include <doctest.h>

#include <string>
#include <vector>

#include "mtr/util/config.hpp"
#include "mtr/util/error.hpp"
#include "mtr/util/io.hpp"
#include "mtr/util/rng.hpp"
#include "mtr/util/uchar_class.hpp"
#include "mtr/util/utf8.hpp"

using namespace mtr;

TEST_CASE("utf8 round trip on mixed scripts") {
    std::string s = "Faß — δstraße 日本語 a\tb \xF0\x9F\x98\x80";
    auto cps = utf8::decode(s);
    CHECK(utf8::encode(cps) == s);
}

TEST_CASE("utf8 rejects malformed input") {
    CHECK_THROWS_AS(utf8::decode("\xC3"), Error);          // truncated
    CHECK_THROWS_AS(utf8::decode("\xC0\xAF"), Error);      // overlong
    CHECK_THROWS_AS(utf8::decode("\xED\xA0\x80"), Error);  // surrogate
    CHECK_THROWS_AS(utf8::decode("\x80"), Error);          // stray continuation
    CHECK_FALSE(utf8::valid("\xF8\x88\x80\x80\x80"));
    CHECK(utf8::valid("cleanly ascii"));
}

TEST_CASE("utf8 decodes scalar values, not bytes") {
    auto cps = utf8::decode("Faß");
    REQUIRE(cps.size() == 3);
    CHECK(cps[2] == U'ß');
}

TEST_CASE("punct/symbol classification covers P* and S*") {
    CHECK(is_punct_or_symbol(U'.'));
    CHECK(is_punct_or_symbol(U','));
    CHECK(is_punct_or_symbol(U'“'));
    CHECK(is_punct_or_symbol(U'+'));   // Sm
    CHECK(is_punct_or_symbol(U'€'));   // Sc
    CHECK(is_punct_or_symbol(U'«'));
    CHECK_FALSE(is_punct_or_symbol(U'a'));
    CHECK_FALSE(is_punct_or_symbol(U'ß'));
    CHECK_FALSE(is_punct_or_symbol(U' '));
    CHECK_FALSE(is_punct_or_symbol(U'9'));
    CHECK_FALSE(is_punct_or_symbol(U'日'));
}

TEST_CASE("rng streams are deterministic and seed-sensitive") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    bool differs = false;
    Rng a2(42);
    for (int i = 0; i < 100; ++i) differs |= (a2.next() != c.next());
    CHECK(differs);
}

TEST_CASE("rng unit() stays in [0,1) and below(n) in range") {
    Rng r(7);
    for (int i = 0; i < 10000; ++i) {
        double u = r.unit();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(r.below(17) < 17);
    }
}

TEST_CASE("rng derive gives independent substreams") {
    CHECK(Rng::derive(5, 0) != Rng::derive(5, 1));
    CHECK(Rng::derive(5, 0) != Rng::derive(6, 0));
    CHECK(Rng::derive(5, 3) == Rng::derive(5, 3));
}

TEST_CASE("config parses key = value with comments") {
    auto c = Config::parse_string("# hello\nfoo = 12\nname = x y z\nrate=0.5\nflag = true\n");
    CHECK(c.get_int("foo") == 12);
    CHECK(c.get_list("name") == std::vector<std::string>{"x", "y", "z"});
    CHECK(c.get_double("rate") == doctest::Approx(0.5));
    CHECK(c.get_bool("flag", false));
    c.finish();
}

TEST_CASE("config rejects unknown keys via finish") {
    auto c = Config::parse_string("known = 1\nmystery = 2\n");
    CHECK(c.get_int("known") == 1);
    CHECK_THROWS_AS(c.finish(), Error);
}

TEST_CASE("config rejects duplicates and malformed lines") {
    CHECK_THROWS_AS(Config::parse_string("a = 1\na = 2\n"), Error);
    CHECK_THROWS_AS(Config::parse_string("just some text\n"), Error);
}

TEST_CASE("format_fixed is stable") {
    CHECK(format_fixed(1.0 / 3.0, 4) == "0.3333");
    CHECK(format_fixed(-0.00001, 4) == "0.0000");
    CHECK(format_fixed(25.0, 4) == "25.0000");
}
