#include <doctest.h>

#include <cmath>
#include <set>

#include "eurocurate/text.hpp"

using namespace eurocurate;

TEST_CASE("utf8 decode and encode") {
    std::string s = "aé€😀";
    auto cps = text::decode_utf8(s);
    REQUIRE(cps.size() == 4);
    CHECK(cps[1] == U'é');
    CHECK(cps[3] == U'😀');
    CHECK(text::encode_utf8(cps) == s);
    CHECK(text::codepoint_count(s) == 4);
    CHECK(text::decode_utf8("a\xff" "b") == std::u32string{U'a', 0xFFFD, U'b'});
}

TEST_CASE("lowercase is per code point") {
    CHECK(text::to_lower("ÀÉÎ ABC ß") == "àéî abc ß");
    CHECK(text::to_lower("") == "");
}

TEST_CASE("whitespace splitting") {
    auto t = text::split_whitespace(" a b\tc\n\n d ");
    CHECK(t.size() == 4);
    CHECK(text::count_whitespace_tokens("") == 0);
    CHECK(text::split("a\n\nb", '\n').size() == 3);
    CHECK(text::trim("  x y \n") == "x y");
}

TEST_CASE("hash64 is seed-sensitive and spreads") {
    CHECK(text::hash64("abc") == text::hash64("abc"));
    CHECK(text::hash64("abc", 1) != text::hash64("abc", 2));
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 10000; ++i) seen.insert(text::hash64(std::to_string(i)));
    CHECK(seen.size() == 10000);
}

TEST_CASE("format_double round trips") {
    for (double v : {0.1, 1.5e-5, 3.0, 1e300, -0.6020599913279624, 2.0 / 3.0}) {
        CHECK(std::stod(text::format_double(v)) == v);
    }
    CHECK(text::format_double(0.5) == "0.5");
}

TEST_CASE("round_significant") {
    CHECK(text::round_significant(1.5e-4 * 0.1, 15) == 1.5e-5);
    CHECK(text::round_significant(3.9999999999999996, 12) == 4.0);
    CHECK(text::round_significant(123456.7, 3) == 123000.0);
}
