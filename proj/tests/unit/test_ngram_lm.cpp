#include <doctest.h>

#include <cmath>
#include <random>

#include "arpa_fixture.hpp"
#include "eurocurate/errors.hpp"
#include "eurocurate/ngram_lm.hpp"

using namespace eurocurate;

namespace {

const char* kBigram =
    "\\data\\\n"
    "ngram 1=4\n"
    "ngram 2=2\n"
    "\n\\1-grams:\n"
    "-0.3\ta\t-0.1\n"
    "-0.4\tb\t0\n"
    "-0.5\tc\n"
    "-1.0\t<unk>\n"
    "\n\\2-grams:\n"
    "-0.2\ta b\n"
    "-0.7\tb c\n"
    "\n\\end\\\n";

std::vector<std::string> random_tokens(std::mt19937_64& g, const fixture::ArpaFixture& f, std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
        auto k = g() % (f.words.size() + 2);
        if (k >= f.words.size()) out.push_back("oov" + std::to_string(k));
        else out.push_back(f.words[k]);
    }
    return out;
}

}  // namespace

TEST_CASE("minimal unigram file") {
    auto m = parse_arpa("\\data\\\nngram 1=3\n\n\\1-grams:\n-0.5\ta\n-0.5\tb\n-0.5\tc\n\n\\end\\\n");
    CHECK(m.max_order() == 1);
    CHECK(m.vocab().size() == 3);
}

TEST_CASE("count mismatch names the order") {
    std::string text =
        "\\data\\\nngram 1=2\nngram 2=5\n\n\\1-grams:\n-0.3\ta\t0\n-0.3\tb\t0\n\n\\2-grams:\n"
        "-0.1\ta b\n-0.1\tb a\n-0.1\ta a\n-0.1\tb b\n\n\\end\\\n";
    try {
        parse_arpa(text);
        FAIL("expected ArpaError");
    } catch (const ArpaError& e) {
        CHECK(e.order() == 2);
        CHECK(e.expected() == 5);
        CHECK(e.found() == 4);
    }
}

TEST_CASE("malformed ARPA input") {
    CHECK_THROWS_AS(parse_arpa("ngram 1=1\n"), ArpaError);
    CHECK_THROWS_AS(parse_arpa("\\data\\\nngram 1=1\n\n\\1-grams:\n-0.1\ta\n"), ArpaError);
    CHECK_THROWS_AS(parse_arpa("\\data\\\nngram 1=1\n\n\\1-grams:\nx\ta\n\n\\end\\\n"), ArpaError);
    // bigram whose prefix is missing
    CHECK_THROWS_AS(parse_arpa("\\data\\\nngram 1=1\nngram 2=1\n\n\\1-grams:\n-0.1\ta\t0\n\n\\2-grams:\n"
                               "-0.1\tz a\n\n\\end\\\n"),
                    ArpaError);
}

TEST_CASE("log_prob by hand") {
    auto m = parse_arpa(kBigram);
    CHECK(log_prob(m, {"a"}, "b") == doctest::Approx(-0.2));
    // (a, c) absent: backoff(a) + P(c)
    CHECK(log_prob(m, {"a"}, "c") == doctest::Approx(-0.6));
    CHECK(log_prob(m, {}, "c") == doctest::Approx(-0.5));
    // never looks past max_order: a long history is truncated
    CHECK(log_prob(m, {"c", "c", "a"}, "b") == doctest::Approx(-0.2));
    // OOV maps to <unk>
    CHECK(log_prob(m, {}, "zzz") == doctest::Approx(-1.0));
}

TEST_CASE("uniform models") {
    auto m = parse_arpa(fixture::uniform_arpa(4));
    CHECK(log_prob(m, {}, "u2") == doctest::Approx(std::log10(0.25)));
    CHECK(perplexity(m, {"u0", "u1", "u3"}) == 4.0);
    for (std::size_t v : {2, 3, 7, 10, 69, 83, 500}) {
        auto u = parse_arpa(fixture::uniform_arpa(v));
        for (std::size_t n : {1, 5, 37, 1000}) {
            std::vector<std::string> toks;
            for (std::size_t i = 0; i < n; ++i) toks.push_back("u" + std::to_string(i % v));
            CHECK(perplexity(u, toks) == static_cast<double>(v));
        }
    }
}

TEST_CASE("chain rule by hand") {
    auto m = parse_arpa(kBigram);
    CHECK(perplexity(m, {"a", "b"}) == doctest::Approx(std::pow(10.0, 0.25)).epsilon(1e-12));
    CHECK(perplexity(m, {"c"}) == doctest::Approx(std::pow(10.0, 0.5)).epsilon(1e-12));
}

TEST_CASE("missing <unk> is an error for OOV") {
    auto m = parse_arpa(fixture::uniform_arpa(3));
    CHECK_THROWS_AS(perplexity(m, {"u0", "nope"}), PplError);
    CHECK_THROWS_AS(perplexity(m, {}), PplError);
}

TEST_CASE("generated fixtures agree with the dense oracle") {
    std::mt19937_64 g(99);
    for (int order = 1; order <= 3; ++order) {
        for (std::uint64_t seed = 0; seed < 8; ++seed) {
            auto f = fixture::make_arpa_fixture(order, 6 + seed, seed * 31 + order);
            auto m = parse_arpa(f.arpa);
            REQUIRE(m.max_order() == order);
            // normalization and per-context agreement
            for (const auto& [h, dist] : f.cond) {
                std::vector<std::string> ctx;
                for (int id : h) ctx.push_back(id == f.sos() ? "<s>" : f.words[id]);
                double sum = 0;
                for (std::size_t w = 0; w < f.words.size(); ++w) {
                    double p = std::pow(10.0, log_prob(m, ctx, f.words[w]));
                    sum += p;
                    CHECK(std::fabs(p - static_cast<double>(dist[w])) <= 1e-12 * static_cast<double>(dist[w]) + 1e-300);
                }
                CHECK(std::fabs(sum - 1.0) < 1e-6);
            }
            for (int rep = 0; rep < 10; ++rep) {
                auto toks = random_tokens(g, f, 1 + g() % 30);
                double got = perplexity(m, toks);
                long double want = f.oracle_perplexity(toks);
                CHECK(std::fabs(got - static_cast<double>(want)) / static_cast<double>(want) < 1e-9);
            }
            // round trip through the writer
            auto back = parse_arpa(write_arpa(m));
            CHECK(back == m);
            auto toks = random_tokens(g, f, 20);
            CHECK(perplexity(back, toks) == perplexity(m, toks));
        }
    }
}

TEST_CASE("ppl gate boundary and idempotence") {
    // unigram with P(x) = 0.1, so a one-token document has perplexity 10
    auto m = parse_arpa("\\data\\\nngram 1=2\n\n\\1-grams:\n-1\tx\n-0.045757490560675115\t<unk>\n\n\\end\\\n");
    Document d;
    d.id = "d";
    d.source = "web";
    d.lang = "en";
    d.text = "X";
    auto v = ppl_gate(d, m, {"en", 10.0});
    CHECK(v.accepted);
    CHECK(*d.ppl == 10.0);
    auto v2 = ppl_gate(d, m, {"en", 10.0});
    CHECK(v2 == v);
    CHECK(*d.ppl == 10.0);
    CHECK(ppl_gate(d, m, {"en", 9.5}).reason == kHighPpl);
    d.text = "   ";
    CHECK(ppl_gate(d, m, {"en", 10.0}).reason == kEmptyAfterTokenize);
    CHECK_THROWS_AS(ppl_gate(d, m, {"de", 10.0}), GateError);
}

TEST_CASE("lm_tokenize lowercases and splits") {
    CHECK(lm_tokenize("Hello  WORLD\nÜber") == std::vector<std::string>{"hello", "world", "über"});
}

TEST_CASE("percentile threshold is nearest rank") {
    std::vector<double> s = {5, 1, 4, 2, 3, 9, 8, 7, 6, 10};
    CHECK(percentile_threshold(s, 0.7) == 7);
    CHECK(percentile_threshold(s, 1.0) == 10);
    CHECK(percentile_threshold({3.0}, 0.7) == 3.0);
    CHECK_THROWS_AS(percentile_threshold({}, 0.7), PplError);
}
