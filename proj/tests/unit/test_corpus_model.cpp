#include <doctest.h>

#include <random>

#include "eurocurate/corpus_model.hpp"
#include "eurocurate/errors.hpp"

using namespace eurocurate;

namespace {

Document random_doc(std::mt19937_64& g, int i) {
    static const char* langs[] = {"en", "de", "pt", "fra"};
    static const char* pieces[] = {"a", "Ü", "\n", "\"", "\\", "\t", "日本", " ", "x", "\x7f", "😀"};
    Document d;
    d.id = "d" + std::to_string(i);
    d.source = g() % 2 ? "web" : "books";
    d.lang = langs[g() % 4];
    if (g() % 2) d.url = "https://e.org/" + std::to_string(g() % 1000);
    for (int k = 0, n = static_cast<int>(g() % 30); k < n; ++k) d.text += pieces[g() % 11];
    if (g() % 2) d.edu_score = static_cast<double>(g() % 5001) / 1000.0;
    if (g() % 2) d.ppl = 1.0 + static_cast<double>(g() % 100000) / 7.0;
    if (g() % 2) d.tier = 1 + static_cast<int>(g() % 3);
    if (g() % 2) d.token_count = static_cast<std::int64_t>(g() % 100000);
    if (g() % 3 == 0) d.extras["meta"] = {{"k", static_cast<int>(g() % 10)}, {"tags", {"a", "b"}}};
    return d;
}

Manifest random_manifest(std::mt19937_64& g) {
    static const char* reasons[] = {"min_length", "banned_char", "dup", "qe"};
    Manifest m;
    m.stage = "filter";
    for (int k = 0; k < 3; ++k) m.reject(reasons[g() % 4], g() % 10);
    m.accept(g() % 50);
    m.details["paragraphs"] = g() % 7;
    if (g() % 2) m.notes.push_back("note" + std::to_string(g() % 3));
    return m;
}

}  // namespace

TEST_CASE("parse_record maps fields") {
    auto d = parse_record(R"({"id":"a1","lang":"de","source":"web","text":"Hallo"})");
    CHECK(d.id == "a1");
    CHECK(d.lang == "de");
    CHECK(d.source == "web");
    CHECK(d.text == "Hallo");
    CHECK_FALSE(d.url.has_value());
    CHECK_FALSE(d.edu_score.has_value());
}

TEST_CASE("parse_record rejects out-of-range and malformed input") {
    try {
        parse_record(R"({"id":"a","lang":"de","source":"web","text":"x","edu_score":7.0})");
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(e.field() == "edu_score");
    }
    CHECK_THROWS_AS(parse_record(R"({"id":"a","lang":"DE","source":"web","text":"x"})"), SchemaError);
    CHECK_THROWS_AS(parse_record(R"({"id":"","lang":"de","source":"web","text":"x"})"), SchemaError);
    CHECK_THROWS_AS(parse_record(R"({"id":"a","lang":"de","source":"web","text":"x","tier":4})"), SchemaError);
    CHECK_THROWS_AS(parse_record(R"({"id":"a","lang":"de","source":"web","text":"x","ppl":0})"), SchemaError);
    CHECK_THROWS_AS(parse_record(R"({"id":"a","lang":"de","source":"web"})"), SchemaError);
    CHECK_THROWS_AS(parse_record(R"({"id":"a","lang":"de",)"), ParseError);
    CHECK_THROWS_AS(parse_record("[1,2]"), ParseError);
}

TEST_CASE("write_record escapes newlines and is deterministic") {
    Document d;
    d.id = "x";
    d.source = "web";
    d.lang = "en";
    d.text = "line one\nline two";
    auto s = write_record(d);
    CHECK(s.find('\n') == std::string::npos);
    CHECK(s == write_record(d));
    CHECK(s == R"({"id":"x","source":"web","lang":"en","text":"line one\nline two"})");
}

TEST_CASE("unknown fields survive a round trip") {
    std::string line = R"({"id":"a","lang":"de","source":"web","text":"x","zeta":[1,{"b":null}],"alpha":"y"})";
    auto d = parse_record(line);
    CHECK(d.extras.contains("zeta"));
    CHECK(d.extras.contains("alpha"));
    CHECK(parse_record(write_record(d)) == d);
}

TEST_CASE("record round trip over generated documents") {
    std::mt19937_64 g(11);
    for (int i = 0; i < 2000; ++i) {
        Document d = random_doc(g, i);
        std::string line = write_record(d);
        Document back = parse_record(line);
        REQUIRE(back == d);
        CHECK(write_record(back) == line);
    }
}

TEST_CASE("pair round trip and validation") {
    ParallelPair p;
    p.id = "p1";
    p.src_lang = "en";
    p.tgt_lang = "pt";
    p.src_text = "Hello there.";
    p.tgt_text = "Olá.";
    p.lex_score = 0.61;
    p.qe_score = 0.7;
    CHECK(parse_pair(write_pair(p)) == p);
    CHECK_THROWS_AS(parse_pair(R"({"id":"p","src_lang":"en","tgt_lang":"pt","src_text":"a","tgt_text":"  "})"),
                    SchemaError);
    CHECK_THROWS_AS(
        parse_pair(R"({"id":"p","src_lang":"en","tgt_lang":"pt","src_text":"a","tgt_text":"b","qe_score":1.5})"),
        SchemaError);
}

TEST_CASE("merge_manifests adds counts") {
    Manifest a, b;
    a.reject("min_length", 2);
    b.reject("min_length", 3);
    auto m = merge_manifests(a, b);
    CHECK(m.counts.at("min_length") == 5);
    CHECK(m.balanced());
}

TEST_CASE("merge_manifests identity, commutativity, associativity") {
    std::mt19937_64 g(3);
    Manifest empty;
    for (int i = 0; i < 300; ++i) {
        Manifest a = random_manifest(g), b = random_manifest(g), c = random_manifest(g);
        CHECK(merge_manifests(a, empty) == a);
        CHECK(merge_manifests(empty, a) == a);
        CHECK(merge_manifests(a, b) == merge_manifests(b, a));
        CHECK(merge_manifests(merge_manifests(a, b), c) == merge_manifests(a, merge_manifests(b, c)));
        CHECK(merge_manifests(a, b).balanced());
    }
}

TEST_CASE("merging manifests of different stages fails") {
    Manifest a, b;
    a.stage = "filter";
    b.stage = "dedup";
    CHECK_THROWS_AS(merge_manifests(a, b), MergeError);
}

TEST_CASE("manifest json round trip") {
    std::mt19937_64 g(5);
    for (int i = 0; i < 50; ++i) {
        Manifest m = random_manifest(g);
        CHECK(manifest_from_json(manifest_to_json(m)) == m);
    }
}

TEST_CASE("token_count_of falls back to whitespace tokens") {
    Document d;
    d.text = "  one two\tthree\n";
    CHECK(token_count_of(d) == 3);
    d.token_count = 10;
    CHECK(token_count_of(d) == 10);
}
