#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <random>

#include "eurocurate/errors.hpp"
#include "eurocurate/quality_gate.hpp"
#include "mock_server.hpp"

using namespace eurocurate;

namespace {

Document doc(std::string id, std::string text, std::optional<double> score = std::nullopt) {
    Document d;
    d.id = std::move(id);
    d.source = "web";
    d.lang = "en";
    d.text = std::move(text);
    d.edu_score = score;
    return d;
}

ParallelPair pair(std::string src, std::string tgt, double lex, double qe) {
    ParallelPair p;
    p.id = "p";
    p.src_lang = std::move(src);
    p.tgt_lang = std::move(tgt);
    p.src_text = "a";
    p.tgt_text = "b";
    p.lex_score = lex;
    p.qe_score = qe;
    return p;
}

ScorerConfig scorer_at(const std::string& url) {
    ScorerConfig c;
    c.url = url;
    c.max_batch = 7;
    c.parallelism = 3;
    c.retry.max_attempts = 2;
    c.retry.initial_backoff = std::chrono::milliseconds(1);
    c.retry.timeout = std::chrono::milliseconds(2000);
    return c;
}

}  // namespace

TEST_CASE("assign_tier intervals") {
    TierCutpoints cut{2.5, 3.5};
    CHECK(assign_tier(3.0, cut) == 2);
    CHECK(assign_tier(3.5, cut) == 3);
    CHECK(assign_tier(2.5, cut) == 2);
    CHECK(assign_tier(0.0, cut) == 1);
    CHECK(assign_tier(5.0, cut) == 3);
    CHECK(assign_tier(5.0, TierCutpoints{0.1, 0.2}) == 3);
    CHECK_THROWS_AS(assign_tier(5.1, cut), RangeError);
    CHECK_THROWS_AS(validate(TierCutpoints{3.0, 3.0}), RangeError);
    int prev = 1;
    for (int i = 0; i <= 500; ++i) {
        int t = assign_tier(i / 100.0, cut);
        CHECK(t >= prev);
        prev = t;
    }
}

TEST_CASE("cutpoints from histogram") {
    std::vector<double> scores;
    for (int k = 0; k < 10; ++k)
        for (int s = 0; s <= 5; ++s) scores.push_back(s);
    auto cut = cutpoints_from_histogram(scores, 1.0 / 3.0, 2.0 / 3.0);
    CHECK(cut.c1 == 2.0);
    CHECK(cut.c2 == 4.0);
    std::mt19937_64 g(2);
    for (int rep = 0; rep < 10; ++rep) {
        std::shuffle(scores.begin(), scores.end(), g);
        auto c = cutpoints_from_histogram(scores, 1.0 / 3.0, 2.0 / 3.0);
        CHECK(c.c1 == cut.c1);
        CHECK(c.c2 == cut.c2);
    }
    CHECK_THROWS_AS(cutpoints_from_histogram(std::vector<double>(10, 3.0), 1.0 / 3.0, 2.0 / 3.0), RangeError);
}

TEST_CASE("english edu gate is strict") {
    CHECK_FALSE(english_edu_gate(doc("a", "x", 2.0)).accepted);
    CHECK(english_edu_gate(doc("a", "x", 2.0)).reason == kLowEduScore);
    CHECK(english_edu_gate(doc("a", "x", 2.01)).accepted);
    CHECK_THROWS_AS(english_edu_gate(doc("a", "x")), GateError);
}

TEST_CASE("parallel gate") {
    ParallelThresholds t;
    CHECK(gate_parallel(pair("en", "pt", 0.55, 0.9), t).reason == kLexScore);
    CHECK(gate_parallel(pair("en", "fr", 0.55, 0.75), t).accepted);
    CHECK(gate_parallel(pair("en", "de", 0.9, 0.69), t).reason == kQeScore);
    CHECK(gate_parallel(pair("en", "pt", 0.60, 0.70), t).accepted);
    // override keys on the non-English side in either direction
    CHECK(gate_parallel(pair("pt", "en", 0.55, 0.9), t).reason == kLexScore);
    CHECK(validate_thresholds(t).empty());
    t.qe_min = 1.2;
    CHECK_FALSE(validate_thresholds(t).empty());
}

TEST_CASE("threshold gate is inclusive") {
    CHECK(threshold_gate(9.0, 9.0));
    CHECK_FALSE(threshold_gate(8.9, 9.0));
    for (double x : {0.0, 0.3, 1.0}) CHECK(threshold_gate(x, 0.0));
}

TEST_CASE("score documents through a mock scorer") {
    fixture::MockServer server(fixture::scorer_handler([](const std::string&) { return 3.2; }));
    std::vector<Document> docs;
    for (int i = 0; i < 20; ++i) docs.push_back(doc("d" + std::to_string(i), "text " + std::to_string(i)));
    auto out = score_documents(docs, scorer_at(server.url("/score")));
    REQUIRE(out.size() == 20);
    for (const auto& d : out) CHECK(*d.edu_score == 3.2);
    // batches respect max_batch
    for (const auto& body : server.requests()) CHECK(nlohmann::json::parse(body)["texts"].size() <= 7);
}

TEST_CASE("scores are matched by position") {
    // echo scorer: the score encodes the text's number
    fixture::MockServer server(fixture::scorer_handler([](const std::string& t) {
        return std::stoi(t.substr(5)) / 100.0;
    }));
    std::vector<Document> docs;
    for (int i = 0; i < 50; ++i) docs.push_back(doc("d" + std::to_string(i), "text " + std::to_string(i * 7 % 500)));
    auto cfg = scorer_at(server.url());
    auto out = score_documents(docs, cfg);
    for (int i = 0; i < 50; ++i) CHECK(*out[i].edu_score == (i * 7 % 500) / 100.0);
    CHECK(score_documents(docs, cfg) == out);
}

TEST_CASE("scorer protocol errors") {
    fixture::MockServer bad(fixture::scorer_handler([](const std::string&) { return 5.5; }));
    CHECK_THROWS_AS(score_documents({doc("a", "x")}, scorer_at(bad.url())), ScorerProtocolError);
    fixture::MockServer short_reply([](const std::string&) { return std::pair<int, std::string>{200, R"({"scores":[]})"}; });
    CHECK_THROWS_AS(score_documents({doc("a", "x")}, scorer_at(short_reply.url())), ScorerProtocolError);
    fixture::MockServer down([](const std::string&) { return std::pair<int, std::string>{503, "{}"}; });
    CHECK_THROWS_AS(score_documents({doc("a", "x")}, scorer_at(down.url())), ScorerUnavailable);
    CHECK(down.requests().size() == 2);
}

TEST_CASE("score table") {
    auto path = std::filesystem::temp_directory_path() / "eurocurate_scores.tsv";
    {
        std::ofstream out(path);
        out << "a\t3.5\nb\t0\n";
    }
    auto t = load_score_table(path.string());
    CHECK(t.at("a") == 3.5);
    CHECK(t.at("b") == 0.0);
    std::filesystem::remove(path);
}
