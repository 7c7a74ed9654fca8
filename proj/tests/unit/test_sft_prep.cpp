#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "eurocurate/errors.hpp"
#include "eurocurate/sft_prep.hpp"

using namespace eurocurate;

TEST_CASE("strip_traces examples") {
    auto m = default_trace_markers();
    CHECK(strip_traces("<think>steps</think>Final answer.", m) == "Final answer.");
    CHECK(strip_traces("nothing here", m) == "nothing here");
    CHECK(strip_traces("<think>a</think>x<think>b</think>y", m) == "x y");
    CHECK(strip_traces("before <think>x</think>  after", m) == "before after");
    CHECK(strip_traces("  keep  spacing  ", m) == "  keep  spacing  ");
    try {
        strip_traces("ok <think>never closed", m);
        FAIL("expected StripError");
    } catch (const StripError& e) {
        CHECK(e.position() == 3);
    }
}

TEST_CASE("strip_traces is idempotent") {
    std::mt19937_64 g(6);
    const char* parts[] = {"<think>", "</think>", "word", " ", "\n", "x"};
    TraceMarkers m = {{"<think>", "</think>"}, {"[[", "]]"}};
    int checked = 0;
    for (int t = 0; t < 2000; ++t) {
        std::string s;
        for (int k = 0, n = static_cast<int>(g() % 12); k < n; ++k) s += parts[g() % 6];
        try {
            auto once = strip_traces(s, m);
            CHECK(strip_traces(once, m) == once);
            ++checked;
        } catch (const StripError&) {
        }
    }
    CHECK(checked > 100);
}

TEST_CASE("validate_format") {
    auto ok = make_chat_record("1", "de", {{"q", "a"}}, "sys");
    CHECK(validate_format(ok).accepted);
    auto ends_user = ok;
    ends_user.messages.push_back({"user", "more"});
    CHECK(validate_format(ends_user).reason == "ends_on_user");
    auto empty_ans = make_chat_record("1", "de", {{"q", "  "}});
    CHECK(validate_format(empty_ans).reason == "empty_content");
    ChatRecord none;
    CHECK(validate_format(none).reason == "empty_messages");
    auto sys_late = ok;
    sys_late.messages.push_back({"system", "x"});
    CHECK(validate_format(sys_late).reason == "misplaced_system");
    auto weird = ok;
    weird.messages[1].role = "tool";
    CHECK(validate_format(weird).reason == "unknown_role");
    std::mt19937_64 g(3);
    for (int t = 0; t < 200; ++t) {
        std::vector<std::pair<std::string, std::string>> ex;
        for (std::size_t k = 0, n = 1 + g() % 4; k < n; ++k) ex.push_back({"q" + std::to_string(g()), "a"});
        CHECK(validate_format(make_chat_record("r", "fr", ex, g() % 2 ? "s" : "")).accepted);
    }
}

TEST_CASE("chat records round trip") {
    auto r = make_chat_record("7", "pt", {{"olá", "oi"}}, "", "src");
    r.extras["meta"] = 3;
    CHECK(parse_chat(write_chat(r)) == r);
    CHECK_THROWS_AS(parse_chat(R"({"id":"1","lang":"pt"})"), SchemaError);
}

TEST_CASE("instruction dedup") {
    std::vector<ChatRecord> v = {make_chat_record("b", "en", {{"What is 2+2?", "4"}}),
                                 make_chat_record("a", "en", {{"what is 2+2", "four"}}),
                                 make_chat_record("c", "en", {{"Other", "x"}})};
    auto r = dedup_instructions(v);
    REQUIRE(r.records.size() == 2);
    CHECK(r.records[0].id == "a");
    CHECK(r.records[1].id == "c");
    CHECK(r.links == std::vector<std::pair<std::string, std::string>>{{"a", "b"}});
    std::set<std::string> base;
    for (const auto& x : r.records) base.insert(x.id);
    std::mt19937_64 g(1);
    for (int t = 0; t < 10; ++t) {
        std::shuffle(v.begin(), v.end(), g);
        std::set<std::string> s;
        for (const auto& x : dedup_instructions(v).records) s.insert(x.id);
        CHECK(s == base);
    }
    ChatRecord no_user;
    no_user.id = "z";
    no_user.messages = {{"assistant", "hi"}};
    CHECK_THROWS_AS(dedup_instructions({no_user}), FormatError);
}

TEST_CASE("language report") {
    std::vector<ChatRecord> v = {make_chat_record("1", "de", {{"q", "a"}}), make_chat_record("2", "de", {{"q", "a"}}),
                                 make_chat_record("3", "fr", {{"q", "a"}})};
    auto rep = language_report(v);
    REQUIRE(rep.size() == 2);
    CHECK(rep[0].lang == "de");
    CHECK(rep[0].percent == doctest::Approx(66.6667).epsilon(1e-4));
    CHECK(rep[0].percent + rep[1].percent == doctest::Approx(100.0).epsilon(1e-8));
    CHECK(language_report(v, {"de"})[0].percent == 100.0);
    CHECK_THROWS_AS(language_report({}), ReportError);
}
