#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <random>

#include "eurocurate/errors.hpp"
#include "eurocurate/heuristic_filter.hpp"
#include "eurocurate/text.hpp"

using namespace eurocurate;

namespace {

Document doc_with(std::string text) {
    Document d;
    d.id = "d";
    d.source = "web";
    d.lang = "de";
    d.text = std::move(text);
    return d;
}

std::string filler(std::size_t n) {
    std::string s;
    while (s.size() < n) s += "abcde ";
    s.resize(n);
    if (s.back() == ' ') s.back() = 'x';
    return s;
}

// Independent rank-order oracle: counts in-word n-grams of lengths 1..n
// over code points, ranks by (count desc, ngram asc).
std::vector<std::string> oracle_rank(const std::string& input, int n, std::size_t k) {
    std::map<std::u32string, std::size_t> counts;
    std::u32string word;
    auto flush = [&] {
        for (std::size_t len = 1; len <= static_cast<std::size_t>(n); ++len)
            for (std::size_t i = 0; i + len <= word.size(); ++i) ++counts[word.substr(i, len)];
        word.clear();
    };
    for (char32_t c : text::decode_utf8(input)) {
        if (text::is_space(c)) flush();
        else word.push_back(c);
    }
    flush();
    std::vector<std::pair<std::u32string, std::size_t>> v(counts.begin(), counts.end());
    std::stable_sort(v.begin(), v.end(), [](auto& a, auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return text::encode_utf8(a.first) < text::encode_utf8(b.first);
    });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size() && i < k; ++i) out.push_back(text::encode_utf8(v[i].first));
    return out;
}

std::size_t oracle_distance(const std::vector<std::string>& doc, const std::vector<std::string>& prof) {
    std::size_t d = 0;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        auto it = std::find(prof.begin(), prof.end(), doc[i]);
        if (it == prof.end()) d += prof.size();
        else {
            auto j = static_cast<std::size_t>(it - prof.begin());
            d += j > i ? j - i : i - j;
        }
    }
    return d;
}

}  // namespace

TEST_CASE("length rule is strict") {
    FilterPolicy p;
    CHECK(doc_filter(doc_with(filler(150)), p).reason == reason::kMinLength);
    CHECK(doc_filter(doc_with(filler(199)), p).reason == reason::kMinLength);
    CHECK(doc_filter(doc_with(filler(200)), p).accepted);
    CHECK(doc_filter(doc_with(filler(201)), p).accepted);
    // length counts code points, not bytes
    std::string umlauts(199 * 2, ' ');
    for (std::size_t i = 0; i < 199; ++i) umlauts.replace(i * 2, 2, "ü");
    CHECK(doc_filter(doc_with(umlauts), p).reason == reason::kMinLength);
}

TEST_CASE("banned phrases and characters") {
    FilterPolicy p;
    CHECK(doc_filter(doc_with("Lorem Ipsum dolor " + filler(300)), p).reason == reason::kBannedPhrase);
    CHECK(doc_filter(doc_with(filler(300) + " enable JavaScript"), p).reason == reason::kBannedPhrase);
    CHECK(doc_filter(doc_with(filler(300) + " {"), p).reason == reason::kBannedChar);
    CHECK(doc_filter(doc_with(filler(300) + " }"), p).reason == reason::kBannedChar);
    CHECK(doc_filter(doc_with(filler(300) + " lorem  ipsum"), p).accepted);
}

TEST_CASE("paragraph stats by hand") {
    FilterPolicy p;
    auto a = paragraph_stats("ABC def", p);
    CHECK(a.upper_frac == doctest::Approx(0.5));
    auto b = paragraph_stats("read more ... click here #ad", p);
    CHECK(b.symbol_word_ratio == doctest::Approx(2.0 / 6.0));
    auto c = paragraph_stats("1234 5678 abc", p);
    CHECK(c.nonalpha_word_frac == doctest::Approx(2.0 / 3.0));
    auto e = paragraph_stats("", p);
    CHECK(e.n_words == 0);
    CHECK(e.upper_frac == 0.0);
    CHECK(e.symbol_word_ratio == 0.0);
    CHECK(e.nonalpha_word_frac == 0.0);
    // the ellipsis character counts once, "..." inside "...." once
    CHECK(paragraph_stats("wait… now", p).symbol_word_ratio == doctest::Approx(0.5));
}

TEST_CASE("paragraph stats ignore surrounding whitespace") {
    FilterPolicy p;
    for (std::string s : {"ABC def", "x # y ... z", "1 2 three", "Über ÄÖ üö"}) {
        auto a = paragraph_stats(s, p);
        auto b = paragraph_stats("  \t" + s + "   ", p);
        CHECK(a.upper_frac == b.upper_frac);
        CHECK(a.symbol_word_ratio == b.symbol_word_ratio);
        CHECK(a.nonalpha_word_frac == b.nonalpha_word_frac);
        CHECK(a.n_words == b.n_words);
    }
}

TEST_CASE("clean_paragraphs removes offending paragraphs") {
    FilterPolicy p;
    auto d = doc_with("this paragraph is fine\nABC def");
    auto r = clean_paragraphs(d, p);
    CHECK(r.doc.text == "this paragraph is fine");
    REQUIRE(r.removed.size() == 1);
    CHECK(r.removed[0] == RemovedParagraph{1, reason::kUpperFrac});

    auto ok = doc_with("all good here\nand here too");
    auto r2 = clean_paragraphs(ok, p);
    CHECK(r2.doc == ok);
    CHECK(r2.removed.empty());

    // symbol ratio exactly 0.1 is kept, just above is removed
    std::string ten = "# a b c d e f g h i";
    std::string nine = "# a b c d e f g h";
    CHECK(clean_paragraphs(doc_with(ten), p).removed.empty());
    CHECK(clean_paragraphs(doc_with(nine), p).removed.size() == 1);
}

TEST_CASE("clean_paragraphs invariants on random docs") {
    FilterPolicy p;
    std::mt19937_64 g(17);
    const char* parts[] = {"word", "WORD", "#", "123", "...", "Ünïcode", "\n", "\n\n", " "};
    for (int t = 0; t < 500; ++t) {
        std::string s;
        for (int k = 0, n = static_cast<int>(g() % 40); k < n; ++k) {
            s += parts[g() % 9];
            s += ' ';
        }
        auto r = clean_paragraphs(doc_with(s), p);
        CHECK(r.doc.text.size() <= s.size());
        for (std::size_t i = 1; i < r.removed.size(); ++i) CHECK(r.removed[i - 1].index < r.removed[i].index);
    }
}

TEST_CASE("filter_document composes both passes") {
    FilterPolicy p;
    auto shouting = filler(100) + "\n" + std::string(150, 'A');
    auto r = filter_document(doc_with(shouting), p);
    CHECK(r.verdict.accepted);
    CHECK(r.clean.doc.text == filler(100));
    CHECK(r.clean.doc.token_count == 17);
    auto only = filter_document(doc_with(std::string(250, 'A')), p);
    CHECK(only.verdict.reason == reason::kEmptyAfterClean);
    CHECK(filter_document(doc_with("short"), p).verdict.reason == reason::kMinLength);
}

TEST_CASE("policy validation") {
    FilterPolicy p;
    CHECK(validate_policy(p).empty());
    p.min_chars = 0;
    p.max_upper_frac = 1.5;
    auto v = validate_policy(p);
    CHECK(std::find(v.begin(), v.end(), "min_chars") != v.end());
    CHECK(std::find(v.begin(), v.end(), "max_upper_frac") != v.end());
}

TEST_CASE("build_profile ranks by frequency then lexicographically") {
    auto p = build_profile({{"xx", "aaab"}}, 1, 10);
    REQUIRE(p.size() == 1);
    CHECK(p[0].ranked_ngrams == std::vector<std::string>{"a", "b"});
    auto tie = build_profile({{"xx", "ba"}}, 1, 10);
    CHECK(tie[0].ranked_ngrams == std::vector<std::string>{"a", "b"});
    auto again = build_profile({{"xx", "aaab"}}, 1, 10);
    CHECK(again == p);
}

TEST_CASE("classify_language matches the brute-force distance oracle") {
    std::vector<std::pair<std::string, std::string>> corpus = {
        {"en", "the quick brown fox jumps over the lazy dog while the rain falls on the thatched roof"},
        {"de", "der schnelle braune fuchs springt über den faulen hund während der regen auf das dach fällt"},
        {"pt", "a rápida raposa marrom salta sobre o cão preguiçoso enquanto a chuva cai no telhado"},
    };
    auto profiles = build_profile(corpus, 3, 300);
    for (const auto& [lang, text] : corpus) {
        auto guess = classify_language(text, profiles);
        CHECK(guess.lang == lang);
        std::size_t best = SIZE_MAX;
        std::string best_lang;
        for (const auto& p : profiles) {
            auto d = oracle_distance(oracle_rank(text, 3, 300), p.ranked_ngrams);
            if (d < best || (d == best && p.lang < best_lang)) {
                best = d;
                best_lang = p.lang;
            }
        }
        CHECK(guess.distance == best);
        CHECK(profiles[0].ranked_ngrams.size() <= 300);
        // duplication does not change the answer
        CHECK(classify_language(text + " " + text, profiles).lang == lang);
    }
    for (const auto& p : profiles) CHECK(p.ranked_ngrams == oracle_rank(
        std::find_if(corpus.begin(), corpus.end(), [&](auto& c) { return c.first == p.lang; })->second, 3, 300));
}

TEST_CASE("classify_language ties and errors") {
    LanguageProfile a{"fr", 2, {"a", "b", "ab"}};
    LanguageProfile b{"es", 2, {"a", "b", "ab"}};
    CHECK(classify_language("ab", {a, b}).lang == "es");
    CHECK_THROWS_AS(classify_language("", {a, b}), ClassifyError);
    CHECK_THROWS_AS(classify_language("   ", {a, b}), ClassifyError);
}

TEST_CASE("profiles round trip through files") {
    auto dir = std::filesystem::temp_directory_path() / "eurocurate_profiles_test";
    std::filesystem::remove_all(dir);
    auto profiles = build_profile({{"en", "hello world there"}, {"it", "ciao mondo bello"}}, 3, 50);
    for (const auto& p : profiles) save_profile(p, dir);
    auto back = load_profiles(dir);
    CHECK(back == profiles);
    std::filesystem::remove_all(dir);
}
