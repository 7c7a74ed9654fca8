#include "fixture_corpus.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "eurocurate/corpus_model.hpp"
#include "eurocurate/errors.hpp"
#include "eurocurate/ngram_lm.hpp"

namespace eurocurate::fixture {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kVocab = 1500;

struct LangSpec {
    const char* code;
    std::array<const char*, 12> syllables;
};

const std::array<LangSpec, 6> kLangs = {{
    {"en", {"th", "ing", "er", "an", "ou", "st", "wh", "ea", "ly", "ight", "on", "re"}},
    {"de", {"sch", "ein", "ung", "ch", "en", "ber", "au", "ie", "keit", "tz", "gen", "lich"}},
    {"fr", {"ou", "eau", "qu", "ai", "ent", "ion", "le", "ré", "ç", "oi", "eux", "té"}},
    {"es", {"ci", "ón", "ll", "ar", "do", "es", "ñ", "ue", "mente", "ra", "to", "ía"}},
    {"pt", {"ção", "nh", "lh", "ão", "os", "ei", "ar", "mente", "ú", "qu", "to", "da"}},
    {"it", {"zz", "gli", "ch", "one", "are", "ità", "tt", "io", "ment", "ce", "la", "sc"}},
}};

const std::array<const char*, 3> kSources = {"web", "encyclopedic", "books"};

// Plain modulo keeps the stream identical across standard libraries.
struct Rng {
    std::mt19937_64 g;
    std::uint64_t below(std::uint64_t n) { return g() % n; }
    double unit() { return static_cast<double>(g() >> 11) * 0x1.0p-53; }
};

std::vector<std::string> make_vocab(const LangSpec& lang, Rng& rng) {
    std::vector<std::string> words;
    std::vector<std::string> seen;
    while (words.size() < kVocab) {
        std::string w;
        std::uint64_t parts = 1 + rng.below(3);
        for (std::uint64_t i = 0; i < parts; ++i) {
            w += lang.syllables[rng.below(lang.syllables.size())];
            w += "aeiou"[rng.below(5)];
        }
        if (std::find(seen.begin(), seen.end(), w) != seen.end()) continue;
        seen.push_back(w);
        words.push_back(w);
    }
    return words;
}

// Index i is drawn with P(i) = sqrt((i+1)/V) - sqrt(i/V).
std::size_t zipfish(Rng& rng) {
    double u = rng.unit();
    auto i = static_cast<std::size_t>(kVocab * u * u);
    return std::min(i, kVocab - 1);
}

double word_prob(std::size_t i) {
    return std::sqrt(static_cast<double>(i + 1) / kVocab) - std::sqrt(static_cast<double>(i) / kVocab);
}

std::string sentence(const std::vector<std::string>& vocab, Rng& rng) {
    std::string s;
    std::uint64_t n = 6 + rng.below(14);
    for (std::uint64_t i = 0; i < n; ++i) {
        if (i) s += ' ';
        std::string w = vocab[zipfish(rng)];
        if (i == 0 && !w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 'a' + 'A');
        s += w;
    }
    s += '.';
    return s;
}

std::string paragraph(const std::vector<std::string>& vocab, Rng& rng) {
    std::string p;
    std::uint64_t n = 2 + rng.below(5);
    for (std::uint64_t i = 0; i < n; ++i) {
        if (i) p += ' ';
        p += sentence(vocab, rng);
    }
    return p;
}

std::string gibberish(Rng& rng, std::size_t words) {
    std::string s;
    for (std::size_t i = 0; i < words; ++i) {
        if (i) s += ' ';
        std::uint64_t len = 3 + rng.below(8);
        for (std::uint64_t k = 0; k < len; ++k) s += static_cast<char>('a' + rng.below(26));
    }
    return s;
}

void write_model(const std::vector<std::string>& vocab, const fs::path& path) {
    ArpaModel m(1);
    double unk = 1e-4;
    for (std::size_t i = 0; i < vocab.size(); ++i) m.add({vocab[i]}, {std::log10(word_prob(i) * (1.0 - unk)), 0.0});
    m.add({std::string(kUnknown)}, {std::log10(unk), 0.0});
    m.add({std::string(kSentenceStart)}, {-99.0, 0.0});
    std::ofstream out(path, std::ios::binary);
    out << write_arpa(m);
    if (!out) throw Error("cannot write " + path.string());
}

std::string lowercase_ascii(std::string s) {
    for (auto& c : s)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return s;
}

Json pipeline_config(std::uint64_t seed) {
    Json models = Json::object();
    for (const auto& l : kLangs) models[l.code] = std::string("models/") + l.code + ".arpa";
    Json mixture = {{"web", 0.5}, {"encyclopedic", 0.3}, {"books", 0.2}};
    Json phases = Json::array();
    for (std::int64_t tokens : {4'000'000'000'000LL, 4'400'000'000'000LL, 4'800'000'000'000LL})
        phases.push_back({{"tokens", tokens}, {"seq_len", tokens == 4'800'000'000'000LL ? 32768 : 4096}, {"mixture", mixture}});
    return {
        {"seed", seed},
        {"workers", 1},
        {"filter", Json::object()},
        {"langid", Json::object()},
        {"ppl", {{"models", models}, {"percentile", 0.9}}},
        {"dedup", {{"mode", "normalized"}}},
        {"score", Json::object()},
        {"tier", {{"fractions", {1.0 / 3.0, 2.0 / 3.0}}}},
        {"parallel", Json::object()},
        {"plan", {{"phases", phases}, {"longctx_tokens", 60'000'000'000LL}}},
        {"mix",
         {{"phase", 0},
          {"budget_tokens", 2'000'000},
          {"sources", {{"web", Json::object()}, {"encyclopedic", Json::object()}, {"books", Json::object()}}}}},
        {"pack", {{"seq_len", 4096}, {"sep_token", 0}, {"vocab_size", 262144}}},
        {"schedule", Json::object()},
        {"arch", Json::object()},
        {"sft", Json::object()},
        {"eval", Json::object()},
        {"stages",
         {{"ingest", {{"input", "corpus.jsonl"}, {"output", "work/ingested.jsonl"}}},
          {"filter", {{"input", "work/ingested.jsonl"}, {"output", "work/filtered.jsonl"}}},
          {"ppl", {{"input", "work/filtered.jsonl"}, {"output", "work/ppl.jsonl"}}},
          {"dedup", {{"input", "work/ppl.jsonl"}, {"output", "work/dedup.jsonl"}}},
          {"tier", {{"input", "work/dedup.jsonl"}, {"output", "work/tiered.jsonl"}}},
          {"mix", {{"input", "work/tiered.jsonl"}, {"output", "work/mixed.jsonl"}}},
          {"pack", {{"input", "work/mixed.jsonl"}, {"output", "work/packed.bin"}}}}},
    };
}

}  // namespace

FixtureFiles write_fixture(const FixtureSpec& spec) {
    FixtureFiles files;
    fs::create_directories(spec.dir / "models");
    files.corpus = spec.dir / "corpus.jsonl";
    files.config = spec.dir / "pipeline.json";
    files.models = spec.dir / "models";

    Rng rng{std::mt19937_64(spec.seed)};
    std::vector<std::vector<std::string>> vocabs;
    for (const auto& l : kLangs) {
        vocabs.push_back(make_vocab(l, rng));
        write_model(vocabs.back(), files.models / (std::string(l.code) + ".arpa"));
    }

    std::ofstream out(files.corpus, std::ios::binary);
    if (!out) throw Error("cannot write " + files.corpus.string());
    std::vector<Document> recent;
    std::size_t n = 0;
    while (files.bytes < spec.target_bytes) {
        std::size_t li = rng.below(kLangs.size());
        const auto& vocab = vocabs[li];
        Document d;
        char id[32];
        std::snprintf(id, sizeof id, "doc-%07zu", n);
        d.id = id;
        d.lang = kLangs[li].code;
        d.source = kSources[rng.below(100) < 50 ? 0 : (rng.below(100) < 60 ? 1 : 2)];
        d.url = "https://example.org/" + d.lang + "/" + std::to_string(n);
        d.edu_score = static_cast<double>(rng.below(501)) / 100.0;

        std::uint64_t kind = rng.below(100);
        if (kind < 5 && !recent.empty()) {
            // verbatim copy under a new id
            Document src = recent[rng.below(recent.size())];
            src.id = d.id;
            src.url = d.url;
            d = src;
        } else if (kind < 8 && !recent.empty()) {
            // same text up to case
            Document src = recent[rng.below(recent.size())];
            src.id = d.id;
            src.url = d.url;
            src.text = lowercase_ascii(src.text);
            d = src;
        } else if (kind < 13) {
            d.text = sentence(vocab, rng);
        } else if (kind < 15) {
            d.text = paragraph(vocab, rng) + " lorem ipsum " + paragraph(vocab, rng);
        } else if (kind < 22) {
            d.text = gibberish(rng, 150 + rng.below(200));
        } else {
            std::uint64_t paras = 2 + rng.below(6);
            for (std::uint64_t p = 0; p < paras; ++p) {
                if (p) d.text += '\n';
                if (rng.below(20) == 0) d.text += "# # # ### ... # #";
                else d.text += paragraph(vocab, rng);
            }
        }
        std::string line = write_record(d);
        out << line << '\n';
        files.bytes += line.size() + 1;
        ++n;
        if (recent.size() < 256) recent.push_back(d);
        else recent[rng.below(256)] = d;
    }
    files.documents = n;
    out.close();
    if (!out) throw Error("cannot write " + files.corpus.string());

    std::ofstream cfg(files.config, std::ios::binary);
    cfg << pipeline_config(spec.seed).dump(2) << '\n';
    if (!cfg) throw Error("cannot write " + files.config.string());
    return files;
}

}  // namespace eurocurate::fixture
