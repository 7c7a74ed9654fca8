#include "eurocurate/heuristic_filter.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <unordered_map>

#include "eurocurate/text.hpp"

namespace eurocurate {
namespace {

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

std::size_t count_symbols(std::string_view s, const std::vector<std::string>& symbols) {
    std::vector<std::string_view> by_length(symbols.begin(), symbols.end());
    std::erase_if(by_length, [](std::string_view x) { return x.empty(); });
    std::stable_sort(by_length.begin(), by_length.end(),
                     [](std::string_view a, std::string_view b) { return a.size() > b.size(); });
    std::size_t n = 0;
    std::size_t i = 0;
    while (i < s.size()) {
        std::size_t step = 1;
        for (auto sym : by_length) {
            if (s.compare(i, sym.size(), sym) == 0) {
                ++n;
                step = sym.size();
                break;
            }
        }
        i += step;
    }
    return n;
}

}  // namespace

std::vector<std::string> validate_policy(const FilterPolicy& p) {
    std::vector<std::string> v;
    if (p.min_chars < 1) v.emplace_back("min_chars");
    if (!in_unit(p.max_upper_frac)) v.emplace_back("max_upper_frac");
    if (!in_unit(p.max_symbol_word_ratio)) v.emplace_back("max_symbol_word_ratio");
    if (!in_unit(p.max_nonalpha_word_frac)) v.emplace_back("max_nonalpha_word_frac");
    return v;
}

FilterVerdict doc_filter(const Document& doc, const FilterPolicy& policy) {
    if (text::codepoint_count(doc.text) < policy.min_chars) return FilterVerdict::reject(reason::kMinLength);
    const std::string lowered = text::to_lower(doc.text);
    for (const auto& phrase : policy.banned_phrases) {
        if (!phrase.empty() && lowered.find(text::to_lower(phrase)) != std::string::npos)
            return FilterVerdict::reject(reason::kBannedPhrase);
    }
    if (!policy.banned_chars.empty()) {
        for (char32_t c : text::decode_utf8(doc.text)) {
            if (policy.banned_chars.find(c) != std::u32string::npos) return FilterVerdict::reject(reason::kBannedChar);
        }
    }
    return FilterVerdict::accept();
}

ParagraphStats paragraph_stats(std::string_view paragraph, const FilterPolicy& policy) {
    ParagraphStats st;
    std::size_t letters = 0;
    std::size_t upper = 0;
    for (char32_t c : text::decode_utf8(paragraph)) {
        if (text::is_letter(c)) {
            ++letters;
            if (text::is_upper(c)) ++upper;
        }
    }
    if (letters > 0) st.upper_frac = static_cast<double>(upper) / static_cast<double>(letters);

    const auto words = text::split_whitespace(paragraph);
    st.n_words = words.size();
    if (st.n_words == 0) return st;

    std::size_t nonalpha = 0;
    for (auto w : words) {
        const auto cps = text::decode_utf8(w);
        if (std::none_of(cps.begin(), cps.end(), text::is_letter)) ++nonalpha;
    }
    const auto n = static_cast<double>(st.n_words);
    st.nonalpha_word_frac = static_cast<double>(nonalpha) / n;
    st.symbol_word_ratio = static_cast<double>(count_symbols(paragraph, policy.symbol_set)) / n;
    return st;
}

CleanResult clean_paragraphs(const Document& doc, const FilterPolicy& policy) {
    CleanResult res{doc, {}};
    std::string kept;
    kept.reserve(doc.text.size());
    bool first = true;
    const auto paragraphs = text::split(doc.text, '\n');
    for (std::size_t i = 0; i < paragraphs.size(); ++i) {
        const auto para = paragraphs[i];
        if (para.empty()) continue;
        const auto st = paragraph_stats(para, policy);
        const char* why = nullptr;
        if (st.upper_frac > policy.max_upper_frac)
            why = reason::kUpperFrac;
        else if (st.symbol_word_ratio > policy.max_symbol_word_ratio)
            why = reason::kSymbolWordRatio;
        else if (st.nonalpha_word_frac > policy.max_nonalpha_word_frac)
            why = reason::kNonalphaWordFrac;
        if (why) {
            res.removed.push_back({i, why});
            continue;
        }
        if (!first) kept += '\n';
        kept.append(para);
        first = false;
    }
    res.doc.text = std::move(kept);
    return res;
}

FilterOutcome filter_document(const Document& doc, const FilterPolicy& policy) {
    FilterOutcome out;
    out.verdict = doc_filter(doc, policy);
    if (!out.verdict) return out;
    out.clean = clean_paragraphs(doc, policy);
    if (text::trim(out.clean.doc.text).empty()) {
        out.verdict = FilterVerdict::reject(reason::kEmptyAfterClean);
        return out;
    }
    out.clean.doc.token_count = static_cast<std::int64_t>(text::count_whitespace_tokens(out.clean.doc.text));
    return out;
}

namespace {

void count_ngrams(std::string_view text, int n, std::unordered_map<std::string, std::size_t>& counts) {
    const std::string lowered = text::to_lower(text);
    for (auto word : text::split_whitespace(lowered)) {
        const auto cps = text::decode_utf8(word);
        for (std::size_t len = 1; len <= static_cast<std::size_t>(n); ++len) {
            if (cps.size() < len) break;
            for (std::size_t i = 0; i + len <= cps.size(); ++i) {
                ++counts[text::encode_utf8(std::u32string_view(cps).substr(i, len))];
            }
        }
    }
}

std::vector<std::string> rank(const std::unordered_map<std::string, std::size_t>& counts, std::size_t limit) {
    std::vector<std::pair<std::string, std::size_t>> items(counts.begin(), counts.end());
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (items.size() > limit) items.resize(limit);
    std::vector<std::string> out;
    out.reserve(items.size());
    for (auto& [g, _] : items) out.push_back(std::move(g));
    return out;
}

}  // namespace

std::vector<LanguageProfile> build_profile(const std::vector<std::pair<std::string, std::string>>& corpus, int n,
                                           std::size_t profile_size) {
    if (n < 1 || n > 5) throw ProfileError("n-gram order must be in [1,5]");
    if (corpus.empty()) throw ProfileError("empty corpus");
    std::map<std::string, std::unordered_map<std::string, std::size_t>> by_lang;
    for (const auto& [lang, text] : corpus) count_ngrams(text, n, by_lang[lang]);
    std::vector<LanguageProfile> out;
    for (const auto& [lang, counts] : by_lang) {
        if (counts.empty()) throw ProfileError("no n-grams for language '" + lang + "'");
        out.push_back({lang, n, rank(counts, profile_size)});
    }
    return out;
}

LanguageGuess classify_language(std::string_view text, const std::vector<LanguageProfile>& profiles) {
    if (profiles.empty()) throw ClassifyError("no language profiles");
    if (text::trim(text).empty()) throw ClassifyError("empty text");

    int order = 1;
    std::size_t size = 1;
    for (const auto& p : profiles) {
        order = std::max(order, p.order);
        size = std::max(size, p.ranked_ngrams.size());
    }
    std::unordered_map<std::string, std::size_t> counts;
    count_ngrams(text, order, counts);
    if (counts.empty()) throw ClassifyError("text has no n-grams");
    const auto doc_ranked = rank(counts, size);

    LanguageGuess best;
    bool have = false;
    for (const auto& p : profiles) {
        std::unordered_map<std::string_view, std::size_t> pos;
        for (std::size_t i = 0; i < p.ranked_ngrams.size(); ++i) pos.emplace(p.ranked_ngrams[i], i);
        const std::size_t penalty = p.ranked_ngrams.size();
        std::size_t dist = 0;
        for (std::size_t i = 0; i < doc_ranked.size(); ++i) {
            auto it = pos.find(doc_ranked[i]);
            dist += it == pos.end() ? penalty : (it->second > i ? it->second - i : i - it->second);
        }
        if (!have || dist < best.distance || (dist == best.distance && p.lang < best.lang)) {
            best = {p.lang, dist};
            have = true;
        }
    }
    return best;
}

void save_profile(const LanguageProfile& profile, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / (profile.lang + ".profile"), std::ios::binary);
    if (!out) throw ProfileError("cannot write profile for " + profile.lang);
    for (const auto& g : profile.ranked_ngrams) out << g << '\n';
}

std::vector<LanguageProfile> load_profiles(const std::filesystem::path& dir) {
    std::vector<LanguageProfile> out;
    if (!std::filesystem::is_directory(dir)) throw ProfileError("not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.path().extension() == ".profile") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        LanguageProfile p;
        p.lang = f.stem().string();
        p.order = 1;
        std::ifstream in(f, std::ios::binary);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            p.order = std::max(p.order, static_cast<int>(text::codepoint_count(line)));
            p.ranked_ngrams.push_back(line);
        }
        if (p.ranked_ngrams.empty()) throw ProfileError("empty profile file: " + f.string());
        out.push_back(std::move(p));
    }
    if (out.empty()) throw ProfileError("no .profile files in " + dir.string());
    return out;
}

}  // namespace eurocurate
