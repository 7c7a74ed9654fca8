#pragma once

// Document- and paragraph-level heuristic filters plus a rank-order n-gram
// language identifier.

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "eurocurate/corpus_model.hpp"

namespace eurocurate {

struct FilterPolicy {
    std::size_t min_chars = 200;
    std::vector<std::string> banned_phrases = {"lorem ipsum", "javascript"};
    std::u32string banned_chars = U"{}";
    double max_upper_frac = 0.40;
    double max_symbol_word_ratio = 0.10;
    double max_nonalpha_word_frac = 0.20;
    std::vector<std::string> symbol_set = {"#", "…", "..."};
};

/// Names of violated policy invariants (empty when valid).
std::vector<std::string> validate_policy(const FilterPolicy& policy);

struct ParagraphStats {
    double upper_frac = 0.0;
    double symbol_word_ratio = 0.0;
    double nonalpha_word_frac = 0.0;
    std::size_t n_words = 0;
};

/// Rejection reasons, checked in this order.
namespace reason {
inline constexpr const char* kMinLength = "min_length";
inline constexpr const char* kBannedPhrase = "banned_phrase";
inline constexpr const char* kBannedChar = "banned_char";
inline constexpr const char* kUpperFrac = "upper_frac";
inline constexpr const char* kSymbolWordRatio = "symbol_word_ratio";
inline constexpr const char* kNonalphaWordFrac = "nonalpha_word_frac";
inline constexpr const char* kEmptyAfterClean = "empty_after_clean";
}  // namespace reason

FilterVerdict doc_filter(const Document& doc, const FilterPolicy& policy);

ParagraphStats paragraph_stats(std::string_view paragraph, const FilterPolicy& policy);

struct RemovedParagraph {
    std::size_t index;
    std::string reason;
    bool operator==(const RemovedParagraph&) const = default;
};

struct CleanResult {
    Document doc;
    std::vector<RemovedParagraph> removed;
};

/// Drops paragraphs (newline-delimited) whose stats exceed any bound.
/// Empty paragraphs are dropped without being reported.
CleanResult clean_paragraphs(const Document& doc, const FilterPolicy& policy);

/// The filter stage per document: doc_filter, then paragraph cleaning. A
/// document with no paragraph left is rejected as empty_after_clean.
/// On acceptance `clean.doc` carries the cleaned text and token count.
struct FilterOutcome {
    FilterVerdict verdict;
    CleanResult clean;
};
FilterOutcome filter_document(const Document& doc, const FilterPolicy& policy);

struct LanguageProfile {
    std::string lang;
    /// Maximum n-gram length (in code points) the profile was built with.
    int order = 3;
    std::vector<std::string> ranked_ngrams;

    bool operator==(const LanguageProfile&) const = default;
};

/// Character n-grams of lengths 1..n inside whitespace tokens, ranked by
/// descending frequency with lexicographic tie-break.
std::vector<LanguageProfile> build_profile(const std::vector<std::pair<std::string, std::string>>& corpus,
                                           int n, std::size_t profile_size);

struct LanguageGuess {
    std::string lang;
    std::size_t distance = 0;
};

/// Out-of-place rank distance; smallest wins, ties by language code.
LanguageGuess classify_language(std::string_view text, const std::vector<LanguageProfile>& profiles);

/// Profile files: `<dir>/<lang>.profile`, one n-gram per line in rank order.
void save_profile(const LanguageProfile& profile, const std::filesystem::path& dir);
std::vector<LanguageProfile> load_profiles(const std::filesystem::path& dir);

}  // namespace eurocurate
