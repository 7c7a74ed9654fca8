#pragma once

// Backoff n-gram language model in ARPA format, perplexity scoring and the
// perplexity gate.

#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "eurocurate/corpus_model.hpp"

namespace eurocurate {

struct NgramEntry {
    double log10_prob = 0.0;
    /// Unused at the highest order.
    double backoff_log10 = 0.0;
    bool operator==(const NgramEntry&) const = default;
};

inline constexpr std::string_view kSentenceStart = "<s>";
inline constexpr std::string_view kSentenceEnd = "</s>";
inline constexpr std::string_view kUnknown = "<unk>";

/// Immutable after parse. N-grams are keyed by their tokens joined with a
/// single space.
class ArpaModel {
public:
    ArpaModel() = default;
    explicit ArpaModel(int max_order);

    int max_order() const { return static_cast<int>(entries_.size()); }
    const std::unordered_map<std::string, NgramEntry>& entries(int order) const { return entries_.at(order - 1); }
    const std::unordered_set<std::string>& vocab() const { return vocab_; }
    bool has_unknown() const { return vocab_.contains(std::string(kUnknown)); }
    bool has_sentence_start() const { return vocab_.contains(std::string(kSentenceStart)); }

    const NgramEntry* find(std::string_view key, int order) const;

    /// Adds an n-gram; its order is its token count.
    void add(const std::vector<std::string>& tokens, NgramEntry entry);

    /// Checks that every n-gram's (k-1)-prefix exists; throws ArpaError.
    void check_prefixes() const;

    bool operator==(const ArpaModel& other) const {
        return entries_ == other.entries_ && vocab_ == other.vocab_;
    }

private:
    std::vector<std::unordered_map<std::string, NgramEntry>> entries_;
    std::unordered_set<std::string> vocab_;
};

ArpaModel parse_arpa(std::string_view text);
ArpaModel load_arpa(const std::string& path);
/// Deterministic output: sections sorted by key, values in shortest round-trip form.
std::string write_arpa(const ArpaModel& model);

/// log10 P(word | context) by Katz backoff. Only the last max_order-1
/// context tokens are consulted. Throws PplError for an OOV word when the
/// model has no unknown token.
double log_prob(const ArpaModel& model, const std::vector<std::string>& context, const std::string& word);

/// 10^(-mean log10 P). `<s>` conditions the first token when the model
/// knows it; it is never scored, and no end marker is appended.
double perplexity(const ArpaModel& model, const std::vector<std::string>& tokens);

/// Lowercase, then split on whitespace.
std::vector<std::string> lm_tokenize(std::string_view text);

struct PplGate {
    std::string lang;
    double max_ppl = 0.0;
};

inline constexpr const char* kHighPpl = "high_ppl";
inline constexpr const char* kEmptyAfterTokenize = "empty_after_tokenize";

/// Annotates doc.ppl and rejects when ppl > max_ppl.
FilterVerdict ppl_gate(Document& doc, const ArpaModel& model, const PplGate& gate);

/// Nearest-rank percentile (pct in (0,1]) of a perplexity sample.
double percentile_threshold(std::vector<double> sample, double pct = 0.70);

}  // namespace eurocurate
