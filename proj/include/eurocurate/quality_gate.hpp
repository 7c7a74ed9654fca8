#pragma once

// Quality scores, tiers and threshold gates for web documents and parallel
// pairs.

#include <chrono>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "eurocurate/corpus_model.hpp"
#include "eurocurate/http_client.hpp"

namespace eurocurate {

/// Tier 1 below c1, tier 2 in [c1, c2), tier 3 from c2 up.
struct TierCutpoints {
    double c1 = 0.0;
    double c2 = 0.0;
};

void validate(const TierCutpoints& cut);

struct ParallelThresholds {
    double lex_default = 0.5;
    std::map<std::string, double> lex_overrides = {{"pt", 0.6}};
    double qe_min = 0.7;
};

std::vector<std::string> validate_thresholds(const ParallelThresholds& t);

/// Client for an external educational-quality scorer:
/// POST {"texts": [...]} -> {"scores": [...]}.
struct ScorerConfig {
    std::string url;
    std::size_t max_batch = 64;
    std::size_t parallelism = 1;
    RetryPolicy retry;
};

/// Sets edu_score on every document, preserving order. Batches larger than
/// max_batch are split; sub-batches run concurrently up to `parallelism`
/// and are matched back by index.
std::vector<Document> score_documents(std::vector<Document> docs, const ScorerConfig& scorer);

/// Scores a single batch of texts (no splitting).
std::vector<double> request_scores(const std::vector<std::string>& texts, const ScorerConfig& scorer);

/// Reads `id<TAB>score` lines.
std::unordered_map<std::string, double> load_score_table(const std::string& path);

int assign_tier(double score, const TierCutpoints& cut);

/// Cutpoints at empirical quantiles f1, f2: c = sorted[floor(f * n)], so
/// roughly a fraction f of the scores falls strictly below c.
TierCutpoints cutpoints_from_histogram(std::vector<double> scores, double f1, double f2);

inline constexpr const char* kLowEduScore = "low_edu_score";
inline constexpr const char* kLexScore = "lex";
inline constexpr const char* kQeScore = "qe";

/// English web gate: keep edu_score > 2.
FilterVerdict english_edu_gate(const Document& doc);

FilterVerdict gate_parallel(const ParallelPair& pair, const ParallelThresholds& thresholds);

/// value >= min_value.
inline bool threshold_gate(double value, double min_value) { return value >= min_value; }

}  // namespace eurocurate
