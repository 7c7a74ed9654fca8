#pragma once

// Judge prompts, verdict parsing, aggregation, regex answer extraction and
// agreement statistics for the LLM-as-a-judge protocol.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eurocurate/corpus_model.hpp"
#include "eurocurate/http_client.hpp"

namespace eurocurate {

enum class PromptKind { Default, IFEval };

struct PromptTemplate {
    PromptKind kind = PromptKind::Default;
    std::string text;
    std::vector<std::string> placeholders;
};

/// The assessment prompts, verbatim (trailing spaces included).
const PromptTemplate& prompt_template(PromptKind kind);

/// Single left-to-right pass; substituted values are never re-scanned.
/// `fields` must supply exactly the template's placeholders.
std::string render_prompt(const PromptTemplate& t, const std::map<std::string, std::string>& fields);

/// Verdict after the last `Answer:`; throws VerdictError otherwise.
bool parse_verdict(std::string_view judge_output);

/// Mean of the verdicts as 0/1.
double aggregate(const std::map<std::string, bool>& per_judge);

/// Token after the last "the answer is", stripped of markup and punctuation.
std::optional<std::string> regex_extract(std::string_view text);

/// Regex baseline verdict: extracted answer equals the ground truth after
/// trimming and case folding.
bool regex_verdict(std::string_view generated, std::string_view ground_truth);

double accuracy(std::span<const double> scores);

double pearson(std::span<const double> x, std::span<const double> y);

struct JudgmentRecord {
    std::string item_id;
    PromptKind kind = PromptKind::Default;
    std::string question;
    std::string generated;
    std::string ground_truth;
    std::map<std::string, bool> per_judge;
    std::optional<bool> regex_verdict;
    std::optional<bool> human_verdict;
};

JudgmentRecord parse_judgment(std::string_view line);
std::string write_judgment(const JudgmentRecord& r);

struct JudgeEndpoint {
    std::string name;
    std::string url;
    std::string model;
    /// Environment variable holding the bearer token; empty for none.
    std::string auth_env;
    RetryPolicy retry;
};

/// POST {model, messages:[{role:user, content}], temperature: 0}; returns
/// choices[0].message.content.
std::string judge_request(const JudgeEndpoint& endpoint, const std::string& prompt);

struct EvalSummary {
    std::size_t items = 0;
    double judge_accuracy = 0.0;
    std::optional<double> regex_accuracy;
    std::optional<double> human_accuracy;
    std::optional<double> judge_human_r;
    std::optional<double> regex_human_r;
};

/// Renders, queries every judge, parses and fills per_judge and
/// regex_verdict. Items run concurrently up to `parallelism`; results are
/// written back by position.
void judge_items(std::vector<JudgmentRecord>& items, const std::vector<JudgeEndpoint>& judges,
                 std::size_t parallelism);

EvalSummary summarize(const std::vector<JudgmentRecord>& items);

/// Comma-separated `metric,value` lines; correlations optionally x100.
std::string summary_csv(const EvalSummary& s, bool percent_correlations);

}  // namespace eurocurate
