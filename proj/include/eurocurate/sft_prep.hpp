#pragma once

// Post-training data preparation: reasoning-trace stripping, format
// validation, instruction-level deduplication and language reports.

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "eurocurate/corpus_model.hpp"
#include "eurocurate/dedup.hpp"

namespace eurocurate {

struct ChatMessage {
    std::string role;
    std::string content;
    bool operator==(const ChatMessage&) const = default;
};

struct ChatRecord {
    std::string id;
    std::string lang;
    std::vector<ChatMessage> messages;
    std::string source;
    Json extras = Json::object();
    bool operator==(const ChatRecord&) const = default;
};

ChatRecord parse_chat(std::string_view line);
std::string write_chat(const ChatRecord& rec);

/// Builds a canonical record: optional system turn, then one user/assistant
/// exchange per pair.
ChatRecord make_chat_record(std::string id, std::string lang,
                            const std::vector<std::pair<std::string, std::string>>& exchanges,
                            std::string system = {}, std::string source = {});

using TraceMarkers = std::vector<std::pair<std::string, std::string>>;

inline TraceMarkers default_trace_markers() { return {{"<think>", "</think>"}}; }

/// Removes every open...close region (leftmost first, non-nested) with its
/// delimiters; the whitespace around a removed region collapses to one
/// space, or to nothing at either end of the text. Throws StripError on an
/// unmatched opener.
std::string strip_traces(std::string_view text, const TraceMarkers& markers);

/// Rejection reasons: empty_messages, unknown_role, misplaced_system,
/// not_alternating, empty_content, no_user, no_assistant, ends_on_user.
FilterVerdict validate_format(const ChatRecord& rec);

DedupResult<ChatRecord> dedup_instructions(const std::vector<ChatRecord>& records);

struct LanguageShare {
    std::string lang;
    double percent = 0.0;
};

/// Percent of records per language, descending then by code. Languages in
/// `exclude` are dropped before counting.
std::vector<LanguageShare> language_report(const std::vector<ChatRecord>& records,
                                           const std::set<std::string>& exclude = {});

}  // namespace eurocurate
