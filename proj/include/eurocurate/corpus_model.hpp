#pragma once

// Canonical record types and their line-delimited JSON serialization.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "eurocurate/errors.hpp"

namespace eurocurate {

using Json = nlohmann::json;

/// One web-corpus record.
struct Document {
    std::string id;
    std::string source;
    std::string lang;
    std::optional<std::string> url;
    std::string text;
    std::optional<double> edu_score;
    std::optional<double> ppl;
    std::optional<int> tier;
    std::optional<std::int64_t> token_count;
    /// Unknown keys, preserved verbatim.
    Json extras = Json::object();

    bool operator==(const Document&) const = default;
};

struct ParallelPair {
    std::string id;
    std::string src_lang;
    std::string tgt_lang;
    std::string src_text;
    std::string tgt_text;
    std::optional<double> lex_score;
    std::optional<double> qe_score;
    std::optional<std::string> doc_id;
    Json extras = Json::object();

    bool operator==(const ParallelPair&) const = default;
};

/// Per-stage accounting. `counts` holds rejection reasons only, so
/// input_records == output_records + sum(counts) for every stage.
/// `details` carries sub-record statistics (e.g. removed paragraphs) and
/// `notes` free-form events; neither enters the balance.
struct Manifest {
    std::string stage;
    std::map<std::string, std::uint64_t> counts;
    std::uint64_t input_records = 0;
    std::uint64_t output_records = 0;
    std::map<std::string, std::uint64_t> details;
    std::vector<std::string> notes;

    std::uint64_t rejected() const;
    bool balanced() const { return input_records == output_records + rejected(); }
    void reject(const std::string& reason, std::uint64_t n = 1) {
        counts[reason] += n;
        input_records += n;
    }
    void accept(std::uint64_t n = 1) {
        input_records += n;
        output_records += n;
    }

    bool operator==(const Manifest&) const = default;
};

/// Accept, or Reject carrying the first failing rule.
struct FilterVerdict {
    bool accepted = true;
    std::string reason;

    static FilterVerdict accept() { return {true, {}}; }
    static FilterVerdict reject(std::string why) { return {false, std::move(why)}; }
    explicit operator bool() const { return accepted; }
    bool operator==(const FilterVerdict&) const = default;
};

bool is_valid_lang(std::string_view lang);

/// Throws SchemaError naming the first violated field.
void validate(const Document& doc);
void validate(const ParallelPair& pair);

Document parse_record(std::string_view line);
std::string write_record(const Document& doc);

ParallelPair parse_pair(std::string_view line);
std::string write_pair(const ParallelPair& pair);

Manifest merge_manifests(const Manifest& a, const Manifest& b);
Json manifest_to_json(const Manifest& m);
Manifest manifest_from_json(const Json& j);

/// Parses a JSON object line, mapping syntax errors to ParseError.
Json parse_json_line(std::string_view line);

/// Stored token_count, or the whitespace token count of the text.
std::int64_t token_count_of(const Document& doc);

}  // namespace eurocurate
