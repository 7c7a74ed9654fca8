#include "eurocurate/corpus_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "eurocurate/text.hpp"

namespace eurocurate {
namespace {

constexpr std::array<std::string_view, 9> kDocumentKeys = {
    "id", "source", "lang", "url", "text", "edu_score", "ppl", "tier", "token_count"};
constexpr std::array<std::string_view, 8> kPairKeys = {
    "id", "src_lang", "tgt_lang", "src_text", "tgt_text", "lex_score", "qe_score", "doc_id"};

template <std::size_t N>
bool is_known(const std::array<std::string_view, N>& keys, const std::string& k) {
    for (auto key : keys) {
        if (key == k) return true;
    }
    return false;
}

const Json* find(const Json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return nullptr;
    return &*it;
}

std::string required_string(const Json& obj, const char* key) {
    const Json* v = find(obj, key);
    if (!v) throw SchemaError(key, "missing required field");
    if (!v->is_string()) throw SchemaError(key, "expected a string");
    return v->get<std::string>();
}

std::optional<std::string> optional_string(const Json& obj, const char* key) {
    const Json* v = find(obj, key);
    if (!v) return std::nullopt;
    if (!v->is_string()) throw SchemaError(key, "expected a string");
    return v->get<std::string>();
}

std::optional<double> optional_number(const Json& obj, const char* key) {
    const Json* v = find(obj, key);
    if (!v) return std::nullopt;
    if (!v->is_number()) throw SchemaError(key, "expected a number");
    return v->get<double>();
}

std::optional<std::int64_t> optional_integer(const Json& obj, const char* key) {
    const Json* v = find(obj, key);
    if (!v) return std::nullopt;
    if (v->is_number_integer()) return v->get<std::int64_t>();
    if (v->is_number_float()) {
        const double d = v->get<double>();
        if (std::floor(d) == d && std::isfinite(d)) return static_cast<std::int64_t>(d);
    }
    throw SchemaError(key, "expected an integer");
}

template <std::size_t N>
Json collect_extras(const Json& obj, const std::array<std::string_view, N>& keys) {
    Json extras = Json::object();
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!is_known(keys, it.key())) extras[it.key()] = it.value();
    }
    return extras;
}

// Emits known keys in fixed order, then extras in key order.
void append_key(std::string& out, bool& first, std::string_view key, const Json& value) {
    out += first ? "{" : ",";
    first = false;
    out += Json(std::string(key)).dump();
    out += ':';
    out += value.dump(-1, ' ', false, Json::error_handler_t::strict);
}

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

std::uint64_t Manifest::rejected() const {
    std::uint64_t sum = 0;
    for (const auto& [_, n] : counts) sum += n;
    return sum;
}

bool is_valid_lang(std::string_view lang) {
    if (lang.size() < 2 || lang.size() > 3) return false;
    for (char c : lang) {
        if (c < 'a' || c > 'z') return false;
    }
    return true;
}

void validate(const Document& doc) {
    if (doc.id.empty()) throw SchemaError("id", "must be non-empty");
    if (!is_valid_lang(doc.lang)) throw SchemaError("lang", "must match [a-z]{2,3}, got '" + doc.lang + "'");
    if (doc.edu_score && !(*doc.edu_score >= 0.0 && *doc.edu_score <= 5.0))
        throw SchemaError("edu_score", "out of range [0,5]");
    if (doc.ppl && !(*doc.ppl > 0.0 && std::isfinite(*doc.ppl)))
        throw SchemaError("ppl", "must be a positive finite real");
    if (doc.tier && (*doc.tier < 1 || *doc.tier > 3)) throw SchemaError("tier", "must be 1, 2 or 3");
    if (doc.token_count && *doc.token_count < 0) throw SchemaError("token_count", "must be non-negative");
}

void validate(const ParallelPair& pair) {
    if (pair.id.empty()) throw SchemaError("id", "must be non-empty");
    if (!is_valid_lang(pair.src_lang)) throw SchemaError("src_lang", "must match [a-z]{2,3}");
    if (!is_valid_lang(pair.tgt_lang)) throw SchemaError("tgt_lang", "must match [a-z]{2,3}");
    if (text::trim(pair.src_text).empty()) throw SchemaError("src_text", "empty after trim");
    if (text::trim(pair.tgt_text).empty()) throw SchemaError("tgt_text", "empty after trim");
    if (pair.lex_score && !in_unit(*pair.lex_score)) throw SchemaError("lex_score", "out of range [0,1]");
    if (pair.qe_score && !in_unit(*pair.qe_score)) throw SchemaError("qe_score", "out of range [0,1]");
}

Json parse_json_line(std::string_view line) {
    Json obj;
    try {
        obj = Json::parse(line.begin(), line.end());
    } catch (const Json::parse_error& e) {
        throw ParseError(e.what(), e.byte);
    }
    if (!obj.is_object()) throw ParseError("record is not an object", 0);
    return obj;
}

Document parse_record(std::string_view line) {
    const Json obj = parse_json_line(line);
    Document d;
    d.id = required_string(obj, "id");
    d.text = required_string(obj, "text");
    d.lang = required_string(obj, "lang");
    d.source = optional_string(obj, "source").value_or("");
    d.url = optional_string(obj, "url");
    d.edu_score = optional_number(obj, "edu_score");
    d.ppl = optional_number(obj, "ppl");
    if (auto t = optional_integer(obj, "tier")) d.tier = static_cast<int>(*t);
    d.token_count = optional_integer(obj, "token_count");
    d.extras = collect_extras(obj, kDocumentKeys);
    validate(d);
    return d;
}

std::string write_record(const Document& d) {
    validate(d);
    std::string out;
    out.reserve(d.text.size() + 128);
    bool first = true;
    append_key(out, first, "id", d.id);
    append_key(out, first, "source", d.source);
    append_key(out, first, "lang", d.lang);
    if (d.url) append_key(out, first, "url", *d.url);
    append_key(out, first, "text", d.text);
    if (d.edu_score) append_key(out, first, "edu_score", *d.edu_score);
    if (d.ppl) append_key(out, first, "ppl", *d.ppl);
    if (d.tier) append_key(out, first, "tier", *d.tier);
    if (d.token_count) append_key(out, first, "token_count", *d.token_count);
    for (auto it = d.extras.begin(); it != d.extras.end(); ++it) {
        if (!is_known(kDocumentKeys, it.key())) append_key(out, first, it.key(), it.value());
    }
    out += '}';
    return out;
}

ParallelPair parse_pair(std::string_view line) {
    const Json obj = parse_json_line(line);
    ParallelPair p;
    p.id = required_string(obj, "id");
    p.src_lang = required_string(obj, "src_lang");
    p.tgt_lang = required_string(obj, "tgt_lang");
    p.src_text = required_string(obj, "src_text");
    p.tgt_text = required_string(obj, "tgt_text");
    p.lex_score = optional_number(obj, "lex_score");
    p.qe_score = optional_number(obj, "qe_score");
    p.doc_id = optional_string(obj, "doc_id");
    p.extras = collect_extras(obj, kPairKeys);
    validate(p);
    return p;
}

std::string write_pair(const ParallelPair& p) {
    validate(p);
    std::string out;
    bool first = true;
    append_key(out, first, "id", p.id);
    append_key(out, first, "src_lang", p.src_lang);
    append_key(out, first, "tgt_lang", p.tgt_lang);
    append_key(out, first, "src_text", p.src_text);
    append_key(out, first, "tgt_text", p.tgt_text);
    if (p.lex_score) append_key(out, first, "lex_score", *p.lex_score);
    if (p.qe_score) append_key(out, first, "qe_score", *p.qe_score);
    if (p.doc_id) append_key(out, first, "doc_id", *p.doc_id);
    for (auto it = p.extras.begin(); it != p.extras.end(); ++it) {
        if (!is_known(kPairKeys, it.key())) append_key(out, first, it.key(), it.value());
    }
    out += '}';
    return out;
}

Manifest merge_manifests(const Manifest& a, const Manifest& b) {
    // The empty manifest (no stage yet) is the identity.
    auto empty = [](const Manifest& m) {
        return m.stage.empty() && m.counts.empty() && m.input_records == 0 && m.output_records == 0 &&
               m.details.empty() && m.notes.empty();
    };
    if (empty(a)) return b;
    if (empty(b)) return a;
    if (a.stage != b.stage) throw MergeError("cannot merge manifests of stages '" + a.stage + "' and '" + b.stage + "'");
    Manifest out = a;
    for (const auto& [k, n] : b.counts) out.counts[k] += n;
    for (const auto& [k, n] : b.details) out.details[k] += n;
    out.input_records += b.input_records;
    out.output_records += b.output_records;
    out.notes.insert(out.notes.end(), b.notes.begin(), b.notes.end());
    std::sort(out.notes.begin(), out.notes.end());
    return out;
}

Json manifest_to_json(const Manifest& m) {
    Json j = Json::object();
    j["stage"] = m.stage;
    j["input_records"] = m.input_records;
    j["output_records"] = m.output_records;
    j["counts"] = Json(m.counts);
    if (!m.details.empty()) j["details"] = Json(m.details);
    if (!m.notes.empty()) j["notes"] = m.notes;
    return j;
}

Manifest manifest_from_json(const Json& j) {
    Manifest m;
    m.stage = j.at("stage").get<std::string>();
    m.input_records = j.at("input_records").get<std::uint64_t>();
    m.output_records = j.at("output_records").get<std::uint64_t>();
    m.counts = j.at("counts").get<std::map<std::string, std::uint64_t>>();
    if (j.contains("details")) m.details = j["details"].get<std::map<std::string, std::uint64_t>>();
    if (j.contains("notes")) m.notes = j["notes"].get<std::vector<std::string>>();
    return m;
}

std::int64_t token_count_of(const Document& doc) {
    if (doc.token_count) return *doc.token_count;
    return static_cast<std::int64_t>(text::count_whitespace_tokens(doc.text));
}

}  // namespace eurocurate
