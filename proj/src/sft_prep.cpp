#include "eurocurate/sft_prep.hpp"

#include <algorithm>
#include <unordered_set>

#include "eurocurate/text.hpp"

namespace eurocurate {
namespace {

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

const ChatMessage* first_user(const ChatRecord& r) {
    for (const auto& m : r.messages) {
        if (m.role == "user") return &m;
    }
    return nullptr;
}

}  // namespace

ChatRecord parse_chat(std::string_view line) {
    const Json obj = parse_json_line(line);
    ChatRecord r;
    auto str = [&](const char* key, bool required) -> std::string {
        auto it = obj.find(key);
        if (it == obj.end() || it->is_null()) {
            if (required) throw SchemaError(key, "missing required field");
            return {};
        }
        if (!it->is_string()) throw SchemaError(key, "expected a string");
        return it->get<std::string>();
    };
    r.id = str("id", true);
    r.lang = str("lang", true);
    r.source = str("source", false);
    if (r.id.empty()) throw SchemaError("id", "must be non-empty");
    if (!is_valid_lang(r.lang)) throw SchemaError("lang", "must match [a-z]{2,3}");
    auto it = obj.find("messages");
    if (it == obj.end() || !it->is_array()) throw SchemaError("messages", "expected an array");
    for (const auto& m : *it) {
        if (!m.is_object() || !m.contains("role") || !m.contains("content") || !m["role"].is_string() ||
            !m["content"].is_string())
            throw SchemaError("messages", "each message needs string role and content");
        r.messages.push_back({m["role"].get<std::string>(), m["content"].get<std::string>()});
    }
    for (auto j = obj.begin(); j != obj.end(); ++j) {
        const auto& k = j.key();
        if (k != "id" && k != "lang" && k != "source" && k != "messages") r.extras[k] = j.value();
    }
    return r;
}

std::string write_chat(const ChatRecord& r) {
    Json msgs = Json::array();
    for (const auto& m : r.messages) msgs.push_back(Json{{"role", m.role}, {"content", m.content}});
    // Fixed key order: id, lang, source, messages, then extras.
    std::string out = "{\"id\":" + Json(r.id).dump() + ",\"lang\":" + Json(r.lang).dump();
    if (!r.source.empty()) out += ",\"source\":" + Json(r.source).dump();
    out += ",\"messages\":" + msgs.dump();
    for (auto j = r.extras.begin(); j != r.extras.end(); ++j) out += "," + Json(j.key()).dump() + ":" + j.value().dump();
    out += "}";
    return out;
}

ChatRecord make_chat_record(std::string id, std::string lang,
                            const std::vector<std::pair<std::string, std::string>>& exchanges, std::string system,
                            std::string source) {
    ChatRecord r;
    r.id = std::move(id);
    r.lang = std::move(lang);
    r.source = std::move(source);
    if (!system.empty()) r.messages.push_back({"system", std::move(system)});
    for (const auto& [q, a] : exchanges) {
        r.messages.push_back({"user", q});
        r.messages.push_back({"assistant", a});
    }
    return r;
}

std::string strip_traces(std::string_view text, const TraceMarkers& markers) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    bool removed_any = false;
    bool need_sep = false;
    while (pos < text.size()) {
        std::size_t best = std::string_view::npos;
        const std::pair<std::string, std::string>* pair = nullptr;
        for (const auto& m : markers) {
            if (m.first.empty()) continue;
            const auto at = text.find(m.first, pos);
            if (at < best) {
                best = at;
                pair = &m;
            }
        }
        if (!pair) break;
        const auto close = text.find(pair->second, best + pair->first.size());
        if (pair->second.empty() || close == std::string_view::npos) throw StripError(best);

        std::string_view before = text.substr(pos, best - pos);
        if (need_sep && !before.empty() && !is_ws(before.front())) out += ' ';
        out.append(before);
        while (!out.empty() && is_ws(out.back())) out.pop_back();
        need_sep = !out.empty();
        removed_any = true;

        pos = close + pair->second.size();
        while (pos < text.size() && is_ws(text[pos])) ++pos;
    }
    std::string_view rest = text.substr(std::min(pos, text.size()));
    if (need_sep && !rest.empty()) out += ' ';
    out.append(rest);
    if (!removed_any) return std::string(text);
    return out;
}

FilterVerdict validate_format(const ChatRecord& r) {
    if (r.messages.empty()) return FilterVerdict::reject("empty_messages");
    bool has_user = false;
    bool has_assistant = false;
    std::string expected = "user";
    for (std::size_t i = 0; i < r.messages.size(); ++i) {
        const auto& m = r.messages[i];
        if (m.role != "system" && m.role != "user" && m.role != "assistant")
            return FilterVerdict::reject("unknown_role");
        if (m.role == "system") {
            if (i != 0) return FilterVerdict::reject("misplaced_system");
        } else {
            if (m.role != expected) return FilterVerdict::reject("not_alternating");
            expected = expected == "user" ? "assistant" : "user";
            (m.role == "user" ? has_user : has_assistant) = true;
        }
        if (text::trim(m.content).empty()) return FilterVerdict::reject("empty_content");
    }
    if (!has_user) return FilterVerdict::reject("no_user");
    if (!has_assistant) return FilterVerdict::reject("no_assistant");
    if (r.messages.back().role != "assistant") return FilterVerdict::reject("ends_on_user");
    return FilterVerdict::accept();
}

DedupResult<ChatRecord> dedup_instructions(const std::vector<ChatRecord>& records) {
    std::unordered_set<std::string_view> ids;
    std::vector<DedupKey> keys;
    keys.reserve(records.size());
    DedupIndex index;
    for (const auto& r : records) {
        if (!ids.insert(r.id).second) throw DedupError("duplicate id '" + r.id + "'");
        const ChatMessage* u = first_user(r);
        if (!u) throw FormatError("record '" + r.id + "' has no user message");
        keys.push_back(normalized_key(u->content));
        index.add(keys.back(), r.id);
    }
    DedupResult<ChatRecord> out;
    out.manifest.stage = "sft_dedup";
    for (std::size_t i = 0; i < records.size(); ++i) {
        const std::string& owner = *index.owner(keys[i]);
        if (owner == records[i].id) {
            out.records.push_back(records[i]);
            out.manifest.accept();
        } else {
            out.links.emplace_back(owner, records[i].id);
            out.manifest.reject(kDuplicate);
        }
    }
    std::sort(out.links.begin(), out.links.end());
    return out;
}

std::vector<LanguageShare> language_report(const std::vector<ChatRecord>& records,
                                           const std::set<std::string>& exclude) {
    std::map<std::string, std::size_t> counts;
    std::size_t total = 0;
    for (const auto& r : records) {
        if (exclude.contains(r.lang)) continue;
        ++counts[r.lang];
        ++total;
    }
    if (total == 0) throw ReportError("no records to report on");
    std::vector<LanguageShare> out;
    for (const auto& [lang, n] : counts)
        out.push_back({lang, 100.0 * static_cast<double>(n) / static_cast<double>(total)});
    std::stable_sort(out.begin(), out.end(),
                     [](const LanguageShare& a, const LanguageShare& b) { return a.percent > b.percent; });
    return out;
}

}  // namespace eurocurate
