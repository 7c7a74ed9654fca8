#include "eurocurate/eval_protocol.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "eurocurate/text.hpp"

namespace eurocurate {
namespace {

// Line breaks and trailing spaces are part of the prompt.
constexpr std::string_view kDefaultPrompt =
    "You are an evaluator. Your task is to determine \n"
    "whether the GENERATED ANSWER is equivalent in \n"
    "meaning to the GROUND TRUTH answer, given the \n"
    "QUESTION.\n"
    "Respond only with \"Answer: True\" if the GENERATED \n"
    "ANSWER and GROUND TRUTH convey the same meaning, \n"
    "and \"Answer: False\" otherwise. \n"
    "Do not provide explanations.\n"
    "\n"
    "QUESTION: \n"
    "{input}\n"
    "\n"
    "GENERATED ANSWER: \n"
    "{generated_output}\n"
    "\n"
    "GROUND TRUTH: \n"
    "{ground_truth}";

constexpr std::string_view kIFEvalPrompt =
    "You are an evaluator. Your task is to determine \n"
    "whether the GENERATED ANSWER fully complies \n"
    "with the given INSTRUCTION.\n"
    "Respond only with \"Answer: True\" if the GENERATED\n"
    "ANSWER strictly follows the INSTRUCTION, and \n"
    "\"Answer: False\" otherwise. \n"
    "Do not provide explanations.\n"
    "\n"
    "INSTRUCTION:\n"
    "{input}\n"
    "\n"
    "GENERATED ANSWER:\n"
    "{generated_output}";

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(c >= 'A' && c <= 'Z' ? c + 32 : c);
    return out;
}

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_alnum(char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           static_cast<unsigned char>(c) >= 0x80;
}

std::string_view strip_answer_token(std::string_view t) {
    constexpr std::string_view kMarkup = "*_()[]{}`'\".,;:!?$<>";
    bool changed = true;
    while (changed && !t.empty()) {
        changed = false;
        if (t.starts_with("\\boxed{")) {
            t.remove_prefix(7);
            changed = true;
        }
        if (t.starts_with("\\textbf{")) {
            t.remove_prefix(8);
            changed = true;
        }
        while (!t.empty() && kMarkup.find(t.front()) != std::string_view::npos) {
            t.remove_prefix(1);
            changed = true;
        }
        while (!t.empty() && kMarkup.find(t.back()) != std::string_view::npos) {
            t.remove_suffix(1);
            changed = true;
        }
    }
    return t;
}

const char* kind_name(PromptKind k) { return k == PromptKind::IFEval ? "ifeval" : "default"; }

PromptKind kind_from(const std::string& s) {
    if (s == "default") return PromptKind::Default;
    if (s == "ifeval") return PromptKind::IFEval;
    throw SchemaError("kind", "expected 'default' or 'ifeval'");
}

}  // namespace

const PromptTemplate& prompt_template(PromptKind kind) {
    static const PromptTemplate def{PromptKind::Default, std::string(kDefaultPrompt),
                                    {"input", "generated_output", "ground_truth"}};
    static const PromptTemplate ifeval{PromptKind::IFEval, std::string(kIFEvalPrompt),
                                       {"input", "generated_output"}};
    return kind == PromptKind::IFEval ? ifeval : def;
}

std::string render_prompt(const PromptTemplate& t, const std::map<std::string, std::string>& fields) {
    for (const auto& p : t.placeholders) {
        if (!fields.contains(p)) throw TemplateError("missing field '" + p + "'");
    }
    for (const auto& [k, _] : fields) {
        if (std::find(t.placeholders.begin(), t.placeholders.end(), k) == t.placeholders.end())
            throw TemplateError("template has no placeholder '" + k + "'");
    }
    std::string out;
    out.reserve(t.text.size() + 256);
    std::map<std::string, int> used;
    std::size_t pos = 0;
    while (pos < t.text.size()) {
        const auto open = t.text.find('{', pos);
        if (open == std::string::npos) break;
        const auto close = t.text.find('}', open);
        if (close == std::string::npos) break;
        const std::string name = t.text.substr(open + 1, close - open - 1);
        auto it = fields.find(name);
        if (it == fields.end()) {
            out.append(t.text, pos, open + 1 - pos);
            pos = open + 1;
            continue;
        }
        out.append(t.text, pos, open - pos);
        out += it->second;
        ++used[name];
        pos = close + 1;
    }
    out.append(t.text, std::min(pos, t.text.size()));
    for (const auto& p : t.placeholders) {
        if (used[p] != 1) throw TemplateError("placeholder '" + p + "' must occur exactly once");
    }
    return out;
}

bool parse_verdict(std::string_view judge_output) {
    const std::string lowered = ascii_lower(judge_output);
    const auto at = lowered.rfind("answer:");
    if (at == std::string::npos) throw VerdictError("no 'Answer:' in judge output");
    std::size_t i = at + 7;
    while (i < lowered.size() && (is_ws(lowered[i]) || lowered[i] == '*')) ++i;
    auto word_at = [&](std::string_view w) {
        return lowered.compare(i, w.size(), w) == 0 &&
               (i + w.size() == lowered.size() || !is_alnum(lowered[i + w.size()]));
    };
    if (word_at("true")) return true;
    if (word_at("false")) return false;
    throw VerdictError("'Answer:' is not followed by True or False");
}

double aggregate(const std::map<std::string, bool>& per_judge) {
    if (per_judge.empty()) throw AggregateError("no judge verdicts");
    std::size_t yes = 0;
    for (const auto& [_, v] : per_judge) yes += v ? 1 : 0;
    return static_cast<double>(yes) / static_cast<double>(per_judge.size());
}

std::optional<std::string> regex_extract(std::string_view text) {
    const std::string lowered = ascii_lower(text);
    constexpr std::string_view kCue = "the answer is";
    auto at = lowered.rfind(kCue);
    while (at != std::string::npos) {
        std::size_t i = at + kCue.size();
        while (i < text.size() && (is_ws(text[i]) || text[i] == ':' || text[i] == '*' || text[i] == '_')) ++i;
        std::size_t j = i;
        while (j < text.size() && !is_ws(text[j])) ++j;
        const auto token = strip_answer_token(text.substr(i, j - i));
        if (!token.empty()) return std::string(token);
        if (at == 0) break;
        at = lowered.rfind(kCue, at - 1);
    }
    return std::nullopt;
}

bool regex_verdict(std::string_view generated, std::string_view ground_truth) {
    const auto got = regex_extract(generated);
    if (!got) return false;
    return ascii_lower(text::trim(*got)) == ascii_lower(strip_answer_token(text::trim(ground_truth)));
}

double accuracy(std::span<const double> scores) {
    if (scores.empty()) throw AggregateError("accuracy of an empty score list");
    double sum = 0.0;
    for (double s : scores) sum += s;
    return sum / static_cast<double>(scores.size());
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw CorrelationError("length mismatch");
    if (x.size() < 2) throw CorrelationError("need at least two points");
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw CorrelationError("zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

JudgmentRecord parse_judgment(std::string_view line) {
    const Json obj = parse_json_line(line);
    auto str = [&](const char* key) {
        auto it = obj.find(key);
        if (it == obj.end() || !it->is_string()) throw SchemaError(key, "expected a string");
        return it->get<std::string>();
    };
    JudgmentRecord r;
    r.item_id = str("item_id");
    r.question = str("question");
    r.generated = str("generated");
    if (obj.contains("kind")) r.kind = kind_from(str("kind"));
    if (r.kind == PromptKind::Default) r.ground_truth = str("ground_truth");
    else if (obj.contains("ground_truth") && obj["ground_truth"].is_string())
        r.ground_truth = obj["ground_truth"].get<std::string>();
    if (obj.contains("per_judge")) {
        if (!obj["per_judge"].is_object()) throw SchemaError("per_judge", "expected an object");
        r.per_judge = obj["per_judge"].get<std::map<std::string, bool>>();
    }
    if (obj.contains("regex_verdict") && !obj["regex_verdict"].is_null())
        r.regex_verdict = obj["regex_verdict"].get<bool>();
    if (obj.contains("human_verdict") && !obj["human_verdict"].is_null())
        r.human_verdict = obj["human_verdict"].get<bool>();
    return r;
}

std::string write_judgment(const JudgmentRecord& r) {
    Json j = Json::object();
    j["item_id"] = r.item_id;
    j["kind"] = kind_name(r.kind);
    j["question"] = r.question;
    j["generated"] = r.generated;
    j["ground_truth"] = r.ground_truth;
    j["per_judge"] = Json(r.per_judge);
    if (!r.per_judge.empty()) j["score"] = aggregate(r.per_judge);
    if (r.regex_verdict) j["regex_verdict"] = *r.regex_verdict;
    if (r.human_verdict) j["human_verdict"] = *r.human_verdict;
    return j.dump();
}

std::string judge_request(const JudgeEndpoint& endpoint, const std::string& prompt) {
    const Json body = {{"model", endpoint.model},
                       {"messages", Json::array({Json{{"role", "user"}, {"content", prompt}}})},
                       {"temperature", 0}};
    std::optional<std::string> token;
    if (!endpoint.auth_env.empty()) {
        if (const char* v = std::getenv(endpoint.auth_env.c_str())) token = v;
    }
    const auto res = post_json(endpoint.url, body.dump(), endpoint.retry, token);
    if (!res) throw JudgeUnavailable("judge '" + endpoint.name + "' unreachable at " + endpoint.url);
    if (res->status != 200)
        throw JudgeUnavailable("judge '" + endpoint.name + "' returned HTTP " + std::to_string(res->status));
    try {
        const Json reply = Json::parse(res->body);
        const auto& content = reply.at("choices").at(0).at("message").at("content");
        if (!content.is_string() || content.get<std::string>().empty())
            throw JudgeProtocolError("judge '" + endpoint.name + "' returned empty content");
        return content.get<std::string>();
    } catch (const Json::exception& e) {
        throw JudgeProtocolError("judge '" + endpoint.name + "' reply malformed: " + e.what());
    }
}

void judge_items(std::vector<JudgmentRecord>& items, const std::vector<JudgeEndpoint>& judges,
                 std::size_t parallelism) {
    if (judges.empty()) throw ConfigError("no judge endpoints configured");
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;

    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= items.size()) return;
            {
                std::lock_guard lock(failure_mu);
                if (failure) return;
            }
            try {
                auto& item = items[i];
                std::map<std::string, std::string> fields = {{"input", item.question},
                                                             {"generated_output", item.generated}};
                if (item.kind == PromptKind::Default) fields["ground_truth"] = item.ground_truth;
                const std::string prompt = render_prompt(prompt_template(item.kind), fields);
                for (const auto& j : judges) item.per_judge[j.name] = parse_verdict(judge_request(j, prompt));
                if (item.kind == PromptKind::Default) item.regex_verdict = regex_verdict(item.generated, item.ground_truth);
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const std::size_t n = std::clamp<std::size_t>(parallelism, 1, std::max<std::size_t>(1, items.size()));
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

EvalSummary summarize(const std::vector<JudgmentRecord>& items) {
    EvalSummary s;
    s.items = items.size();
    std::vector<double> judge, regex, human;
    bool all_regex = true, all_human = true;
    for (const auto& it : items) {
        judge.push_back(aggregate(it.per_judge));
        if (it.regex_verdict) regex.push_back(*it.regex_verdict ? 1.0 : 0.0);
        else all_regex = false;
        if (it.human_verdict) human.push_back(*it.human_verdict ? 1.0 : 0.0);
        else all_human = false;
    }
    s.judge_accuracy = accuracy(judge);
    if (!regex.empty()) s.regex_accuracy = accuracy(regex);
    if (!human.empty()) s.human_accuracy = accuracy(human);
    auto corr = [](const std::vector<double>& a, const std::vector<double>& b) -> std::optional<double> {
        try {
            return pearson(a, b);
        } catch (const CorrelationError&) {
            return std::nullopt;
        }
    };
    if (all_human && !items.empty()) {
        s.judge_human_r = corr(judge, human);
        if (all_regex) s.regex_human_r = corr(regex, human);
    }
    return s;
}

std::string summary_csv(const EvalSummary& s, bool percent_correlations) {
    const double scale = percent_correlations ? 100.0 : 1.0;
    std::string out = "metric,value\n";
    out += "items," + std::to_string(s.items) + "\n";
    out += "judge_accuracy," + text::format_double(s.judge_accuracy) + "\n";
    if (s.regex_accuracy) out += "regex_accuracy," + text::format_double(*s.regex_accuracy) + "\n";
    if (s.human_accuracy) out += "human_accuracy," + text::format_double(*s.human_accuracy) + "\n";
    if (s.judge_human_r) out += "judge_human_pearson," + text::format_double(*s.judge_human_r * scale) + "\n";
    if (s.regex_human_r) out += "regex_human_pearson," + text::format_double(*s.regex_human_r * scale) + "\n";
    return out;
}

}  // namespace eurocurate
