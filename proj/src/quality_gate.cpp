#include "eurocurate/quality_gate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>

#include "eurocurate/text.hpp"

namespace eurocurate {
namespace {

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

double lex_threshold_for(const std::string& lang, const ParallelThresholds& t) {
    auto it = t.lex_overrides.find(lang);
    return it == t.lex_overrides.end() ? t.lex_default : it->second;
}

}  // namespace

void validate(const TierCutpoints& cut) {
    if (!(0.0 <= cut.c1 && cut.c1 < cut.c2 && cut.c2 <= 5.0))
        throw RangeError("tier cutpoints must satisfy 0 <= c1 < c2 <= 5");
}

std::vector<std::string> validate_thresholds(const ParallelThresholds& t) {
    std::vector<std::string> v;
    if (!in_unit(t.lex_default)) v.emplace_back("lex_default");
    if (!in_unit(t.qe_min)) v.emplace_back("qe_min");
    for (const auto& [lang, x] : t.lex_overrides) {
        if (!in_unit(x)) v.push_back("lex_overrides." + lang);
    }
    return v;
}

std::vector<double> request_scores(const std::vector<std::string>& texts, const ScorerConfig& scorer) {
    const Json body = {{"texts", texts}};
    const auto res = post_json(scorer.url, body.dump(), scorer.retry);
    if (!res) throw ScorerUnavailable("scorer unreachable at " + scorer.url);
    if (res->status != 200)
        throw ScorerUnavailable("scorer returned HTTP " + std::to_string(res->status) + " from " + scorer.url);
    Json reply;
    try {
        reply = Json::parse(res->body);
    } catch (const Json::exception& e) {
        throw ScorerProtocolError(std::string("scorer reply is not JSON: ") + e.what());
    }
    if (!reply.is_object() || !reply.contains("scores") || !reply["scores"].is_array())
        throw ScorerProtocolError("scorer reply lacks a 'scores' array");
    const auto& arr = reply["scores"];
    if (arr.size() != texts.size())
        throw ScorerProtocolError("scorer returned " + std::to_string(arr.size()) + " scores for " +
                                  std::to_string(texts.size()) + " texts");
    std::vector<double> out;
    out.reserve(arr.size());
    for (const auto& v : arr) {
        if (!v.is_number()) throw ScorerProtocolError("non-numeric score");
        const double s = v.get<double>();
        if (!(s >= 0.0 && s <= 5.0)) throw ScorerProtocolError("score out of range [0,5]: " + text::format_double(s));
        out.push_back(s);
    }
    return out;
}

std::vector<Document> score_documents(std::vector<Document> docs, const ScorerConfig& scorer) {
    if (scorer.max_batch == 0) throw ConfigError("scorer max_batch must be positive");
    const std::size_t n_batches = (docs.size() + scorer.max_batch - 1) / scorer.max_batch;
    std::vector<std::vector<double>> results(n_batches);

    auto run = [&](std::size_t b) {
        const std::size_t begin = b * scorer.max_batch;
        const std::size_t end = std::min(docs.size(), begin + scorer.max_batch);
        std::vector<std::string> texts;
        texts.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i) texts.push_back(docs[i].text);
        return request_scores(texts, scorer);
    };

    const std::size_t width = std::max<std::size_t>(1, scorer.parallelism);
    for (std::size_t start = 0; start < n_batches; start += width) {
        std::vector<std::future<std::vector<double>>> inflight;
        const std::size_t stop = std::min(n_batches, start + width);
        for (std::size_t b = start; b < stop; ++b) inflight.push_back(std::async(std::launch::async, run, b));
        for (std::size_t b = start; b < stop; ++b) results[b] = inflight[b - start].get();
    }
    for (std::size_t b = 0; b < n_batches; ++b) {
        for (std::size_t k = 0; k < results[b].size(); ++k) docs[b * scorer.max_batch + k].edu_score = results[b][k];
    }
    return docs;
}

std::unordered_map<std::string, double> load_score_table(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open score table " + path);
    std::unordered_map<std::string, double> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError("score table line " + std::to_string(line_no) + " lacks a tab", 0);
        try {
            out[line.substr(0, tab)] = std::stod(line.substr(tab + 1));
        } catch (const std::exception&) {
            throw ParseError("score table line " + std::to_string(line_no) + " has a bad score", tab + 1);
        }
    }
    return out;
}

int assign_tier(double score, const TierCutpoints& cut) {
    if (!(score >= 0.0 && score <= 5.0)) throw RangeError("score out of range [0,5]");
    if (score < cut.c1) return 1;
    if (score < cut.c2) return 2;
    return 3;
}

TierCutpoints cutpoints_from_histogram(std::vector<double> scores, double f1, double f2) {
    if (scores.empty()) throw RangeError("no scores");
    if (!(0.0 < f1 && f1 < f2 && f2 < 1.0)) throw RangeError("fractions must satisfy 0 < f1 < f2 < 1");
    std::sort(scores.begin(), scores.end());
    std::vector<double> distinct = scores;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 3) throw RangeError("need at least 3 distinct scores for tier cutpoints");

    const auto n = static_cast<double>(scores.size());
    auto at = [&](double f) {
        auto idx = static_cast<std::size_t>(std::floor(f * n + 1e-9));
        return scores[std::min(idx, scores.size() - 1)];
    };
    TierCutpoints cut{at(f1), at(f2)};
    if (cut.c2 <= cut.c1) {
        auto next = std::upper_bound(distinct.begin(), distinct.end(), cut.c1);
        if (next == distinct.end()) throw RangeError("cannot separate tier cutpoints");
        cut.c2 = *next;
    }
    return cut;
}

FilterVerdict english_edu_gate(const Document& doc) {
    if (!doc.edu_score) throw GateError("document '" + doc.id + "' has no edu_score");
    return *doc.edu_score > 2.0 ? FilterVerdict::accept() : FilterVerdict::reject(kLowEduScore);
}

FilterVerdict gate_parallel(const ParallelPair& pair, const ParallelThresholds& t) {
    if (!pair.lex_score) throw GateError("pair '" + pair.id + "' has no lex_score");
    if (!pair.qe_score) throw GateError("pair '" + pair.id + "' has no qe_score");
    double lex_min;
    if (pair.src_lang == "en")
        lex_min = lex_threshold_for(pair.tgt_lang, t);
    else if (pair.tgt_lang == "en")
        lex_min = lex_threshold_for(pair.src_lang, t);
    else
        lex_min = std::max(lex_threshold_for(pair.src_lang, t), lex_threshold_for(pair.tgt_lang, t));
    if (!threshold_gate(*pair.lex_score, lex_min)) return FilterVerdict::reject(kLexScore);
    if (!threshold_gate(*pair.qe_score, t.qe_min)) return FilterVerdict::reject(kQeScore);
    return FilterVerdict::accept();
}

}  // namespace eurocurate
