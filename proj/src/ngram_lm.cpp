#include "eurocurate/ngram_lm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "eurocurate/text.hpp"

namespace eurocurate {
namespace {

std::string join(const std::vector<std::string>& toks, std::size_t begin, std::size_t end) {
    std::string out;
    for (std::size_t i = begin; i < end; ++i) {
        if (i > begin) out += ' ';
        out += toks[i];
    }
    return out;
}

bool parse_double(std::string_view s, double& out) {
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace

ArpaModel::ArpaModel(int max_order) : entries_(static_cast<std::size_t>(max_order)) {}

const NgramEntry* ArpaModel::find(std::string_view key, int order) const {
    if (order < 1 || order > max_order()) return nullptr;
    const auto& m = entries_[order - 1];
    auto it = m.find(std::string(key));
    return it == m.end() ? nullptr : &it->second;
}

void ArpaModel::add(const std::vector<std::string>& tokens, NgramEntry entry) {
    const auto order = static_cast<int>(tokens.size());
    if (order < 1) throw ArpaError(0, "empty n-gram");
    if (order > max_order()) entries_.resize(order);
    if (order == 1) vocab_.insert(tokens[0]);
    entries_[order - 1][join(tokens, 0, tokens.size())] = entry;
}

void ArpaModel::check_prefixes() const {
    for (int k = 2; k <= max_order(); ++k) {
        for (const auto& [key, _] : entries_[k - 1]) {
            const auto prefix = key.substr(0, key.rfind(' '));
            if (!entries_[k - 2].contains(prefix))
                throw ArpaError(0, "n-gram '" + key + "' lacks its prefix at order " + std::to_string(k - 1));
        }
    }
}

ArpaModel parse_arpa(std::string_view text) {
    enum class State { Preamble, Data, Section, End };
    State state = State::Preamble;
    std::map<int, std::size_t> declared;
    std::vector<std::size_t> found;
    int order = 0;
    int max_order = 0;
    ArpaModel model;

    std::size_t line_no = 0;
    for (auto raw : text::split(text, '\n')) {
        ++line_no;
        std::string_view line = raw;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        const auto trimmed = text::trim(line);
        if (state == State::End) {
            if (!trimmed.empty()) throw ArpaError(line_no, "content after \\end\\");
            continue;
        }
        if (trimmed.empty()) continue;

        if (trimmed == "\\data\\") {
            if (state != State::Preamble) throw ArpaError(line_no, "duplicate \\data\\");
            state = State::Data;
            continue;
        }
        if (state == State::Preamble) continue;  // free text before \data\ is allowed

        if (trimmed == "\\end\\") {
            state = State::End;
            continue;
        }
        if (trimmed.front() == '\\') {
            // \k-grams:
            int k = 0;
            const auto dash = trimmed.find("-grams:");
            if (dash == std::string_view::npos ||
                std::from_chars(trimmed.data() + 1, trimmed.data() + dash, k).ec != std::errc() || k < 1 ||
                k > max_order)
                throw ArpaError(line_no, "bad section header '" + std::string(trimmed) + "'");
            if (k != order + 1) throw ArpaError(line_no, "sections out of order");
            order = k;
            state = State::Section;
            continue;
        }
        if (state == State::Data) {
            // ngram k=N
            if (trimmed.rfind("ngram ", 0) != 0) throw ArpaError(line_no, "expected 'ngram k=N'");
            const auto body = text::trim(trimmed.substr(6));
            const auto eq = body.find('=');
            int k = 0;
            std::size_t n = 0;
            if (eq == std::string_view::npos ||
                std::from_chars(body.data(), body.data() + eq, k).ec != std::errc() ||
                std::from_chars(body.data() + eq + 1, body.data() + body.size(), n).ec != std::errc() || k < 1)
                throw ArpaError(line_no, "bad count line '" + std::string(trimmed) + "'");
            if (k != max_order + 1) throw ArpaError(line_no, "ngram counts out of order");
            declared[k] = n;
            max_order = k;
            model = ArpaModel(max_order);
            found.assign(max_order, 0);
            continue;
        }

        // n-gram body line: logprob<TAB>w1 ... wk[<TAB>backoff]
        const auto fields = text::split_whitespace(trimmed);
        const auto k = static_cast<std::size_t>(order);
        if (fields.size() != k + 1 && fields.size() != k + 2)
            throw ArpaError(line_no, "expected " + std::to_string(k) + " tokens");
        NgramEntry e;
        if (!parse_double(fields[0], e.log10_prob)) throw ArpaError(line_no, "bad log probability");
        if (e.log10_prob > 0.0) throw ArpaError(line_no, "positive log probability");
        if (fields.size() == k + 2) {
            if (order == max_order) throw ArpaError(line_no, "backoff weight at the highest order");
            if (!parse_double(fields[k + 1], e.backoff_log10)) throw ArpaError(line_no, "bad backoff weight");
        }
        std::vector<std::string> toks;
        for (std::size_t i = 1; i <= k; ++i) toks.emplace_back(fields[i]);
        model.add(toks, e);
        ++found[order - 1];
    }
    if (state == State::Preamble) throw ArpaError(line_no, "missing \\data\\");
    if (state != State::End) throw ArpaError(line_no, "missing \\end\\");
    if (max_order == 0) throw ArpaError(line_no, "no n-gram counts declared");
    for (int k = 1; k <= max_order; ++k) {
        if (found[k - 1] != declared[k]) throw ArpaError(k, declared[k], found[k - 1]);
        if (model.entries(k).size() != declared[k]) throw ArpaError(k, declared[k], model.entries(k).size());
    }
    model.check_prefixes();
    return model;
}

ArpaModel load_arpa(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PplError("cannot open ARPA file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_arpa(ss.str());
}

std::string write_arpa(const ArpaModel& model) {
    std::string out = "\\data\\\n";
    for (int k = 1; k <= model.max_order(); ++k)
        out += "ngram " + std::to_string(k) + "=" + std::to_string(model.entries(k).size()) + "\n";
    for (int k = 1; k <= model.max_order(); ++k) {
        out += "\n\\" + std::to_string(k) + "-grams:\n";
        std::vector<const std::pair<const std::string, NgramEntry>*> rows;
        for (const auto& kv : model.entries(k)) rows.push_back(&kv);
        std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->first < b->first; });
        for (const auto* kv : rows) {
            out += text::format_double(kv->second.log10_prob);
            out += '\t';
            out += kv->first;
            if (k < model.max_order()) {
                out += '\t';
                out += text::format_double(kv->second.backoff_log10);
            }
            out += '\n';
        }
    }
    out += "\n\\end\\\n";
    return out;
}

namespace {

const std::string& map_token(const ArpaModel& model, const std::string& tok) {
    static const std::string unk(kUnknown);
    if (model.vocab().contains(tok)) return tok;
    if (!model.has_unknown()) throw PplError("out-of-vocabulary token '" + tok + "' and model has no <unk>");
    return unk;
}

}  // namespace

double log_prob(const ArpaModel& model, const std::vector<std::string>& context, const std::string& word) {
    const std::string& w = map_token(model, word);
    const std::size_t keep = std::min(context.size(), static_cast<std::size_t>(model.max_order() - 1));
    std::vector<std::string> hist;
    hist.reserve(keep);
    for (std::size_t i = context.size() - keep; i < context.size(); ++i) hist.push_back(map_token(model, context[i]));

    double backoff = 0.0;
    for (std::size_t start = 0; start <= hist.size(); ++start) {
        const auto h_len = hist.size() - start;
        std::string h = join(hist, start, hist.size());
        const std::string key = h.empty() ? w : h + " " + w;
        if (const auto* e = model.find(key, static_cast<int>(h_len + 1))) return backoff + e->log10_prob;
        if (h_len > 0) {
            if (const auto* ctx = model.find(h, static_cast<int>(h_len))) backoff += ctx->backoff_log10;
        }
    }
    // unreachable: w is a unigram after mapping
    throw PplError("token '" + w + "' missing from unigrams");
}

double perplexity(const ArpaModel& model, const std::vector<std::string>& tokens) {
    if (tokens.empty()) throw PplError("perplexity of an empty token sequence");
    const std::size_t window = static_cast<std::size_t>(std::max(0, model.max_order() - 1));
    std::vector<std::string> history;
    if (model.has_sentence_start()) history.emplace_back(kSentenceStart);
    // Neumaier summation; the result is reported to 12 significant digits so
    // float noise from log10 round trips does not leak into the value.
    double sum = 0.0;
    double comp = 0.0;
    for (const auto& t : tokens) {
        const double lp = log_prob(model, history, t);
        const double next = sum + lp;
        comp += std::fabs(sum) >= std::fabs(lp) ? (sum - next) + lp : (lp - next) + sum;
        sum = next;
        history.push_back(t);
        if (history.size() > window) history.erase(history.begin());
    }
    const double mean = (sum + comp) / static_cast<double>(tokens.size());
    return text::round_significant(std::pow(10.0, -mean), 12);
}

std::vector<std::string> lm_tokenize(std::string_view text) {
    const std::string lowered = text::to_lower(text);
    std::vector<std::string> out;
    for (auto t : text::split_whitespace(lowered)) out.emplace_back(t);
    return out;
}

FilterVerdict ppl_gate(Document& doc, const ArpaModel& model, const PplGate& gate) {
    if (doc.lang != gate.lang)
        throw GateError("perplexity gate for '" + gate.lang + "' applied to a '" + doc.lang + "' document");
    const auto tokens = lm_tokenize(doc.text);
    if (tokens.empty()) return FilterVerdict::reject(kEmptyAfterTokenize);
    const double ppl = perplexity(model, tokens);
    doc.ppl = ppl;
    if (ppl > gate.max_ppl) return FilterVerdict::reject(kHighPpl);
    return FilterVerdict::accept();
}

double percentile_threshold(std::vector<double> sample, double pct) {
    if (sample.empty()) throw PplError("percentile of an empty sample");
    if (!(pct > 0.0 && pct <= 1.0)) throw PplError("percentile must lie in (0,1]");
    std::sort(sample.begin(), sample.end());
    auto rank = static_cast<std::size_t>(std::ceil(pct * static_cast<double>(sample.size()) - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, sample.size());
    return sample[rank - 1];
}

}  // namespace eurocurate
