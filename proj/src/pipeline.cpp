#include "eurocurate/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>
#include <sstream>
#include <unordered_set>

#include "eurocurate/dedup.hpp"
#include "eurocurate/eval_protocol.hpp"
#include "eurocurate/heuristic_filter.hpp"
#include "eurocurate/io.hpp"
#include "eurocurate/mixer_packer.hpp"
#include "eurocurate/ngram_lm.hpp"
#include "eurocurate/quality_gate.hpp"
#include "eurocurate/schedule_arch.hpp"
#include "eurocurate/sft_prep.hpp"
#include "eurocurate/text.hpp"

namespace eurocurate {

namespace fs = std::filesystem;

namespace {

constexpr const char* kMalformed = "malformed_record";
constexpr std::size_t kChunkLines = 4096;

// Typed access to one config section. Type or range problems are recorded
// as `section.key` violations instead of thrown, so validate_config can
// report all of them at once.
class Section {
public:
    Section(const Json& root, std::string name, std::vector<std::string>* violations)
        : name_(std::move(name)), violations_(violations) {
        auto it = root.find(name_);
        if (it == root.end()) {
            violate("");
        } else if (!it->is_object()) {
            violate("");
        } else {
            node_ = &*it;
        }
    }

    bool present() const { return node_ != nullptr; }
    bool has(const std::string& key) const { return node_ && node_->contains(key); }
    const Json* raw(const std::string& key) const {
        if (!node_) return nullptr;
        auto it = node_->find(key);
        return it == node_->end() ? nullptr : &*it;
    }

    double number(const std::string& key, double def) {
        const Json* v = raw(key);
        if (!v) return def;
        if (!v->is_number()) {
            violate(key);
            return def;
        }
        return v->get<double>();
    }

    std::int64_t integer(const std::string& key, std::int64_t def) {
        const Json* v = raw(key);
        if (!v) return def;
        if (v->is_number_integer()) return v->get<std::int64_t>();
        if (v->is_number_float()) {
            double d = v->get<double>();
            if (std::isfinite(d) && d == std::floor(d) && std::fabs(d) < 9.2e18) return static_cast<std::int64_t>(d);
        }
        violate(key);
        return def;
    }

    bool boolean(const std::string& key, bool def) {
        const Json* v = raw(key);
        if (!v) return def;
        if (!v->is_boolean()) {
            violate(key);
            return def;
        }
        return v->get<bool>();
    }

    std::string string(const std::string& key, std::string def) {
        const Json* v = raw(key);
        if (!v) return def;
        if (!v->is_string()) {
            violate(key);
            return def;
        }
        return v->get<std::string>();
    }

    std::vector<std::string> strings(const std::string& key, std::vector<std::string> def) {
        const Json* v = raw(key);
        if (!v) return def;
        if (!v->is_array() || !std::all_of(v->begin(), v->end(), [](const Json& e) { return e.is_string(); })) {
            violate(key);
            return def;
        }
        return v->get<std::vector<std::string>>();
    }

    std::map<std::string, double> number_map(const std::string& key, std::map<std::string, double> def) {
        const Json* v = raw(key);
        if (!v) return def;
        if (!v->is_object()) {
            violate(key);
            return def;
        }
        std::map<std::string, double> out;
        for (auto it = v->begin(); it != v->end(); ++it) {
            if (!it.value().is_number()) {
                violate(key);
                return def;
            }
            out[it.key()] = it.value().get<double>();
        }
        return out;
    }

    void violate(const std::string& key) {
        if (!violations_) return;
        std::string v = key.empty() ? name_ : name_ + "." + key;
        if (std::find(violations_->begin(), violations_->end(), v) == violations_->end()) violations_->push_back(v);
    }

    void check(bool ok, const std::string& key) {
        if (!ok) violate(key);
    }

private:
    std::string name_;
    std::vector<std::string>* violations_;
    const Json* node_ = nullptr;
};

// ---- section parsers -------------------------------------------------------

FilterPolicy filter_policy(const Json& root, std::vector<std::string>* v) {
    Section s(root, "filter", v);
    FilterPolicy p;
    std::int64_t min_chars = s.integer("min_chars", static_cast<std::int64_t>(p.min_chars));
    s.check(min_chars >= 0, "min_chars");
    p.min_chars = static_cast<std::size_t>(std::max<std::int64_t>(min_chars, 0));
    p.banned_phrases = s.strings("banned_phrases", p.banned_phrases);
    if (s.has("banned_chars")) {
        std::string chars = s.string("banned_chars", "");
        p.banned_chars.clear();
        for (char32_t c : text::decode_utf8(chars)) p.banned_chars.push_back(c);
    }
    p.max_upper_frac = s.number("max_upper_frac", p.max_upper_frac);
    p.max_symbol_word_ratio = s.number("max_symbol_word_ratio", p.max_symbol_word_ratio);
    p.max_nonalpha_word_frac = s.number("max_nonalpha_word_frac", p.max_nonalpha_word_frac);
    p.symbol_set = s.strings("symbol_set", p.symbol_set);
    for (const auto& bad : validate_policy(p)) s.violate(bad);
    return p;
}

struct PplSettings {
    std::map<std::string, fs::path> models;
    std::map<std::string, double> max_ppl;
    double percentile = 0.70;
};

fs::path resolve(const PipelineConfig& c, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : c.base_dir / path;
}

PplSettings ppl_settings(const PipelineConfig& c, std::vector<std::string>* v) {
    Section s(c.tree, "ppl", v);
    PplSettings out;
    if (const Json* m = s.raw("models")) {
        if (!m->is_object()) {
            s.violate("models");
        } else {
            for (auto it = m->begin(); it != m->end(); ++it) {
                if (!it.value().is_string() || it.value().get<std::string>().empty() || !is_valid_lang(it.key())) {
                    s.violate("models");
                    continue;
                }
                out.models[it.key()] = resolve(c, it.value().get<std::string>());
            }
        }
    }
    out.max_ppl = s.number_map("max_ppl", {});
    for (const auto& [lang, cap] : out.max_ppl) s.check(cap > 0.0, "max_ppl");
    out.percentile = s.number("percentile", out.percentile);
    s.check(out.percentile > 0.0 && out.percentile <= 1.0, "percentile");
    return out;
}

struct DedupSettings {
    std::string mode = "exact";
    NearDedupParams near;
};

DedupSettings dedup_settings(const Json& root, std::vector<std::string>* v) {
    Section s(root, "dedup", v);
    DedupSettings d;
    d.mode = s.string("mode", d.mode);
    static const std::set<std::string> modes = {"exact", "normalized", "paragraph", "near"};
    s.check(modes.count(d.mode) > 0, "mode");
    std::int64_t bands = s.integer("bands", static_cast<std::int64_t>(d.near.bands));
    std::int64_t rows = s.integer("rows", static_cast<std::int64_t>(d.near.rows));
    std::int64_t shingle = s.integer("shingle_len", static_cast<std::int64_t>(d.near.shingle_len));
    s.check(bands > 0, "bands");
    s.check(rows > 0, "rows");
    s.check(shingle > 0, "shingle_len");
    d.near.bands = static_cast<std::size_t>(std::max<std::int64_t>(bands, 1));
    d.near.rows = static_cast<std::size_t>(std::max<std::int64_t>(rows, 1));
    d.near.shingle_len = static_cast<std::size_t>(std::max<std::int64_t>(shingle, 1));
    d.near.threshold = s.number("threshold", d.near.threshold);
    s.check(d.near.threshold > 0.0 && d.near.threshold <= 1.0, "threshold");
    return d;
}

struct ScoreSettings {
    std::optional<fs::path> table;
    ScorerConfig scorer;
    bool english_gate = true;
};

RetryPolicy retry_policy(Section& s) {
    RetryPolicy r;
    std::int64_t attempts = s.integer("max_attempts", r.max_attempts);
    s.check(attempts >= 1, "max_attempts");
    r.max_attempts = static_cast<int>(std::clamp<std::int64_t>(attempts, 1, 100));
    std::int64_t timeout = s.integer("timeout_ms", r.timeout.count());
    s.check(timeout > 0, "timeout_ms");
    r.timeout = std::chrono::milliseconds(std::max<std::int64_t>(timeout, 1));
    std::int64_t backoff = s.integer("backoff_ms", r.initial_backoff.count());
    s.check(backoff >= 0, "backoff_ms");
    r.initial_backoff = std::chrono::milliseconds(std::max<std::int64_t>(backoff, 0));
    return r;
}

ScoreSettings score_settings(const PipelineConfig& c, std::vector<std::string>* v) {
    Section s(c.tree, "score", v);
    ScoreSettings out;
    std::string table = s.string("table", "");
    if (!table.empty()) out.table = resolve(c, table);
    out.scorer.url = s.string("url", "");
    std::int64_t batch = s.integer("max_batch", 64);
    std::int64_t par = s.integer("parallelism", 1);
    s.check(batch >= 1, "max_batch");
    s.check(par >= 1, "parallelism");
    out.scorer.max_batch = static_cast<std::size_t>(std::max<std::int64_t>(batch, 1));
    out.scorer.parallelism = static_cast<std::size_t>(std::max<std::int64_t>(par, 1));
    out.scorer.retry = retry_policy(s);
    out.english_gate = s.boolean("english_gate", true);
    return out;
}

struct TierSettings {
    std::optional<TierCutpoints> cutpoints;
    double f1 = 1.0 / 3.0;
    double f2 = 2.0 / 3.0;
};

TierSettings tier_settings(const Json& root, std::vector<std::string>* v) {
    Section s(root, "tier", v);
    TierSettings t;
    if (const Json* cp = s.raw("cutpoints")) {
        if (!cp->is_object() || !cp->contains("c1") || !cp->contains("c2") || !(*cp)["c1"].is_number() ||
            !(*cp)["c2"].is_number()) {
            s.violate("cutpoints");
        } else {
            TierCutpoints cut{(*cp)["c1"].get<double>(), (*cp)["c2"].get<double>()};
            try {
                validate(cut);
                t.cutpoints = cut;
            } catch (const RangeError&) {
                s.violate("cutpoints");
            }
        }
    }
    if (const Json* fr = s.raw("fractions")) {
        if (!fr->is_array() || fr->size() != 2 || !(*fr)[0].is_number() || !(*fr)[1].is_number()) {
            s.violate("fractions");
        } else {
            t.f1 = (*fr)[0].get<double>();
            t.f2 = (*fr)[1].get<double>();
            s.check(t.f1 > 0.0 && t.f1 < t.f2 && t.f2 < 1.0, "fractions");
        }
    }
    return t;
}

ParallelThresholds parallel_thresholds(const Json& root, std::vector<std::string>* v) {
    Section s(root, "parallel", v);
    ParallelThresholds t;
    t.lex_default = s.number("lex_default", t.lex_default);
    t.lex_overrides = s.number_map("lex_overrides", t.lex_overrides);
    t.qe_min = s.number("qe_min", t.qe_min);
    for (const auto& bad : validate_thresholds(t)) s.violate(bad);
    return t;
}

PhasePlan phase_plan(const Json& root, std::vector<std::string>* v) {
    Section s(root, "plan", v);
    PhasePlan plan = default_plan(s.integer("final_tokens", 400'000'000'000));
    if (const Json* phases = s.raw("phases")) {
        if (!phases->is_array() || phases->size() != 3) {
            s.violate("phases");
        } else {
            for (std::size_t i = 0; i < 3; ++i) {
                const Json& ph = (*phases)[i];
                if (!ph.is_object()) {
                    s.violate("phases");
                    continue;
                }
                Json wrap = {{"p", ph}};
                Section ps(wrap, "p", nullptr);
                auto& spec = plan.phases[i];
                bool bad = false;
                auto num = [&](const char* key, std::int64_t def) {
                    const Json* x = ps.raw(key);
                    if (!x) return def;
                    if (!x->is_number()) {
                        bad = true;
                        return def;
                    }
                    return static_cast<std::int64_t>(std::llround(x->get<double>()));
                };
                spec.tokens = num("tokens", spec.tokens);
                spec.seq_len = num("seq_len", spec.seq_len);
                if (const Json* mix = ps.raw("mixture")) {
                    if (!mix->is_object()) {
                        bad = true;
                    } else {
                        spec.mixture.clear();
                        for (auto it = mix->begin(); it != mix->end(); ++it) {
                            if (!it.value().is_number()) {
                                bad = true;
                                continue;
                            }
                            spec.mixture[it.key()] = it.value().get<double>();
                        }
                    }
                }
                if (bad) s.violate("phases");
            }
        }
    }
    plan.longctx_tokens = s.integer("longctx_tokens", plan.longctx_tokens);
    plan.longctx_split = s.number_map("longctx_split", plan.longctx_split);
    for (const auto& pv : validate_plan(plan)) s.violate(pv.rule);
    return plan;
}

struct MixSourceSpec {
    std::string name;
    std::optional<fs::path> input;
    std::set<std::string> sources;
    std::optional<int> min_tier;
};

struct MixSettings {
    int phase = 0;
    std::int64_t budget_tokens = 0;
    std::vector<MixSourceSpec> sources;
};

MixSettings mix_settings(const PipelineConfig& c, std::vector<std::string>* v) {
    Section s(c.tree, "mix", v);
    MixSettings m;
    m.phase = static_cast<int>(s.integer("phase", 0));
    s.check(m.phase >= 0 && m.phase <= 2, "phase");
    m.phase = std::clamp(m.phase, 0, 2);
    m.budget_tokens = s.integer("budget_tokens", 1'000'000);
    s.check(m.budget_tokens > 0, "budget_tokens");
    if (const Json* src = s.raw("sources")) {
        if (!src->is_object()) {
            s.violate("sources");
        } else {
            for (auto it = src->begin(); it != src->end(); ++it) {
                const Json& e = it.value();
                MixSourceSpec spec;
                spec.name = it.key();
                if (!e.is_object()) {
                    s.violate("sources");
                    continue;
                }
                if (e.contains("input")) {
                    if (!e["input"].is_string() || e["input"].get<std::string>().empty()) {
                        s.violate("sources");
                    } else {
                        spec.input = resolve(c, e["input"].get<std::string>());
                    }
                }
                if (e.contains("match")) {
                    if (!e["match"].is_array()) {
                        s.violate("sources");
                    } else {
                        for (const auto& x : e["match"]) {
                            if (x.is_string()) spec.sources.insert(x.get<std::string>());
                            else s.violate("sources");
                        }
                    }
                } else {
                    spec.sources.insert(spec.name);
                }
                if (e.contains("min_tier")) {
                    if (!e["min_tier"].is_number_integer() || e["min_tier"].get<int>() < 1 || e["min_tier"].get<int>() > 3)
                        s.violate("sources");
                    else
                        spec.min_tier = e["min_tier"].get<int>();
                }
                m.sources.push_back(std::move(spec));
            }
        }
    }
    return m;
}

struct PackSettings {
    std::size_t seq_len = 4096;
    std::int32_t sep_token = 0;
    std::int32_t vocab_size = 262'144;
};

PackSettings pack_settings(const Json& root, std::vector<std::string>* v) {
    Section s(root, "pack", v);
    PackSettings p;
    std::int64_t seq = s.integer("seq_len", 4096);
    std::int64_t sep = s.integer("sep_token", 0);
    std::int64_t vocab = s.integer("vocab_size", p.vocab_size);
    s.check(seq >= 1 && seq <= 0xffffffffLL, "seq_len");
    s.check(vocab >= 2 && vocab <= 0x7fffffffLL, "vocab_size");
    s.check(sep >= 0 && sep < vocab, "sep_token");
    p.seq_len = static_cast<std::size_t>(std::clamp<std::int64_t>(seq, 1, 0xffffffffLL));
    p.vocab_size = static_cast<std::int32_t>(std::clamp<std::int64_t>(vocab, 2, 0x7fffffffLL));
    p.sep_token = static_cast<std::int32_t>(std::clamp<std::int64_t>(sep, 0, p.vocab_size - 1));
    return p;
}

struct ScheduleSettings {
    TrapezoidSchedule trapezoid;
    CosineSchedule cosine;
    std::int64_t stride = 10'000'000'000;
};

ScheduleSettings schedule_settings(const Json& root, std::vector<std::string>* v) {
    Section s(root, "schedule", v);
    ScheduleSettings out;
    std::string preset = s.string("preset", "eurollm22b");
    try {
        out.trapezoid = schedule_preset(preset);
    } catch (const ConfigError&) {
        s.violate("preset");
    }
    auto& t = out.trapezoid;
    t.peak_lr = s.number("peak_lr", t.peak_lr);
    t.warmup_tokens = s.integer("warmup_tokens", t.warmup_tokens);
    t.constant_until_tokens = s.integer("constant_until_tokens", t.constant_until_tokens);
    t.anneal_tokens = s.integer("anneal_tokens", t.anneal_tokens);
    t.floor_fraction = s.number("floor_fraction", t.floor_fraction);
    t.decay_tokens = s.integer("decay_tokens", t.decay_tokens);
    try {
        validate(t);
    } catch (const RangeError&) {
        s.violate("trapezoid");
    }
    out.stride = s.integer("stride", out.stride);
    s.check(out.stride > 0, "stride");
    if (const Json* cos = s.raw("cosine")) {
        if (!cos->is_object()) {
            s.violate("cosine");
        } else {
            Json wrap = {{"c", *cos}};
            std::vector<std::string> inner;
            Section cs(wrap, "c", &inner);
            auto& c = out.cosine;
            c.max_lr = cs.number("max_lr", c.max_lr);
            c.warmup_steps = cs.integer("warmup_steps", c.warmup_steps);
            c.total_steps = cs.integer("total_steps", c.total_steps);
            c.min_lr = cs.number("min_lr", c.min_lr);
            if (!inner.empty()) s.violate("cosine");
        }
    }
    try {
        validate(out.cosine);
    } catch (const RangeError&) {
        s.violate("cosine");
    }
    return out;
}

std::string arch_setting(const Json& root, std::vector<std::string>* v) {
    Section s(root, "arch", v);
    std::string preset = s.string("preset", "22b");
    auto names = arch_preset_names();
    s.check(std::find(names.begin(), names.end(), preset) != names.end(), "preset");
    return preset;
}

struct SftSettings {
    TraceMarkers markers = default_trace_markers();
    std::set<std::string> report_exclude;
};

SftSettings sft_settings(const Json& root, std::vector<std::string>* v) {
    Section s(root, "sft", v);
    SftSettings out;
    if (const Json* m = s.raw("trace_markers")) {
        bool ok = m->is_array() && !m->empty();
        TraceMarkers markers;
        if (ok) {
            for (const auto& pair : *m) {
                if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string() ||
                    pair[0].get<std::string>().empty() || pair[1].get<std::string>().empty()) {
                    ok = false;
                    break;
                }
                markers.emplace_back(pair[0].get<std::string>(), pair[1].get<std::string>());
            }
        }
        if (ok) out.markers = std::move(markers);
        else s.violate("trace_markers");
    }
    auto excl = s.strings("report_exclude", {});
    out.report_exclude = {excl.begin(), excl.end()};
    return out;
}

struct EvalSettings {
    std::vector<JudgeEndpoint> judges;
    std::size_t parallelism = 1;
    bool percent_correlations = false;
};

EvalSettings eval_settings(const Json& root, std::vector<std::string>* v) {
    Section s(root, "eval", v);
    EvalSettings out;
    std::int64_t par = s.integer("parallelism", 1);
    s.check(par >= 1, "parallelism");
    out.parallelism = static_cast<std::size_t>(std::max<std::int64_t>(par, 1));
    out.percent_correlations = s.boolean("percent_correlations", false);
    if (const Json* js = s.raw("judges")) {
        if (!js->is_array()) {
            s.violate("judges");
        } else {
            std::set<std::string> names;
            for (const auto& j : *js) {
                if (!j.is_object()) {
                    s.violate("judges");
                    continue;
                }
                Json wrap = {{"j", j}};
                std::vector<std::string> inner;
                Section jsec(wrap, "j", &inner);
                JudgeEndpoint e;
                e.name = jsec.string("name", "");
                e.url = jsec.string("url", "");
                e.model = jsec.string("model", "");
                e.auth_env = jsec.string("auth_env", "");
                e.retry = retry_policy(jsec);
                if (!inner.empty() || e.name.empty() || e.url.empty() || !names.insert(e.name).second) {
                    s.violate("judges");
                    continue;
                }
                out.judges.push_back(std::move(e));
            }
        }
    }
    return out;
}

struct LangIdSettings {
    std::optional<fs::path> profiles;
};

LangIdSettings langid_settings(const PipelineConfig& c, std::vector<std::string>* v) {
    Section s(c.tree, "langid", v);
    LangIdSettings out;
    std::string p = s.string("profiles", "");
    if (!p.empty()) out.profiles = resolve(c, p);
    return out;
}

void stage_paths(const Json& root, std::vector<std::string>* v) {
    auto it = root.find("stages");
    if (it == root.end() || !it->is_object()) {
        v->push_back("stages");
        return;
    }
    for (auto st = it->begin(); st != it->end(); ++st) {
        const auto& names = stage_names();
        if (std::find(names.begin(), names.end(), st.key()) == names.end()) {
            v->push_back("stages." + st.key());
            continue;
        }
        if (!st.value().is_object()) {
            v->push_back("stages." + st.key());
            continue;
        }
        for (const char* key : {"input", "output"}) {
            if (!st.value().contains(key)) continue;
            const Json& p = st.value()[key];
            if (!p.is_string() || p.get<std::string>().empty() || p.get<std::string>().find('\0') != std::string::npos)
                v->push_back("stages." + st.key() + "." + key);
        }
    }
}

// ---- stage plumbing --------------------------------------------------------

struct Context {
    const PipelineConfig& config;
    const StageOptions& options;
    std::string stage;
    std::uint64_t seed = 0;
    std::size_t workers = 1;

    std::optional<fs::path> stage_path(const char* key) const {
        auto st = config.tree.find("stages");
        if (st == config.tree.end()) return std::nullopt;
        auto s = st->find(stage);
        if (s == st->end() || !s->contains(key)) return std::nullopt;
        return resolve(config, (*s)[key].get<std::string>());
    }

    fs::path input() const {
        if (options.input) return *options.input;
        if (auto p = stage_path("input")) return *p;
        throw ConfigError("stage '" + stage + "' has no input path");
    }

    std::optional<fs::path> maybe_output() const {
        if (options.output) return *options.output;
        return stage_path("output");
    }

    fs::path output() const {
        if (auto p = maybe_output()) return *p;
        throw ConfigError("stage '" + stage + "' has no output path");
    }
};

struct LineOutcome {
    std::string line;  // empty: rejected
    std::string reason;
    std::string id;
    std::map<std::string, std::uint64_t> details;
};

// Reads the input in fixed-size chunks, maps each line on the worker pool
// and writes results in input order. Memory is bounded by the chunk size.
void run_line_stage(const fs::path& input, const fs::path& output, std::size_t workers, Manifest& manifest,
                    const std::function<LineOutcome(std::string_view)>& fn,
                    const std::function<void(LineOutcome&)>& serial = {}) {
    std::ifstream in(input, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + input.string());
    AtomicFile out(output);
    std::vector<std::string> lines;
    std::vector<LineOutcome> results;
    bool done = false;
    while (!done) {
        lines.clear();
        std::string line;
        while (lines.size() < kChunkLines && std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) lines.push_back(std::move(line));
        }
        if (lines.size() < kChunkLines) done = true;
        results.assign(lines.size(), LineOutcome{});
        parallel_for(lines.size(), workers, [&](std::size_t i) {
            try {
                results[i] = fn(lines[i]);
            } catch (const ParseError&) {
                results[i] = LineOutcome{{}, kMalformed, {}, {}};
            } catch (const SchemaError&) {
                results[i] = LineOutcome{{}, kMalformed, {}, {}};
            }
        });
        for (auto& r : results) {
            if (serial) serial(r);
            for (const auto& [k, n] : r.details) manifest.details[k] += n;
            if (r.line.empty()) {
                manifest.reject(r.reason);
            } else {
                manifest.accept();
                out.stream() << r.line << '\n';
            }
        }
    }
    out.commit();
}

template <typename T, typename Parse>
std::vector<T> load_all(const fs::path& input, Manifest& manifest, Parse parse) {
    std::vector<T> out;
    for_each_line(input, [&](std::string_view line, std::size_t) {
        try {
            out.push_back(parse(line));
        } catch (const ParseError&) {
            manifest.reject(kMalformed);
        } catch (const SchemaError&) {
            manifest.reject(kMalformed);
        }
    });
    return out;
}

// a's outputs feed b.
Manifest chain(Manifest a, const Manifest& b) {
    for (const auto& [k, n] : b.counts) a.counts[k] += n;
    for (const auto& [k, n] : b.details) a.details[k] += n;
    a.notes.insert(a.notes.end(), b.notes.begin(), b.notes.end());
    a.output_records = b.output_records;
    return a;
}

Manifest fresh(const std::string& stage) {
    Manifest m;
    m.stage = stage;
    return m;
}

// ---- stages ----------------------------------------------------------------

Manifest stage_ingest(Context& ctx) {
    auto langid = langid_settings(ctx.config, nullptr);
    std::vector<LanguageProfile> profiles;
    if (langid.profiles) profiles = load_profiles(*langid.profiles);
    Manifest m = fresh("ingest");
    std::unordered_set<std::string> seen;
    run_line_stage(
        ctx.input(), ctx.output(), ctx.workers, m,
        [&](std::string_view line) {
            Document d = parse_record(line);
            if (!profiles.empty()) {
                auto guess = classify_language(d.text, profiles);
                if (guess.lang != d.lang) return LineOutcome{{}, "lang_mismatch", d.id, {}};
            }
            if (!d.token_count) d.token_count = token_count_of(d);
            return LineOutcome{write_record(d), {}, d.id, {}};
        },
        [&](LineOutcome& r) {
            if (r.id.empty() || r.line.empty()) return;
            if (!seen.insert(r.id).second) {
                r.line.clear();
                r.reason = "duplicate_id";
            }
        });
    return m;
}

Manifest stage_filter(Context& ctx) {
    FilterPolicy policy = filter_policy(ctx.config.tree, nullptr);
    Manifest m = fresh("filter");
    run_line_stage(ctx.input(), ctx.output(), ctx.workers, m, [&](std::string_view line) {
        Document d = parse_record(line);
        auto res = filter_document(d, policy);
        LineOutcome out;
        for (const auto& r : res.clean.removed) out.details["paragraph_" + r.reason] += 1;
        if (!res.verdict) {
            out.reason = res.verdict.reason;
            return out;
        }
        out.line = write_record(res.clean.doc);
        return out;
    });
    return m;
}

Manifest stage_ppl(Context& ctx) {
    auto settings = ppl_settings(ctx.config, nullptr);
    std::map<std::string, ArpaModel> models;
    for (const auto& [lang, path] : settings.models) models.emplace(lang, load_arpa(path.string()));

    fs::path input = ctx.input();
    // First pass: per-language perplexity samples for languages without a cap.
    std::map<std::string, double> caps = settings.max_ppl;
    std::map<std::string, std::vector<double>> samples;
    bool need_sample = false;
    for (const auto& [lang, model] : models)
        if (!caps.count(lang)) need_sample = true;
    if (need_sample) {
        std::vector<std::string> lines;
        auto flush = [&] {
            std::vector<std::optional<std::pair<std::string, double>>> got(lines.size());
            parallel_for(lines.size(), ctx.workers, [&](std::size_t i) {
                try {
                    Document d = parse_record(lines[i]);
                    auto it = models.find(d.lang);
                    if (it == models.end() || caps.count(d.lang)) return;
                    auto toks = lm_tokenize(d.text);
                    if (toks.empty()) return;
                    got[i] = std::make_pair(d.lang, perplexity(it->second, toks));
                } catch (const ParseError&) {
                } catch (const SchemaError&) {
                }
            });
            for (auto& g : got)
                if (g) samples[g->first].push_back(g->second);
            lines.clear();
        };
        for_each_line(input, [&](std::string_view line, std::size_t) {
            lines.emplace_back(line);
            if (lines.size() >= kChunkLines) flush();
        });
        flush();
        for (auto& [lang, sample] : samples) caps[lang] = percentile_threshold(sample, settings.percentile);
    }

    Manifest m = fresh("ppl");
    for (const auto& [lang, cap] : caps)
        if (models.count(lang)) m.notes.push_back("max_ppl[" + lang + "]=" + text::format_double(cap));
    run_line_stage(input, ctx.output(), ctx.workers, m, [&](std::string_view line) {
        Document d = parse_record(line);
        LineOutcome out;
        auto it = models.find(d.lang);
        auto cap = caps.find(d.lang);
        if (it == models.end() || cap == caps.end()) {
            out.details["no_model"] = 1;
            out.line = write_record(d);
            return out;
        }
        auto v = ppl_gate(d, it->second, PplGate{d.lang, cap->second});
        if (!v) {
            out.reason = v.reason;
            return out;
        }
        out.line = write_record(d);
        return out;
    });
    return m;
}

Manifest stage_dedup(Context& ctx) {
    auto settings = dedup_settings(ctx.config.tree, nullptr);
    settings.near.seed = ctx.seed;
    Manifest parse = fresh("dedup");
    auto docs = load_all<Document>(ctx.input(), parse, [](std::string_view l) { return parse_record(l); });
    DedupResult<Document> res;
    if (settings.mode == "exact") {
        res = exact_dedup(docs, [](const Document& d) { return text_key(d.text); });
    } else if (settings.mode == "normalized") {
        res = exact_dedup(docs, [](const Document& d) { return normalized_key(d.text); });
    } else if (settings.mode == "paragraph") {
        res = paragraph_dedup(docs);
    } else {
        res = near_dedup(docs, settings.near);
    }
    fs::path output = ctx.output();
    fs::path links_path = output;
    links_path += ".links.tsv";
    AtomicFile out(output);
    for (const auto& d : res.records) out.stream() << write_record(d) << '\n';
    AtomicFile links(links_path);
    for (const auto& [survivor, dropped] : res.links) links.stream() << survivor << '\t' << dropped << '\n';
    out.commit();
    links.commit();
    Manifest m = res.manifest;
    m.stage = "dedup";
    for (const auto& [k, n] : parse.counts) m.reject(k, n);
    return m;
}

Manifest stage_score(Context& ctx) {
    auto settings = score_settings(ctx.config, nullptr);
    std::unordered_map<std::string, double> table;
    if (settings.table) table = load_score_table(settings.table->string());
    bool remote = !settings.scorer.url.empty();
    if (!settings.table && !remote) throw ConfigError("score stage needs score.table or score.url");

    Manifest m = fresh("score");
    std::ifstream in(ctx.input(), std::ios::binary);
    if (!in) throw ConfigError("cannot read " + ctx.input().string());
    AtomicFile out(ctx.output());
    std::vector<Document> batch;
    auto flush = [&] {
        std::vector<Document> pending;
        for (auto& d : batch) {
            if (auto it = table.find(d.id); it != table.end()) d.edu_score = it->second;
            else if (!d.edu_score && remote) pending.push_back(d);
        }
        if (!pending.empty()) {
            auto scored = score_documents(std::move(pending), settings.scorer);
            std::unordered_map<std::string, double> got;
            for (const auto& d : scored) got[d.id] = *d.edu_score;
            for (auto& d : batch)
                if (!d.edu_score) d.edu_score = got.at(d.id);
        }
        for (const auto& d : batch) {
            if (!d.edu_score) {
                m.reject("missing_score");
                continue;
            }
            if (settings.english_gate && d.lang == "en") {
                if (auto v = english_edu_gate(d); !v) {
                    m.reject(v.reason);
                    continue;
                }
            }
            m.accept();
            out.stream() << write_record(d) << '\n';
        }
        batch.clear();
    };
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        try {
            batch.push_back(parse_record(line));
        } catch (const ParseError&) {
            m.reject(kMalformed);
        } catch (const SchemaError&) {
            m.reject(kMalformed);
        }
        if (batch.size() >= kChunkLines) flush();
    }
    flush();
    out.commit();
    return m;
}

Manifest stage_tier(Context& ctx) {
    auto settings = tier_settings(ctx.config.tree, nullptr);
    fs::path input = ctx.input();
    TierCutpoints cut;
    if (settings.cutpoints) {
        cut = *settings.cutpoints;
    } else {
        std::vector<double> scores;
        for_each_line(input, [&](std::string_view line, std::size_t) {
            try {
                Document d = parse_record(line);
                if (d.edu_score) scores.push_back(*d.edu_score);
            } catch (const ParseError&) {
            } catch (const SchemaError&) {
            }
        });
        cut = cutpoints_from_histogram(std::move(scores), settings.f1, settings.f2);
    }
    Manifest m = fresh("tier");
    m.notes.push_back("cutpoints=" + text::format_double(cut.c1) + "," + text::format_double(cut.c2));
    run_line_stage(input, ctx.output(), ctx.workers, m, [&](std::string_view line) {
        Document d = parse_record(line);
        LineOutcome out;
        if (!d.edu_score) {
            out.reason = "missing_score";
            return out;
        }
        d.tier = assign_tier(*d.edu_score, cut);
        out.details["tier_" + std::to_string(*d.tier)] = 1;
        out.line = write_record(d);
        return out;
    });
    return m;
}

Manifest stage_parallel_gate(Context& ctx) {
    auto thresholds = parallel_thresholds(ctx.config.tree, nullptr);
    Section s(ctx.config.tree, "parallel", nullptr);
    bool dedup = s.boolean("dedup", true);
    Manifest gate = fresh("parallel-gate");
    std::vector<ParallelPair> kept;
    for_each_line(ctx.input(), [&](std::string_view line, std::size_t) {
        try {
            ParallelPair p = parse_pair(line);
            if (auto v = gate_parallel(p, thresholds); !v) {
                gate.reject(v.reason);
                return;
            }
            gate.accept();
            kept.push_back(std::move(p));
        } catch (const ParseError&) {
            gate.reject(kMalformed);
        } catch (const SchemaError&) {
            gate.reject(kMalformed);
        }
    });
    Manifest m = gate;
    if (dedup) {
        auto res = pair_dedup(kept);
        kept = std::move(res.records);
        m = chain(gate, res.manifest);
    }
    AtomicFile out(ctx.output());
    for (const auto& p : kept) out.stream() << write_pair(p) << '\n';
    out.commit();
    return m;
}

// Lazily yields the documents of one input that belong to a mix source.
class FilteredSource final : public RecordSource {
public:
    FilteredSource(const fs::path& path, const MixSourceSpec& spec, std::uint64_t* malformed)
        : in_(path, std::ios::binary), spec_(spec), malformed_(malformed) {
        if (!in_) throw ConfigError("cannot read " + path.string());
    }

    std::optional<Document> next() override {
        std::string line;
        while (std::getline(in_, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            Document d;
            try {
                d = parse_record(line);
            } catch (const ParseError&) {
                ++*malformed_;
                continue;
            } catch (const SchemaError&) {
                ++*malformed_;
                continue;
            }
            if (!spec_.sources.count(d.source)) continue;
            if (spec_.min_tier && (!d.tier || *d.tier < *spec_.min_tier)) continue;
            return d;
        }
        return std::nullopt;
    }

private:
    std::ifstream in_;
    MixSourceSpec spec_;
    std::uint64_t* malformed_;
};

Manifest stage_mix(Context& ctx) {
    auto settings = mix_settings(ctx.config, nullptr);
    PhasePlan plan = phase_plan(ctx.config.tree, nullptr);
    const auto& weights = plan.phases[settings.phase].mixture;
    if (settings.sources.empty()) throw ConfigError("mix.sources is empty");

    std::uint64_t malformed = 0;
    SourceMap sources;
    for (const auto& spec : settings.sources) {
        if (!weights.count(spec.name)) throw ConfigError("mix source '" + spec.name + "' has no plan weight");
        fs::path path = spec.input ? *spec.input : ctx.input();
        sources[spec.name] = std::make_unique<FilteredSource>(path, spec, &malformed);
    }
    for (const auto& [name, w] : weights)
        if (!sources.count(name)) throw ConfigError("plan source '" + name + "' has no mix.sources entry");

    AtomicFile out(ctx.output());
    auto rep = sample_mixture(sources, weights, settings.budget_tokens, ctx.seed,
                              [&](const std::string&, const Document& d) { out.stream() << write_record(d) << '\n'; });
    out.commit();
    Manifest m = rep.manifest;
    m.stage = "mix";
    m.details["tokens_emitted"] = static_cast<std::uint64_t>(rep.tokens_emitted);
    if (malformed) m.details[kMalformed] = malformed;
    return m;
}

Manifest stage_pack(Context& ctx) {
    auto settings = pack_settings(ctx.config.tree, nullptr);
    fs::path output = ctx.output();
    fs::path spans_path = output;
    spans_path += ".spans.jsonl";
    Manifest m = fresh("pack");
    AtomicFile bin(output, true);
    AtomicFile spans(spans_path);
    PackedWriter writer(bin.stream(), static_cast<std::uint32_t>(settings.seq_len));
    std::uint64_t seq_index = 0;
    SequencePacker packer(settings.seq_len, settings.sep_token, [&](PackedSequence&& seq) {
        writer.write(seq);
        Json j = Json::array();
        for (const auto& s : seq.doc_spans) j.push_back({s.start, s.end, s.doc_id});
        spans.stream() << Json{{"seq", seq_index++}, {"spans", j}}.dump() << '\n';
    });
    std::uint64_t tokens_in = 0;
    std::uint64_t separators = 0;
    std::vector<std::string> lines;
    std::vector<TokenizedDoc> toks;
    std::vector<char> bad;
    auto flush = [&] {
        toks.assign(lines.size(), TokenizedDoc{});
        bad.assign(lines.size(), 0);
        parallel_for(lines.size(), ctx.workers, [&](std::size_t i) {
            try {
                Document d = parse_record(lines[i]);
                toks[i] = TokenizedDoc{d.id, hash_tokenize(d.text, settings.vocab_size)};
            } catch (const ParseError&) {
                bad[i] = 1;
            } catch (const SchemaError&) {
                bad[i] = 1;
            }
        });
        for (std::size_t i = 0; i < lines.size(); ++i) {
            if (bad[i]) {
                m.reject(kMalformed);
                continue;
            }
            m.accept();
            tokens_in += toks[i].tokens.size();
            ++separators;
            packer.push(toks[i]);
        }
        lines.clear();
    };
    for_each_line(ctx.input(), [&](std::string_view line, std::size_t) {
        lines.emplace_back(line);
        if (lines.size() >= kChunkLines) flush();
    });
    flush();
    std::size_t dropped = packer.finish();
    writer.close();
    bin.commit();
    spans.commit();
    m.details["tokens_in"] = tokens_in;
    m.details["separators"] = separators;
    m.details["tokens_dropped"] = dropped;
    m.details["sequences"] = writer.count();
    return m;
}

std::string breakdown_text(const ArchConfig& a, const ParamBreakdown& p) {
    std::ostringstream os;
    os << "preset," << a.name << '\n'
       << "embedding," << p.embedding << '\n'
       << "lm_head," << p.lm_head << '\n'
       << "non_embedding," << p.non_embedding << '\n'
       << "total," << p.total << '\n';
    return os.str();
}

Manifest stage_arch(Context& ctx, std::string& printed) {
    std::string preset = ctx.options.preset ? *ctx.options.preset : arch_setting(ctx.config.tree, nullptr);
    ArchConfig a = arch_preset(preset);
    ParamBreakdown p = param_count(a);
    printed = breakdown_text(a, p);
    if (auto out = ctx.maybe_output()) write_file_atomic(*out, printed);
    Manifest m = fresh("arch");
    m.details["total"] = static_cast<std::uint64_t>(p.total);
    return m;
}

Manifest stage_schedule(Context& ctx, std::string& printed) {
    auto settings = schedule_settings(ctx.config.tree, nullptr);
    TrapezoidSchedule s = ctx.options.preset ? schedule_preset(*ctx.options.preset) : settings.trapezoid;
    std::int64_t stride = ctx.options.stride ? *ctx.options.stride : settings.stride;
    if (stride <= 0) throw ConfigError("stride must be positive");
    auto rows = emit_schedule_table(s, stride);
    printed = schedule_csv(rows);
    if (auto out = ctx.maybe_output()) write_file_atomic(*out, printed);
    Manifest m = fresh("schedule");
    m.details["rows"] = rows.size();
    return m;
}

Manifest stage_sft(Context& ctx) {
    auto settings = sft_settings(ctx.config.tree, nullptr);
    Manifest m = fresh("sft-prep");
    Manifest parse = fresh("sft-prep");
    auto records = load_all<ChatRecord>(ctx.input(), parse, [](std::string_view l) { return parse_chat(l); });
    std::vector<ChatRecord> valid;
    std::vector<std::pair<std::string, std::string>> rejects;
    for (auto& r : records) {
        FilterVerdict v;
        try {
            for (auto& msg : r.messages)
                if (msg.role == "assistant") msg.content = strip_traces(msg.content, settings.markers);
            v = validate_format(r);
        } catch (const StripError&) {
            v = FilterVerdict::reject("unmatched_trace");
        }
        if (!v) {
            m.reject(v.reason);
            rejects.emplace_back(r.id, v.reason);
            continue;
        }
        m.accept();
        valid.push_back(std::move(r));
    }
    auto res = dedup_instructions(valid);
    m = chain(m, res.manifest);
    for (const auto& [k, n] : parse.counts) m.reject(k, n);

    fs::path output = ctx.output();
    AtomicFile out(output);
    for (const auto& r : res.records) out.stream() << write_chat(r) << '\n';
    std::string report = "lang,percent\n";
    if (!res.records.empty()) {
        for (const auto& share : language_report(res.records, settings.report_exclude))
            report += share.lang + "," + text::format_double(share.percent) + "\n";
    }
    fs::path report_path = output;
    report_path += ".langs.csv";
    AtomicFile rep(report_path);
    rep.stream() << report;
    fs::path rejects_path = output;
    rejects_path += ".rejects.jsonl";
    AtomicFile rej(rejects_path);
    for (const auto& [id, reason] : rejects) rej.stream() << Json{{"id", id}, {"reason", reason}}.dump() << '\n';
    for (const auto& [survivor, dropped] : res.links)
        rej.stream() << Json{{"id", dropped}, {"reason", kDuplicate}, {"survivor", survivor}}.dump() << '\n';
    out.commit();
    rep.commit();
    rej.commit();
    return m;
}

Manifest stage_eval(Context& ctx, std::string& printed) {
    auto settings = eval_settings(ctx.config.tree, nullptr);
    Manifest m = fresh("eval");
    auto items = load_all<JudgmentRecord>(ctx.input(), m, [](std::string_view l) { return parse_judgment(l); });
    if (!settings.judges.empty()) {
        judge_items(items, settings.judges, std::max(settings.parallelism, ctx.workers));
    } else {
        for (auto& it : items) {
            if (it.per_judge.empty()) throw AggregateError("item '" + it.item_id + "' has no judgments");
            if (!it.regex_verdict) it.regex_verdict = regex_verdict(it.generated, it.ground_truth);
        }
    }
    auto summary = summarize(items);
    printed = summary_csv(summary, settings.percent_correlations);
    fs::path output = ctx.output();
    AtomicFile out(output);
    for (const auto& it : items) out.stream() << write_judgment(it) << '\n';
    fs::path summary_path = output;
    summary_path += ".summary.csv";
    AtomicFile sum(summary_path);
    sum.stream() << printed;
    out.commit();
    sum.commit();
    m.accept(items.size());
    return m;
}

fs::path manifest_path(const Context& ctx) {
    if (ctx.options.manifest_out) return *ctx.options.manifest_out;
    if (auto out = ctx.maybe_output()) {
        fs::path p = *out;
        p += ".manifest.json";
        return p;
    }
    return {};
}

}  // namespace

PipelineConfig load_config(const fs::path& path) {
    std::string body = read_file(path);
    PipelineConfig c;
    try {
        c.tree = Json::parse(body);
    } catch (const Json::parse_error& e) {
        throw ConfigError("cannot parse " + path.string() + ": " + e.what());
    }
    if (!c.tree.is_object()) throw ConfigError(path.string() + " is not a JSON object");
    c.base_dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    return c;
}

std::vector<std::string> validate_config(const PipelineConfig& config) {
    std::vector<std::string> v;
    const Json& t = config.tree;
    if (t.contains("seed") && !(t["seed"].is_number_unsigned() || (t["seed"].is_number_integer() && t["seed"].get<std::int64_t>() >= 0)))
        v.push_back("seed");
    if (t.contains("workers") && !(t["workers"].is_number_integer() && t["workers"].get<std::int64_t>() >= 1))
        v.push_back("workers");
    filter_policy(t, &v);
    langid_settings(config, &v);
    ppl_settings(config, &v);
    dedup_settings(t, &v);
    score_settings(config, &v);
    tier_settings(t, &v);
    parallel_thresholds(t, &v);
    phase_plan(t, &v);
    mix_settings(config, &v);
    pack_settings(t, &v);
    schedule_settings(t, &v);
    arch_setting(t, &v);
    sft_settings(t, &v);
    eval_settings(t, &v);
    stage_paths(t, &v);
    return v;
}

const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> names = {"ingest", "filter", "ppl",  "dedup",    "score", "tier", "parallel-gate",
                                                   "mix",    "pack",   "schedule", "arch", "sft-prep", "eval"};
    return names;
}

StageResult run_stage(const std::string& name, const PipelineConfig& config, const StageOptions& options) {
    StageResult result;
    const auto& names = stage_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
        result.exit_code = kExitConfigError;
        result.message = "unknown stage '" + name + "'";
        return result;
    }
    auto violations = validate_config(config);
    if (!violations.empty()) {
        result.exit_code = kExitConfigError;
        result.message = "invalid config:";
        for (const auto& v : violations) result.message += " " + v;
        return result;
    }
    Context ctx{config, options, name};
    ctx.seed = options.seed ? *options.seed : config.tree.value("seed", std::uint64_t{0});
    ctx.workers = options.workers ? *options.workers : config.tree.value("workers", std::size_t{1});
    if (ctx.workers == 0) ctx.workers = 1;
    try {
        Manifest m;
        if (name == "ingest") m = stage_ingest(ctx);
        else if (name == "filter") m = stage_filter(ctx);
        else if (name == "ppl") m = stage_ppl(ctx);
        else if (name == "dedup") m = stage_dedup(ctx);
        else if (name == "score") m = stage_score(ctx);
        else if (name == "tier") m = stage_tier(ctx);
        else if (name == "parallel-gate") m = stage_parallel_gate(ctx);
        else if (name == "mix") m = stage_mix(ctx);
        else if (name == "pack") m = stage_pack(ctx);
        else if (name == "arch") m = stage_arch(ctx, result.printed);
        else if (name == "schedule") m = stage_schedule(ctx, result.printed);
        else if (name == "sft-prep") m = stage_sft(ctx);
        else m = stage_eval(ctx, result.printed);
        result.manifest = m;
        if (fs::path mp = manifest_path(ctx); !mp.empty())
            write_file_atomic(mp, manifest_to_json(m).dump(2) + "\n");
        if (m.counts.count(kMalformed) || m.details.count(kMalformed)) {
            result.exit_code = kExitDataError;
            result.message = "malformed records skipped";
        }
    } catch (const ConfigError& e) {
        result.exit_code = kExitConfigError;
        result.message = e.what();
    } catch (const Error& e) {
        result.exit_code = kExitDataError;
        result.message = e.what();
    } catch (const std::exception& e) {
        result.exit_code = kExitDataError;
        result.message = e.what();
    }
    return result;
}

}  // namespace eurocurate
