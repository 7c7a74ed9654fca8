#include "eurocurate/mixer_packer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "eurocurate/text.hpp"

namespace eurocurate {
namespace {

constexpr double kSumTolerance = 1e-9;

template <typename T>
void put_le(std::ostream& out, T v) {
    char buf[sizeof(T)];
    auto u = static_cast<std::make_unsigned_t<T>>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((u >> (8 * i)) & 0xFF);
    out.write(buf, sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
    unsigned char buf[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw FormatError("truncated packed file");
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<std::make_unsigned_t<T>>(buf[i]) << (8 * i);
    return static_cast<T>(u);
}

}  // namespace

PhasePlan default_plan(std::int64_t final_tokens) {
    PhasePlan plan;
    plan.phases[0] = {3'600'000'000'000,
                      {{"web", 0.70}, {"parallel", 0.10}, {"code_math", 0.15}, {"high_quality", 0.05}},
                      4096};
    plan.phases[1] = {400'000'000'000,
                      {{"web", 0.55}, {"parallel", 0.15}, {"code_math", 0.20}, {"high_quality", 0.10}},
                      4096};
    plan.phases[2] = {final_tokens,
                      {{"web", 0.45}, {"parallel", 0.15}, {"code_math", 0.20}, {"high_quality", 0.20}},
                      32768};
    return plan;
}

std::vector<PlanViolation> validate_plan(const PhasePlan& plan) {
    std::vector<PlanViolation> v;
    for (std::size_t p = 0; p < plan.phases.size(); ++p) {
        const auto& ph = plan.phases[p];
        const std::string prefix = "phase" + std::to_string(p + 1);
        if (ph.tokens <= 0) v.push_back({prefix + ".tokens", "positive_tokens"});
        if (ph.seq_len < 2) v.push_back({prefix + ".seq_len", "seq_len"});
        double sum = 0.0;
        bool negative = false;
        for (const auto& [_, w] : ph.mixture) {
            if (!(w >= 0.0)) negative = true;
            sum += w;
        }
        if (negative) v.push_back({prefix + ".mixture", "negative_weight"});
        if (std::abs(sum - 1.0) > kSumTolerance) v.push_back({prefix + ".mixture", "mixture_sum"});
    }
    if (plan.longctx_tokens < 0) v.push_back({"longctx_tokens", "longctx_budget"});
    if (plan.longctx_tokens > plan.final_tokens()) v.push_back({"longctx_tokens", "longctx_budget"});
    double split = 0.0;
    bool negative = false;
    for (const auto& [_, f] : plan.longctx_split) {
        if (!(f >= 0.0)) negative = true;
        split += f;
    }
    if (negative) v.push_back({"longctx_split", "negative_weight"});
    if (std::abs(split - 1.0) > kSumTolerance) v.push_back({"longctx_split", "split_sum"});
    return v;
}

MixReport sample_mixture(SourceMap& sources, const std::map<std::string, double>& weights,
                         std::int64_t budget_tokens, std::uint64_t seed, const MixSink& sink) {
    if (budget_tokens <= 0) throw ConfigError("mixture budget must be positive");
    for (const auto& [name, _] : sources) {
        if (!weights.contains(name)) throw ConfigError("no mixture weight for source '" + name + "'");
    }
    for (const auto& [name, w] : weights) {
        if (!sources.contains(name)) throw ConfigError("mixture weight for unknown source '" + name + "'");
        if (!(w >= 0.0)) throw ConfigError("negative mixture weight for '" + name + "'");
    }

    struct Lane {
        std::string name;
        RecordSource* stream;
        double weight;
        std::int64_t emitted = 0;
        std::size_t tie_rank = 0;
        bool active = true;
    };
    std::vector<Lane> lanes;
    for (auto& [name, stream] : sources) lanes.push_back({name, stream.get(), weights.at(name)});
    std::vector<std::size_t> order(lanes.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t r = 0; r < order.size(); ++r) lanes[order[r]].tie_rank = r;
    for (auto& l : lanes) l.active = l.weight > 0.0;

    MixReport rep;
    rep.manifest.stage = "mix";
    while (rep.tokens_emitted < budget_tokens) {
        Lane* pick = nullptr;
        for (auto& l : lanes) {
            if (!l.active) continue;
            if (!pick) {
                pick = &l;
                continue;
            }
            // Compare emitted/weight without dividing.
            const long double lhs = static_cast<long double>(l.emitted) * pick->weight;
            const long double rhs = static_cast<long double>(pick->emitted) * l.weight;
            if (lhs < rhs || (lhs == rhs && l.tie_rank < pick->tie_rank)) pick = &l;
        }
        if (!pick) {
            for (const auto& l : lanes) rep.tokens_by_source[l.name] = l.emitted;
            throw BudgetShortfall(rep.tokens_emitted);
        }
        auto doc = pick->stream->next();
        if (!doc) {
            pick->active = false;
            std::string remaining;
            double rest = 0.0;
            for (const auto& l : lanes) {
                if (l.active) rest += l.weight;
            }
            for (const auto& l : lanes) {
                if (!l.active) continue;
                if (!remaining.empty()) remaining += ", ";
                remaining += l.name + "=" + text::format_double(l.weight / rest);
            }
            rep.manifest.notes.push_back("source '" + pick->name + "' exhausted after " +
                                         std::to_string(rep.tokens_emitted) + " tokens; renormalized weights: " +
                                         (remaining.empty() ? "none" : remaining));
            continue;
        }
        const std::int64_t n = token_count_of(*doc);
        pick->emitted += n;
        rep.tokens_emitted += n;
        rep.manifest.accept();
        rep.manifest.details["records." + pick->name] += 1;
        sink(pick->name, *doc);
    }
    for (const auto& l : lanes) rep.tokens_by_source[l.name] = l.emitted;
    for (const auto& [name, n] : rep.tokens_by_source) rep.manifest.details["tokens." + name] = static_cast<std::uint64_t>(n);
    return rep;
}

std::vector<RepoMeta> load_repo_table(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open repository table " + path);
    std::vector<RepoMeta> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = text::split(line, '\t');
        if (f.size() != 3) throw ParseError("repository table line " + std::to_string(line_no) + " needs 3 fields", 0);
        try {
            RepoMeta m{std::string(f[0]), std::stoll(std::string(f[1])), std::stoll(std::string(f[2]))};
            if (m.stars < 0 || m.forks < 0) throw std::out_of_range("negative");
            out.push_back(std::move(m));
        } catch (const std::exception&) {
            throw ParseError("repository table line " + std::to_string(line_no) + " has bad counts", 0);
        }
    }
    return out;
}

std::map<std::string, std::int64_t> longctx_quota(const PhasePlan& plan) {
    std::map<std::string, std::int64_t> out;
    struct Part {
        std::string name;
        long double frac;
    };
    std::vector<Part> rema;
    std::int64_t assigned = 0;
    for (const auto& [name, f] : plan.longctx_split) {
        const long double exact = static_cast<long double>(plan.longctx_tokens) * f;
        const auto whole = static_cast<std::int64_t>(std::floor(exact));
        out[name] = whole;
        assigned += whole;
        rema.push_back({name, exact - whole});
    }
    std::stable_sort(rema.begin(), rema.end(), [](const Part& a, const Part& b) { return a.frac > b.frac; });
    std::int64_t left = plan.longctx_tokens - assigned;
    for (std::size_t i = 0; left > 0 && !rema.empty(); --left) {
        out[rema[i].name] += 1;
        i = (i + 1) % rema.size();
    }
    return out;
}

SequencePacker::SequencePacker(std::size_t seq_len, std::int32_t sep_token, Sink sink)
    : seq_len_(seq_len), sep_(sep_token), sink_(std::move(sink)) {
    if (seq_len_ < 2) throw ConfigError("seq_len must be at least 2");
    current_.tokens.reserve(seq_len_);
}

void SequencePacker::put(std::int32_t token) {
    current_.tokens.push_back(token);
    if (current_.tokens.size() == seq_len_) {
        sink_(std::move(current_));
        ++emitted_;
        current_ = PackedSequence{};
        current_.tokens.reserve(seq_len_);
    }
}

void SequencePacker::push(const TokenizedDoc& doc) {
    if (doc.tokens.empty()) throw PackError(doc.id);
    std::size_t i = 0;
    while (i < doc.tokens.size()) {
        const std::size_t start = current_.tokens.size();
        const std::size_t take = std::min(seq_len_ - start, doc.tokens.size() - i);
        current_.doc_spans.push_back({start, start + take, doc.id});
        for (std::size_t k = 0; k < take; ++k) put(doc.tokens[i + k]);
        i += take;
    }
    put(sep_);
}

std::size_t SequencePacker::finish() {
    const std::size_t dropped = current_.tokens.size();
    current_ = PackedSequence{};
    return dropped;
}

PackResult pack_sequences(const std::vector<TokenizedDoc>& docs, std::size_t seq_len, std::int32_t sep_token) {
    PackResult res;
    SequencePacker packer(seq_len, sep_token, [&](PackedSequence&& s) { res.sequences.push_back(std::move(s)); });
    for (const auto& d : docs) packer.push(d);
    res.dropped_tokens = packer.finish();
    return res;
}

std::vector<std::int32_t> hash_tokenize(std::string_view text, std::int32_t vocab_size) {
    if (vocab_size < 2) throw ConfigError("vocab_size must be at least 2");
    std::vector<std::int32_t> out;
    for (auto w : text::split_whitespace(text)) {
        out.push_back(static_cast<std::int32_t>(1 + text::hash64(w) % static_cast<std::uint64_t>(vocab_size - 1)));
    }
    return out;
}

PackedWriter::PackedWriter(std::ostream& out, std::uint32_t seq_len) : out_(out), seq_len_(seq_len) {
    put_le<std::uint32_t>(out_, seq_len_);
    put_le<std::uint64_t>(out_, 0);
}

void PackedWriter::write(const PackedSequence& seq) {
    if (seq.tokens.size() != seq_len_) throw PackError("sequence length mismatch");
    for (auto t : seq.tokens) put_le<std::int32_t>(out_, t);
    ++count_;
}

void PackedWriter::close() {
    out_.seekp(sizeof(std::uint32_t));
    put_le<std::uint64_t>(out_, count_);
    out_.seekp(0, std::ios::end);
    out_.flush();
}

PackedFile read_packed(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open packed file " + path);
    PackedFile f;
    f.seq_len = get_le<std::uint32_t>(in);
    const auto count = get_le<std::uint64_t>(in);
    f.sequences.resize(count);
    for (auto& s : f.sequences) {
        s.resize(f.seq_len);
        for (auto& t : s) t = get_le<std::int32_t>(in);
    }
    if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes in packed file");
    return f;
}

}  // namespace eurocurate
