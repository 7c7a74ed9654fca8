#include "eurocurate/schedule_arch.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "eurocurate/errors.hpp"
#include "eurocurate/text.hpp"

namespace eurocurate {
namespace {

// Linear interpolation that lands exactly on both endpoints.
double lerp(std::int64_t x0, double y0, std::int64_t x1, double y1, std::int64_t x) {
    if (x == x0) return y0;
    if (x == x1) return y1;
    const double t = static_cast<double>(x - x0) / static_cast<double>(x1 - x0);
    return y0 + (y1 - y0) * t;
}

}  // namespace

double TrapezoidSchedule::floor_lr() const { return text::round_significant(peak_lr * floor_fraction, 15); }

void validate(const TrapezoidSchedule& s) {
    if (!(s.peak_lr > 0.0)) throw RangeError("peak_lr must be positive");
    if (s.warmup_tokens <= 0) throw RangeError("warmup_tokens must be positive");
    if (s.constant_until_tokens < s.warmup_tokens) throw RangeError("constant_until_tokens must be >= warmup_tokens");
    if (s.anneal_tokens <= 0) throw RangeError("anneal_tokens must be positive");
    if (s.decay_tokens <= 0) throw RangeError("decay_tokens must be positive");
    if (!(s.floor_fraction > 0.0 && s.floor_fraction < 1.0)) throw RangeError("floor_fraction must lie in (0,1)");
}

TrapezoidSchedule schedule_preset(std::string_view name) {
    TrapezoidSchedule s;
    if (name == "eurollm22b") return s;
    if (name == "table1") {
        s.peak_lr = 3e-4;
        return s;
    }
    throw ConfigError("unknown schedule preset '" + std::string(name) + "'");
}

double lr_at(const TrapezoidSchedule& s, std::int64_t tokens) {
    validate(s);
    if (tokens < 0 || tokens > s.total_tokens())
        throw RangeError("token position " + std::to_string(tokens) + " outside [0, " +
                         std::to_string(s.total_tokens()) + "]");
    const double floor = s.floor_lr();
    if (tokens <= s.warmup_tokens) return lerp(0, 0.0, s.warmup_tokens, s.peak_lr, tokens);
    if (tokens <= s.constant_until_tokens) return s.peak_lr;
    if (tokens <= s.anneal_end()) return lerp(s.constant_until_tokens, s.peak_lr, s.anneal_end(), floor, tokens);
    return lerp(s.anneal_end(), floor, s.total_tokens(), 0.0, tokens);
}

int phase_at(const TrapezoidSchedule& s, std::int64_t tokens) {
    if (tokens < s.constant_until_tokens) return 1;
    if (tokens < s.anneal_end()) return 2;
    return 3;
}

void validate(const CosineSchedule& s) {
    if (!(s.max_lr > 0.0)) throw RangeError("max_lr must be positive");
    if (s.warmup_steps <= 0) throw RangeError("warmup_steps must be positive");
    if (s.total_steps <= s.warmup_steps) throw RangeError("total_steps must exceed warmup_steps");
    if (!(s.min_lr >= 0.0 && s.min_lr <= s.max_lr)) throw RangeError("min_lr must lie in [0, max_lr]");
}

double cosine_lr_at(const CosineSchedule& s, std::int64_t step) {
    validate(s);
    if (step < 0 || step > s.total_steps) throw RangeError("step outside [0, total_steps]");
    if (step <= s.warmup_steps) return lerp(0, 0.0, s.warmup_steps, s.max_lr, step);
    if (step == s.total_steps) return s.min_lr;
    const double progress =
        static_cast<double>(step - s.warmup_steps) / static_cast<double>(s.total_steps - s.warmup_steps);
    return s.min_lr + 0.5 * (s.max_lr - s.min_lr) * (1.0 + std::cos(std::numbers::pi * progress));
}

double rope_theta_for_phase(int phase) {
    if (phase < 1 || phase > 3) throw RangeError("phase must be 1, 2 or 3");
    return phase == 3 ? 1e6 : 1e4;
}

std::int64_t seq_len_for_phase(int phase) {
    if (phase < 1 || phase > 3) throw RangeError("phase must be 1, 2 or 3");
    return phase == 3 ? 32768 : 4096;
}

std::vector<ScheduleRow> emit_schedule_table(const TrapezoidSchedule& s, std::int64_t stride_tokens) {
    validate(s);
    if (stride_tokens <= 0) throw RangeError("stride must be positive");
    std::vector<std::int64_t> xs = {0, s.warmup_tokens, s.constant_until_tokens, s.anneal_end(), s.total_tokens()};
    for (std::int64_t x = 0; x <= s.total_tokens(); x += stride_tokens) {
        xs.push_back(x);
        if (x > s.total_tokens() - stride_tokens) break;
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::vector<ScheduleRow> rows;
    rows.reserve(xs.size());
    for (auto x : xs) {
        const int phase = phase_at(s, x);
        rows.push_back({x, lr_at(s, x), phase, rope_theta_for_phase(phase), seq_len_for_phase(phase)});
    }
    return rows;
}

std::string schedule_csv(const std::vector<ScheduleRow>& rows) {
    std::string out = "tokens,lr,phase,rope_theta,seq_len\n";
    for (const auto& r : rows) {
        out += std::to_string(r.tokens) + "," + text::format_double(r.lr) + "," + std::to_string(r.phase) + "," +
               text::format_double(r.rope_theta) + "," + std::to_string(r.seq_len) + "\n";
    }
    return out;
}

ArchConfig arch_preset(std::string_view name) {
    if (name == "1.7b") return {"1.7b", 24, 2048, 5632, 16, 8, 128000, false, 1e4, 4096};
    if (name == "9b") return {"9b", 42, 4096, 12288, 32, 8, 128000, false, 1e4, 4096};
    if (name == "22b") return {"22b", 54, 6144, 16384, 48, 8, 128000, false, 1e6, 32768};
    throw ConfigError("unknown architecture preset '" + std::string(name) + "'");
}

std::vector<std::string> arch_preset_names() { return {"1.7b", "9b", "22b"}; }

ParamBreakdown param_count(const ArchConfig& a) {
    if (a.layers <= 0 || a.d_model <= 0 || a.ffn_hidden <= 0 || a.n_heads <= 0 || a.n_kv_heads <= 0 || a.vocab <= 0)
        throw ArchError("architecture dimensions must be positive");
    if (a.d_model % a.n_heads != 0) throw ArchError("d_model must be divisible by n_heads");
    if (a.n_heads % a.n_kv_heads != 0) throw ArchError("n_heads must be divisible by n_kv_heads");
    const std::int64_t head_dim = a.d_model / a.n_heads;
    const std::int64_t kv_dim = head_dim * a.n_kv_heads;
    const std::int64_t attention = 2 * a.d_model * a.d_model + 2 * a.d_model * kv_dim;
    const std::int64_t ffn = 3 * a.d_model * a.ffn_hidden;
    const std::int64_t norms = 2 * a.d_model;
    ParamBreakdown p;
    p.non_embedding = a.layers * (attention + ffn + norms) + a.d_model;
    p.embedding = a.vocab * a.d_model;
    p.lm_head = a.tied_embeddings ? 0 : a.vocab * a.d_model;
    p.total = p.embedding + p.lm_head + p.non_embedding;
    return p;
}

}  // namespace eurocurate
