#pragma once

// Learning-rate schedules, the RoPE-theta policy and transformer parameter
// accounting.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace eurocurate {

/// Linear warmup to peak, constant plateau, linear anneal to
/// floor_fraction * peak, linear decay to zero. Positions are in tokens.
struct TrapezoidSchedule {
    double peak_lr = 1.5e-4;
    std::int64_t warmup_tokens = 360'000'000'000;
    std::int64_t constant_until_tokens = 3'600'000'000'000;
    std::int64_t anneal_tokens = 400'000'000'000;
    double floor_fraction = 0.1;
    std::int64_t decay_tokens = 400'000'000'000;

    std::int64_t anneal_end() const { return constant_until_tokens + anneal_tokens; }
    std::int64_t total_tokens() const { return anneal_end() + decay_tokens; }
    /// peak * floor_fraction, snapped to 15 significant digits so decimal
    /// configs land on the decimal value (0.1 * 1.5e-4 -> 1.5e-5).
    double floor_lr() const;
};

/// Throws RangeError when the schedule shape is inconsistent.
void validate(const TrapezoidSchedule& s);

/// Named presets: "eurollm22b" (peak 1.5e-4) and "table1" (peak 3e-4, floor 3e-5).
TrapezoidSchedule schedule_preset(std::string_view name);

double lr_at(const TrapezoidSchedule& s, std::int64_t tokens);

/// 1 on [0, constant_until), 2 on [constant_until, anneal_end), 3 after.
int phase_at(const TrapezoidSchedule& s, std::int64_t tokens);

struct CosineSchedule {
    double max_lr = 1e-5;
    std::int64_t warmup_steps = 125;
    std::int64_t total_steps = 1125;
    double min_lr = 0.0;
};

void validate(const CosineSchedule& s);

double cosine_lr_at(const CosineSchedule& s, std::int64_t step);

/// 1e4 for phases 1-2, 1e6 for phase 3.
double rope_theta_for_phase(int phase);
/// 4096 for phases 1-2, 32768 for phase 3.
std::int64_t seq_len_for_phase(int phase);

struct ScheduleRow {
    std::int64_t tokens = 0;
    double lr = 0.0;
    int phase = 1;
    double rope_theta = 0.0;
    std::int64_t seq_len = 0;
};

/// Rows at every multiple of stride plus every breakpoint, sorted, unique.
std::vector<ScheduleRow> emit_schedule_table(const TrapezoidSchedule& s, std::int64_t stride_tokens);

/// Header `tokens,lr,phase,rope_theta,seq_len`; lr in shortest round-trip form.
std::string schedule_csv(const std::vector<ScheduleRow>& rows);

struct ArchConfig {
    std::string name;
    std::int64_t layers = 0;
    std::int64_t d_model = 0;
    std::int64_t ffn_hidden = 0;
    std::int64_t n_heads = 0;
    std::int64_t n_kv_heads = 0;
    std::int64_t vocab = 0;
    bool tied_embeddings = false;
    double rope_theta = 1e4;
    std::int64_t seq_len = 4096;
};

struct ParamBreakdown {
    std::int64_t embedding = 0;
    std::int64_t lm_head = 0;
    std::int64_t non_embedding = 0;
    std::int64_t total = 0;
};

/// "1.7b", "9b", "22b".
ArchConfig arch_preset(std::string_view name);
std::vector<std::string> arch_preset_names();

/// Pre-norm decoder with GQA, gated FFN, RMS gains and no biases.
ParamBreakdown param_count(const ArchConfig& a);

}  // namespace eurocurate
