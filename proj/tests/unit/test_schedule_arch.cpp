#include <doctest.h>

#include <cmath>

#include "eurocurate/errors.hpp"
#include "eurocurate/schedule_arch.hpp"

using namespace eurocurate;

TEST_CASE("trapezoid anchors") {
    auto s = schedule_preset("eurollm22b");
    CHECK(lr_at(s, 0) == 0.0);
    CHECK(lr_at(s, 360'000'000'000) == 1.5e-4);
    CHECK(lr_at(s, 3'600'000'000'000) == 1.5e-4);
    CHECK(lr_at(s, 4'000'000'000'000) == 1.5e-5);
    CHECK(lr_at(s, 4'400'000'000'000) == 0.0);
    CHECK(lr_at(s, 180'000'000'000) == doctest::Approx(0.75e-4));
    CHECK(lr_at(s, 3'800'000'000'000) == doctest::Approx(0.825e-4));
    CHECK_THROWS_AS(lr_at(s, -1), RangeError);
    CHECK_THROWS_AS(lr_at(s, 4'400'000'000'001), RangeError);
    auto t = schedule_preset("table1");
    CHECK(lr_at(t, 4'000'000'000'000) == 3e-5);
    CHECK_THROWS_AS(schedule_preset("nope"), ConfigError);
}

TEST_CASE("trapezoid shape") {
    auto s = schedule_preset("eurollm22b");
    double prev = -1;
    for (std::int64_t x = 0; x <= s.warmup_tokens; x += s.warmup_tokens / 97) {
        double v = lr_at(s, x);
        CHECK(v >= prev);
        prev = v;
    }
    prev = 1;
    for (std::int64_t x = s.constant_until_tokens; x <= s.total_tokens(); x += 7'000'000'001) {
        double v = lr_at(s, x);
        CHECK(v <= prev);
        CHECK(v <= s.peak_lr);
        CHECK(v >= 0.0);
        prev = v;
    }
}

TEST_CASE("phases, rope theta and seq_len") {
    auto s = schedule_preset("eurollm22b");
    CHECK(phase_at(s, 0) == 1);
    CHECK(phase_at(s, 3'599'999'999'999) == 1);
    CHECK(phase_at(s, 3'600'000'000'000) == 2);
    CHECK(phase_at(s, 4'000'000'000'000) == 3);
    CHECK(rope_theta_for_phase(1) == 1e4);
    CHECK(rope_theta_for_phase(3) == 1e6);
    CHECK(seq_len_for_phase(2) == 4096);
    CHECK(seq_len_for_phase(3) == 32768);
    CHECK_THROWS_AS(rope_theta_for_phase(4), RangeError);
}

TEST_CASE("validate rejects inconsistent shapes") {
    TrapezoidSchedule s;
    s.constant_until_tokens = s.warmup_tokens - 1;
    CHECK_THROWS_AS(validate(s), RangeError);
    TrapezoidSchedule f;
    f.floor_fraction = 1.0;
    CHECK_THROWS_AS(validate(f), RangeError);
}

TEST_CASE("cosine schedule") {
    CosineSchedule c;
    CHECK(cosine_lr_at(c, 0) == 0.0);
    CHECK(cosine_lr_at(c, 125) == 1e-5);
    CHECK(cosine_lr_at(c, 1125) == 0.0);
    CHECK(cosine_lr_at(c, 625) == doctest::Approx(0.5e-5));
    CHECK_THROWS_AS(cosine_lr_at(c, 1126), RangeError);
}

TEST_CASE("schedule table matches lr_at bit for bit") {
    auto s = schedule_preset("eurollm22b");
    auto rows = emit_schedule_table(s, 100'000'000'000);
    REQUIRE(!rows.empty());
    CHECK(rows.front().tokens == 0);
    CHECK(rows.back().tokens == s.total_tokens());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].lr == lr_at(s, rows[i].tokens));
        if (i) CHECK(rows[i - 1].tokens < rows[i].tokens);
    }
    bool has_breaks = false;
    for (const auto& r : rows) has_breaks |= r.tokens == s.warmup_tokens;
    CHECK(has_breaks);
    auto csv = schedule_csv(rows);
    CHECK(csv.rfind("tokens,lr,phase,rope_theta,seq_len\n0,0,1,", 0) == 0);
}

TEST_CASE("parameter counts") {
    CHECK(param_count(arch_preset("1.7b")).embedding == 262'144'000);
    CHECK(param_count(arch_preset("9b")).embedding == 524'288'000);
    auto within = [](std::int64_t got, double want) { return std::fabs(static_cast<double>(got) - want) / want <= 5e-4; };
    CHECK(within(param_count(arch_preset("1.7b")).total, 1.657e9));
    CHECK(within(param_count(arch_preset("9b")).total, 9.153e9));
    CHECK(within(param_count(arch_preset("22b")).total, 22.639e9));
    for (const auto& n : arch_preset_names()) {
        auto p = param_count(arch_preset(n));
        CHECK(p.total == p.embedding + p.lm_head + p.non_embedding);
    }
    auto tied = arch_preset("9b");
    tied.tied_embeddings = true;
    CHECK(param_count(tied).lm_head == 0);
    auto bad = arch_preset("9b");
    bad.n_kv_heads = 7;
    CHECK_THROWS_AS(param_count(bad), ArchError);
}
