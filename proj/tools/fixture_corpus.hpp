#pragma once

// Deterministic synthetic corpus for end-to-end runs: a JSONL shard, one
// unigram ARPA model per language and a pipeline config wiring them up.

#include <cstdint>
#include <filesystem>

namespace eurocurate::fixture {

struct FixtureSpec {
    std::filesystem::path dir;
    std::uint64_t seed = 7;
    std::size_t target_bytes = 50u << 20;
};

struct FixtureFiles {
    std::filesystem::path corpus;
    std::filesystem::path config;
    std::filesystem::path models;
    std::size_t documents = 0;
    std::size_t bytes = 0;
};

FixtureFiles write_fixture(const FixtureSpec& spec);

}  // namespace eurocurate::fixture
