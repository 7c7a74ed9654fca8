#pragma once

// Random normalized backoff models plus a dense linear-space copy of the
// conditional distributions they encode. The dense tables are built from
// the generating parameters, not from the ARPA text, so they serve as an
// independent oracle for log_prob and perplexity.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace fixture {

struct ArpaFixture {
    int order = 1;
    /// Predictable words; the last one is "<unk>". "<s>" is separate.
    std::vector<std::string> words;
    std::string arpa;

    /// cond[h] for a history h (token ids, length < order; <s> has id
    /// words.size()) -> distribution over words, in linear space.
    std::map<std::vector<int>, std::vector<long double>> cond;

    int sos() const { return static_cast<int>(words.size()); }
    int id_of(const std::string& token) const;

    /// Chain-rule probability of the sequence (history starts at <s>),
    /// returned as perplexity.
    long double oracle_perplexity(const std::vector<std::string>& tokens) const;
};

ArpaFixture make_arpa_fixture(int order, std::size_t vocab, std::uint64_t seed);

/// Uniform unigram model over `vocab` words (no <unk>, no <s>).
std::string uniform_arpa(std::size_t vocab);

}  // namespace fixture
