#pragma once

// Phase plans, budgeted mixture sampling, repository gating and fixed-length
// sequence packing.

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "eurocurate/corpus_model.hpp"

namespace eurocurate {

struct PhaseSpec {
    std::int64_t tokens = 0;
    /// Source name -> weight; weights sum to 1.
    std::map<std::string, double> mixture;
    std::int64_t seq_len = 4096;
};

struct PhasePlan {
    std::array<PhaseSpec, 3> phases;
    std::int64_t longctx_tokens = 60'000'000'000;
    std::map<std::string, double> longctx_split = {{"books", 0.5}, {"code", 0.5}};

    std::int64_t final_tokens() const { return phases[2].tokens; }
};

/// 3.6T phase-1 tokens, 400B anneal, caller-chosen final phase, 60B long
/// context. Mixture weights are placeholders, not published proportions.
PhasePlan default_plan(std::int64_t final_tokens);

struct PlanViolation {
    std::string field;
    std::string rule;
    bool operator==(const PlanViolation&) const = default;
};

std::vector<PlanViolation> validate_plan(const PhasePlan& plan);

/// Pull-based record stream.
class RecordSource {
public:
    virtual ~RecordSource() = default;
    virtual std::optional<Document> next() = 0;
};

class VectorSource final : public RecordSource {
public:
    explicit VectorSource(std::vector<Document> docs) : docs_(std::move(docs)) {}
    std::optional<Document> next() override {
        if (pos_ >= docs_.size()) return std::nullopt;
        return docs_[pos_++];
    }

private:
    std::vector<Document> docs_;
    std::size_t pos_ = 0;
};

using SourceMap = std::map<std::string, std::unique_ptr<RecordSource>>;
using MixSink = std::function<void(const std::string& source, const Document& doc)>;

struct MixReport {
    Manifest manifest;
    std::map<std::string, std::int64_t> tokens_by_source;
    std::int64_t tokens_emitted = 0;
};

/// Deterministic weighted interleave: each step draws from the source whose
/// emitted tokens per unit weight is smallest (ties broken by a seeded
/// order). An exhausted source drops out and the remaining weights are
/// renormalized proportionally. Throws BudgetShortfall if every source runs
/// dry first.
MixReport sample_mixture(SourceMap& sources, const std::map<std::string, double>& weights,
                         std::int64_t budget_tokens, std::uint64_t seed, const MixSink& sink);

struct RepoMeta {
    std::string repo_id;
    std::int64_t stars = 0;
    std::int64_t forks = 0;
};

/// stars >= 500 and forks >= 100.
inline bool repo_gate(const RepoMeta& meta) { return meta.stars >= 500 && meta.forks >= 100; }

/// Reads `repo_id<TAB>stars<TAB>forks` lines.
std::vector<RepoMeta> load_repo_table(const std::string& path);

/// Integer token budget per long-context category (largest remainder).
std::map<std::string, std::int64_t> longctx_quota(const PhasePlan& plan);

struct TokenizedDoc {
    std::string id;
    std::vector<std::int32_t> tokens;
};

struct DocSpan {
    std::size_t start = 0;
    std::size_t end = 0;  // exclusive
    std::string doc_id;
    bool operator==(const DocSpan&) const = default;
};

struct PackedSequence {
    std::vector<std::int32_t> tokens;
    std::vector<DocSpan> doc_spans;
};

/// Streaming packer: documents are concatenated in order, each followed by
/// one separator token, and the stream is cut into seq_len windows. The
/// incomplete final window is dropped by finish().
class SequencePacker {
public:
    using Sink = std::function<void(PackedSequence&&)>;

    SequencePacker(std::size_t seq_len, std::int32_t sep_token, Sink sink);

    void push(const TokenizedDoc& doc);
    /// Returns the number of tokens dropped from the incomplete tail.
    std::size_t finish();

    std::size_t emitted_sequences() const { return emitted_; }

private:
    void put(std::int32_t token);

    std::size_t seq_len_;
    std::int32_t sep_;
    Sink sink_;
    PackedSequence current_;
    std::size_t emitted_ = 0;
};

struct PackResult {
    std::vector<PackedSequence> sequences;
    std::size_t dropped_tokens = 0;
};

PackResult pack_sequences(const std::vector<TokenizedDoc>& docs, std::size_t seq_len, std::int32_t sep_token);

/// Stand-in tokenizer: whitespace tokens hashed into [1, vocab_size); 0 is
/// left free for the separator.
std::vector<std::int32_t> hash_tokenize(std::string_view text, std::int32_t vocab_size);

/// Binary sequence file: u32 seq_len, u64 count, then count*seq_len
/// little-endian i32 token ids.
class PackedWriter {
public:
    PackedWriter(std::ostream& out, std::uint32_t seq_len);
    void write(const PackedSequence& seq);
    /// Patches the count in the header; the stream must be seekable.
    void close();
    std::uint64_t count() const { return count_; }

private:
    std::ostream& out_;
    std::uint32_t seq_len_;
    std::uint64_t count_ = 0;
};

struct PackedFile {
    std::uint32_t seq_len = 0;
    std::vector<std::vector<std::int32_t>> sequences;
};

PackedFile read_packed(const std::string& path);

}  // namespace eurocurate
