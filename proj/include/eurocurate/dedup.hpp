#pragma once

// Exact, paragraph-level and MinHash near-duplicate removal. Every mode
// keeps the record with the lexicographically smallest id, so results do
// not depend on input order or sharding.

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "eurocurate/corpus_model.hpp"

namespace eurocurate {

struct DedupKey {
    std::uint64_t digest = 0;
    bool operator==(const DedupKey&) const = default;
};

struct DedupKeyHash {
    std::size_t operator()(const DedupKey& k) const noexcept { return static_cast<std::size_t>(k.digest); }
};

/// Lowercase, strip accents (NFD + drop nonspacing marks), drop digits,
/// punctuation and symbols, collapse whitespace, trim.
std::string normalize(std::string_view text);

DedupKey text_key(std::string_view text);
DedupKey normalized_key(std::string_view text);

/// (survivor_id, dropped_id) side-output lines.
using DuplicateLinks = std::vector<std::pair<std::string, std::string>>;

inline constexpr const char* kDuplicate = "duplicate";

template <typename T>
struct DedupResult {
    std::vector<T> records;
    Manifest manifest;
    DuplicateLinks links;
};

/// Map from key to the smallest id carrying it. Built per shard, then merged;
/// merging is the only synchronization point.
class DedupIndex {
public:
    void add(const DedupKey& key, const std::string& id);
    void merge(const DedupIndex& other);
    /// Smallest id seen for `key`, or nullptr.
    const std::string* owner(const DedupKey& key) const;
    std::size_t size() const { return owner_.size(); }

private:
    std::unordered_map<DedupKey, std::string, DedupKeyHash> owner_;
};

using DocumentKeyFn = std::function<DedupKey(const Document&)>;

DedupResult<Document> exact_dedup(const std::vector<Document>& records, const DocumentKeyFn& key_of);
DedupResult<ParallelPair> pair_dedup(const std::vector<ParallelPair>& pairs);

/// Drops paragraphs already present in a document with a smaller id (or
/// earlier in the same document). Documents left empty are rejected.
DedupResult<Document> paragraph_dedup(const std::vector<Document>& records);

struct MinHashSignature {
    std::uint64_t seed = 0;
    std::size_t shingle_len = 0;
    /// True for the empty shingle set; values are then all sentinel.
    bool empty = false;
    std::vector<std::uint64_t> values;

    std::size_t n_hashes() const { return values.size(); }
    bool operator==(const MinHashSignature&) const = default;
};

/// Distinct character shingles (code points) of normalize(text).
std::vector<std::string> shingles(std::string_view text, std::size_t shingle_len);

MinHashSignature minhash_signature(std::string_view text, std::size_t shingle_len, std::size_t n_hashes,
                                   std::uint64_t seed);
MinHashSignature minhash_of_shingles(const std::vector<std::string>& shingle_set, std::size_t shingle_len,
                                     std::size_t n_hashes, std::uint64_t seed);

double jaccard_estimate(const MinHashSignature& a, const MinHashSignature& b);

struct NearDedupParams {
    std::size_t bands = 16;
    std::size_t rows = 8;
    double threshold = 0.8;
    std::size_t shingle_len = 5;
    std::uint64_t seed = 0;
};

/// Banded LSH candidates confirmed by jaccard_estimate >= threshold; clusters
/// are connected components of confirmed pairs. Documents whose shingle set
/// is empty never join a cluster.
DedupResult<Document> near_dedup(const std::vector<Document>& records, const NearDedupParams& params);

}  // namespace eurocurate
