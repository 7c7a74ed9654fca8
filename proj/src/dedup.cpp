#include "eurocurate/dedup.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_set>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "eurocurate/text.hpp"

namespace eurocurate {
namespace {

constexpr std::uint64_t kSentinel = std::numeric_limits<std::uint64_t>::max();

const icu::Normalizer2& nfd() {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFDInstance(status);
    if (U_FAILURE(status) || n == nullptr) throw Error("ICU NFD normalizer unavailable");
    return *n;
}

template <typename T>
void check_unique_ids(const std::vector<T>& records) {
    std::unordered_set<std::string_view> seen;
    seen.reserve(records.size());
    for (const auto& r : records) {
        if (!seen.insert(r.id).second) throw DedupError("duplicate id '" + r.id + "'");
    }
}

template <typename T, typename KeyFn>
DedupResult<T> dedup_by_key(const std::vector<T>& records, KeyFn key_of, const char* stage) {
    check_unique_ids(records);
    std::vector<DedupKey> keys;
    keys.reserve(records.size());
    DedupIndex index;
    for (const auto& r : records) {
        keys.push_back(key_of(r));
        index.add(keys.back(), r.id);
    }
    DedupResult<T> out;
    out.manifest.stage = stage;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const std::string& owner = *index.owner(keys[i]);
        if (owner == records[i].id) {
            out.records.push_back(records[i]);
            out.manifest.accept();
        } else {
            out.links.emplace_back(owner, records[i].id);
            out.manifest.reject(kDuplicate);
        }
    }
    std::sort(out.links.begin(), out.links.end());
    return out;
}

std::uint64_t hash_seed(std::uint64_t seed, std::size_t i) {
    return text::splitmix64(text::splitmix64(seed) + static_cast<std::uint64_t>(i));
}

struct DisjointSet {
    std::vector<std::size_t> parent;
    explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

std::string normalize(std::string_view input) {
    const std::string lowered = text::to_lower(input);
    UErrorCode status = U_ZERO_ERROR;
    const icu::UnicodeString decomposed =
        nfd().normalize(icu::UnicodeString::fromUTF8(icu::StringPiece(lowered.data(), lowered.size())), status);
    if (U_FAILURE(status)) throw Error("ICU normalization failed");

    std::string out;
    out.reserve(lowered.size());
    bool pending_space = false;
    for (int32_t i = 0; i < decomposed.length();) {
        const UChar32 c = decomposed.char32At(i);
        i += U16_LENGTH(c);
        if (text::is_space(static_cast<char32_t>(c))) {
            pending_space = true;
            continue;
        }
        const auto type = static_cast<UCharCategory>(u_charType(c));
        switch (type) {
            case U_NON_SPACING_MARK:
            case U_DECIMAL_DIGIT_NUMBER:
            case U_CONTROL_CHAR:
            case U_FORMAT_CHAR:
            case U_DASH_PUNCTUATION:
            case U_START_PUNCTUATION:
            case U_END_PUNCTUATION:
            case U_CONNECTOR_PUNCTUATION:
            case U_OTHER_PUNCTUATION:
            case U_INITIAL_PUNCTUATION:
            case U_FINAL_PUNCTUATION:
            case U_MATH_SYMBOL:
            case U_CURRENCY_SYMBOL:
            case U_MODIFIER_SYMBOL:
            case U_OTHER_SYMBOL:
                continue;
            default:
                break;
        }
        if (pending_space && !out.empty()) out += ' ';
        pending_space = false;
        text::append_utf8(out, static_cast<char32_t>(c));
    }
    return out;
}

DedupKey text_key(std::string_view text) { return {text::hash64(text)}; }
DedupKey normalized_key(std::string_view text) { return {text::hash64(normalize(text))}; }

void DedupIndex::add(const DedupKey& key, const std::string& id) {
    auto [it, inserted] = owner_.try_emplace(key, id);
    if (!inserted && id < it->second) it->second = id;
}

void DedupIndex::merge(const DedupIndex& other) {
    for (const auto& [k, id] : other.owner_) add(k, id);
}

const std::string* DedupIndex::owner(const DedupKey& key) const {
    auto it = owner_.find(key);
    return it == owner_.end() ? nullptr : &it->second;
}

DedupResult<Document> exact_dedup(const std::vector<Document>& records, const DocumentKeyFn& key_of) {
    return dedup_by_key(records, key_of, "dedup");
}

DedupResult<ParallelPair> pair_dedup(const std::vector<ParallelPair>& pairs) {
    return dedup_by_key(
        pairs,
        [](const ParallelPair& p) { return text_key(normalize(p.src_text) + '\t' + normalize(p.tgt_text)); },
        "pair_dedup");
}

DedupResult<Document> paragraph_dedup(const std::vector<Document>& records) {
    check_unique_ids(records);
    DedupIndex index;
    for (const auto& d : records) {
        for (auto para : text::split(d.text, '\n')) {
            const std::string norm = normalize(para);
            if (!norm.empty()) index.add(text_key(norm), d.id);
        }
    }
    DedupResult<Document> out;
    out.manifest.stage = "dedup";
    for (const auto& d : records) {
        std::unordered_set<std::uint64_t> seen_here;
        std::string kept;
        bool any = false;
        std::uint64_t removed = 0;
        for (auto para : text::split(d.text, '\n')) {
            const std::string norm = normalize(para);
            if (!norm.empty()) {
                const DedupKey k = text_key(norm);
                if (*index.owner(k) != d.id || !seen_here.insert(k.digest).second) {
                    ++removed;
                    continue;
                }
            }
            if (any) kept += '\n';
            kept.append(para);
            any = true;
        }
        out.manifest.details["removed_paragraphs"] += removed;
        if (text::trim(kept).empty()) {
            out.manifest.reject("duplicate_paragraphs");
            continue;
        }
        Document copy = d;
        copy.text = std::move(kept);
        if (removed > 0) copy.token_count.reset();
        out.records.push_back(std::move(copy));
        out.manifest.accept();
    }
    return out;
}

std::vector<std::string> shingles(std::string_view text, std::size_t shingle_len) {
    if (shingle_len < 1) throw SignatureError("shingle_len must be >= 1");
    const auto cps = text::decode_utf8(normalize(text));
    std::set<std::string> uniq;
    for (std::size_t i = 0; i + shingle_len <= cps.size(); ++i) {
        uniq.insert(text::encode_utf8(std::u32string_view(cps).substr(i, shingle_len)));
    }
    return {uniq.begin(), uniq.end()};
}

MinHashSignature minhash_of_shingles(const std::vector<std::string>& shingle_set, std::size_t shingle_len,
                                     std::size_t n_hashes, std::uint64_t seed) {
    if (n_hashes < 1) throw SignatureError("n_hashes must be >= 1");
    MinHashSignature sig;
    sig.seed = seed;
    sig.shingle_len = shingle_len;
    sig.values.assign(n_hashes, kSentinel);
    sig.empty = shingle_set.empty();
    if (sig.empty) return sig;

    std::vector<std::uint64_t> seeds(n_hashes);
    for (std::size_t i = 0; i < n_hashes; ++i) seeds[i] = hash_seed(seed, i);
    for (const auto& s : shingle_set) {
        const std::uint64_t base = text::hash64(s);
        for (std::size_t i = 0; i < n_hashes; ++i) {
            const std::uint64_t h = text::splitmix64(base ^ seeds[i]);
            if (h < sig.values[i]) sig.values[i] = h;
        }
    }
    return sig;
}

MinHashSignature minhash_signature(std::string_view text, std::size_t shingle_len, std::size_t n_hashes,
                                   std::uint64_t seed) {
    return minhash_of_shingles(shingles(text, shingle_len), shingle_len, n_hashes, seed);
}

double jaccard_estimate(const MinHashSignature& a, const MinHashSignature& b) {
    if (a.seed != b.seed || a.n_hashes() != b.n_hashes() || a.shingle_len != b.shingle_len)
        throw SignatureError("signatures built with different parameters");
    if (a.empty || b.empty) return a.empty && b.empty ? 1.0 : 0.0;
    std::size_t agree = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) agree += a.values[i] == b.values[i];
    return static_cast<double>(agree) / static_cast<double>(a.values.size());
}

DedupResult<Document> near_dedup(const std::vector<Document>& records, const NearDedupParams& p) {
    if (p.bands < 1 || p.rows < 1) throw SignatureError("bands and rows must be positive");
    if (!(p.threshold >= 0.0 && p.threshold <= 1.0)) throw SignatureError("threshold must lie in [0,1]");
    check_unique_ids(records);
    const std::size_t n_hashes = p.bands * p.rows;

    std::vector<MinHashSignature> sigs;
    sigs.reserve(records.size());
    for (const auto& d : records) sigs.push_back(minhash_signature(d.text, p.shingle_len, n_hashes, p.seed));

    DisjointSet clusters(records.size());
    std::set<std::pair<std::size_t, std::size_t>> compared;
    for (std::size_t b = 0; b < p.bands; ++b) {
        std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
        for (std::size_t i = 0; i < sigs.size(); ++i) {
            if (sigs[i].empty) continue;
            std::uint64_t h = text::splitmix64(b);
            for (std::size_t r = 0; r < p.rows; ++r) h = text::splitmix64(h ^ sigs[i].values[b * p.rows + r]);
            buckets[h].push_back(i);
        }
        for (const auto& [_, members] : buckets) {
            for (std::size_t x = 0; x < members.size(); ++x) {
                for (std::size_t y = x + 1; y < members.size(); ++y) {
                    const auto i = members[x];
                    const auto j = members[y];
                    if (!compared.emplace(i, j).second) continue;
                    if (jaccard_estimate(sigs[i], sigs[j]) >= p.threshold) clusters.unite(i, j);
                }
            }
        }
    }

    // Smallest id per cluster root.
    std::unordered_map<std::size_t, std::size_t> survivor;
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto [it, inserted] = survivor.try_emplace(clusters.find(i), i);
        if (!inserted && records[i].id < records[it->second].id) it->second = i;
    }

    DedupResult<Document> out;
    out.manifest.stage = "dedup";
    for (std::size_t i = 0; i < records.size(); ++i) {
        const std::size_t keep = survivor.at(clusters.find(i));
        if (keep == i) {
            out.records.push_back(records[i]);
            out.manifest.accept();
        } else {
            out.links.emplace_back(records[keep].id, records[i].id);
            out.manifest.reject("near_duplicate");
        }
    }
    std::sort(out.links.begin(), out.links.end());
    return out;
}

}  // namespace eurocurate
