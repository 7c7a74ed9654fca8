#include "arpa_fixture.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>

namespace fixture {

namespace {

struct Rng {
    std::mt19937_64 g;
    double unit() { return static_cast<double>(g() >> 11) * 0x1.0p-53; }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(g() % n); }
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Random subset of [0, n) of the given size, sorted.
std::vector<int> subset(Rng& rng, int n, int k) {
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    for (int i = 0; i < k; ++i) std::swap(all[i], all[i + rng.below(n - i)]);
    all.resize(k);
    std::sort(all.begin(), all.end());
    return all;
}

struct Entry {
    double logp = 0.0;
    double backoff = 0.0;
    bool has_backoff = false;
};

}  // namespace

int ArpaFixture::id_of(const std::string& token) const {
    auto it = std::find(words.begin(), words.end(), token);
    if (it == words.end()) return static_cast<int>(words.size()) - 1;  // <unk>
    return static_cast<int>(it - words.begin());
}

long double ArpaFixture::oracle_perplexity(const std::vector<std::string>& tokens) const {
    std::vector<int> hist = {sos()};
    long double prob = 1.0L;
    for (const auto& t : tokens) {
        int w = id_of(t);
        std::vector<int> h = hist;
        while (static_cast<int>(h.size()) > order - 1) h.erase(h.begin());
        prob *= cond.at(h)[w];
        hist.push_back(w);
    }
    return std::pow(prob, -1.0L / static_cast<long double>(tokens.size()));
}

ArpaFixture make_arpa_fixture(int order, std::size_t vocab, std::uint64_t seed) {
    Rng rng{std::mt19937_64(seed)};
    ArpaFixture f;
    f.order = order;
    for (std::size_t i = 0; i + 1 < vocab; ++i) f.words.push_back("w" + std::to_string(i));
    f.words.push_back("<unk>");
    const int V = static_cast<int>(f.words.size());
    const int S = f.sos();
    auto name = [&](int id) { return id == S ? std::string("<s>") : f.words[id]; };

    // Parameters are quantized through their decimal log10 form before the
    // oracle sees them, so oracle and file describe the same model.
    auto q = [](double p) { return std::pow(10.0L, static_cast<long double>(std::log10(p))); };

    std::map<std::vector<int>, Entry> entries;
    std::vector<long double> uni(V);
    {
        std::vector<double> raw(V);
        double total = 0;
        for (auto& r : raw) total += (r = 0.2 + rng.unit());
        for (int w = 0; w < V; ++w) {
            double p = raw[w] / total;
            entries[{w}].logp = std::log10(p);
            uni[w] = q(p);
        }
        entries[{S}].logp = -99.0;
    }
    f.cond[{}] = uni;

    // Level k: for each history of length k-1 that exists at level k-1 as a
    // context, pick explicit successors and solve the backoff weight.
    std::vector<std::vector<int>> contexts;
    for (int w = 0; w <= S; ++w) contexts.push_back({w});
    for (int k = 2; k <= order; ++k) {
        std::vector<std::vector<int>> next_contexts;
        for (const auto& h : contexts) {
            // lower-order distribution for this history
            std::vector<int> lower_h(h.begin() + 1, h.end());
            const auto& lower = f.cond.at(lower_h);
            int n_explicit = 1 + static_cast<int>(rng.below(std::max(1, V / 2)));
            auto succ = subset(rng, V, n_explicit);
            long double lower_mass = 0;
            for (int w : succ) lower_mass += lower[w];
            // explicit mass strictly inside (0, 1)
            double mass = 0.3 + 0.6 * rng.unit();
            std::vector<double> raw(succ.size());
            double total = 0;
            for (auto& r : raw) total += (r = 0.1 + rng.unit());
            std::vector<long double> dist(V, 0.0L);
            long double explicit_sum = 0;
            for (std::size_t i = 0; i < succ.size(); ++i) {
                double p = mass * raw[i] / total;
                std::vector<int> key = h;
                key.push_back(succ[i]);
                entries[key].logp = std::log10(p);
                dist[succ[i]] = q(p);
                explicit_sum += dist[succ[i]];
                if (k < order) next_contexts.push_back(key);
            }
            double alpha = static_cast<double>((1.0L - explicit_sum) / (1.0L - lower_mass));
            auto& ctx = entries.at(h);
            ctx.backoff = std::log10(alpha);
            ctx.has_backoff = true;
            long double a = q(alpha);
            for (int w = 0; w < V; ++w)
                if (dist[w] == 0.0L) dist[w] = a * lower[w];
            f.cond[h] = dist;
        }
        // Histories of length k-1 with no explicit context entry back off
        // with weight 1.
        std::set<std::vector<int>> have(contexts.begin(), contexts.end());
        std::vector<std::vector<int>> all_h = {{}};
        for (int len = 1; len <= k - 1; ++len) {
            std::vector<std::vector<int>> grown;
            for (const auto& x : all_h)
                for (int w = 0; w <= S; ++w) {
                    auto y = x;
                    y.push_back(w);
                    grown.push_back(y);
                }
            all_h = grown;
        }
        for (const auto& h : all_h) {
            if (have.count(h)) continue;
            // <s> only appears first; other placements never occur in scoring
            bool sos_inside = false;
            for (std::size_t i = 1; i < h.size(); ++i) sos_inside |= h[i] == S;
            if (sos_inside) continue;
            std::vector<int> lower_h(h.begin() + 1, h.end());
            f.cond[h] = f.cond.at(lower_h);
        }
        contexts = next_contexts;
    }
    std::ostringstream out;
    std::map<int, std::vector<std::pair<std::vector<int>, Entry>>> by_order;
    for (const auto& [key, e] : entries) by_order[static_cast<int>(key.size())].emplace_back(key, e);
    out << "\\data\\\n";
    for (int k = 1; k <= order; ++k) out << "ngram " << k << "=" << by_order[k].size() << "\n";
    for (int k = 1; k <= order; ++k) {
        out << "\n\\" << k << "-grams:\n";
        for (const auto& [key, e] : by_order[k]) {
            out << fmt(e.logp) << '\t';
            for (std::size_t i = 0; i < key.size(); ++i) out << (i ? " " : "") << name(key[i]);
            if (e.has_backoff && k < order) out << '\t' << fmt(e.backoff);
            out << '\n';
        }
    }
    out << "\n\\end\\\n";
    f.arpa = out.str();
    return f;
}

std::string uniform_arpa(std::size_t vocab) {
    std::ostringstream out;
    out << "\\data\\\nngram 1=" << vocab << "\n\n\\1-grams:\n";
    for (std::size_t i = 0; i < vocab; ++i) out << fmt(std::log10(1.0 / static_cast<double>(vocab))) << "\tu" << i << "\n";
    out << "\n\\end\\\n";
    return out.str();
}

}  // namespace fixture
