#include <array>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "varikit/curation.hpp"
#include "varikit/util/hash.hpp"
#include "varikit/util/rng.hpp"
#include "varikit/util/text.hpp"

namespace varikit {

namespace {

constexpr size_t kShingleWords = 5;
constexpr uint64_t kMinHashSeed = 0x5eedf00d2024ull;
constexpr uint64_t kMersenne61 = (1ull << 61) - 1;

struct Permutations {
    std::array<uint64_t, MinHashSketch::kPermutations> a;
    std::array<uint64_t, MinHashSketch::kPermutations> b;
};

const Permutations& permutations() {
    static const Permutations perms = [] {
        Permutations p;
        Rng rng(kMinHashSeed);
        for (size_t i = 0; i < MinHashSketch::kPermutations; ++i) {
            p.a[i] = rng.next_u64() % (kMersenne61 - 1) + 1;  // a in [1, p-1]
            p.b[i] = rng.next_u64() % kMersenne61;
        }
        return p;
    }();
    return perms;
}

uint64_t mod_mersenne61(unsigned __int128 x) {
    uint64_t lo = static_cast<uint64_t>(x & kMersenne61);
    uint64_t hi = static_cast<uint64_t>(x >> 61);
    uint64_t r = lo + hi;
    if (r >= kMersenne61) r -= kMersenne61;
    return r;
}

// 5-word shingles as 64-bit hashes; a document shorter than 5 words
// contributes its whole word sequence as one shingle.
std::vector<uint64_t> shingle_hashes(std::string_view text) {
    auto words = split_words(text);
    std::vector<uint64_t> out;
    auto hash_range = [&](size_t begin, size_t count) {
        uint64_t h = 0xcbf29ce484222325ull;
        for (size_t k = 0; k < count; ++k) {
            h = fnv1a64(words[begin + k], h);
            h = fnv1a64(std::string_view("\x1f", 1), h);
        }
        return h;
    };
    if (words.empty()) return out;
    if (words.size() < kShingleWords) {
        out.push_back(hash_range(0, words.size()));
        return out;
    }
    out.reserve(words.size() - kShingleWords + 1);
    for (size_t i = 0; i + kShingleWords <= words.size(); ++i) {
        out.push_back(hash_range(i, kShingleWords));
    }
    return out;
}

}  // namespace

MinHashSketch minhash_sketch(std::string_view text) {
    const Permutations& perms = permutations();
    MinHashSketch sketch;
    sketch.minima.fill(UINT64_MAX);
    for (uint64_t sh : shingle_hashes(text)) {
        uint64_t x = sh % kMersenne61;
        for (size_t i = 0; i < MinHashSketch::kPermutations; ++i) {
            unsigned __int128 prod = static_cast<unsigned __int128>(perms.a[i]) * x + perms.b[i];
            uint64_t v = mod_mersenne61(prod);
            if (v < sketch.minima[i]) sketch.minima[i] = v;
        }
    }
    return sketch;
}

double minhash_similarity(const MinHashSketch& a, const MinHashSketch& b) {
    size_t matches = 0;
    for (size_t i = 0; i < MinHashSketch::kPermutations; ++i) {
        if (a.minima[i] == b.minima[i]) ++matches;
    }
    return static_cast<double>(matches) / MinHashSketch::kPermutations;
}

double shingle_jaccard(std::string_view a, std::string_view b) {
    auto ha = shingle_hashes(a);
    auto hb = shingle_hashes(b);
    std::unordered_set<uint64_t> sa(ha.begin(), ha.end());
    std::unordered_set<uint64_t> sb(hb.begin(), hb.end());
    if (sa.empty() && sb.empty()) return 1.0;
    size_t inter = 0;
    for (uint64_t h : sa) inter += sb.count(h);
    size_t uni = sa.size() + sb.size() - inter;
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::pair<Corpus, DedupReport> deduplicate(const Corpus& corpus, double near_threshold) {
    if (!(near_threshold > 0.0 && near_threshold <= 1.0)) {
        throw std::invalid_argument("deduplicate: near_threshold must be in (0, 1]");
    }

    DedupReport report;
    report.input_docs = corpus.documents.size();

    // Exact stage: later byte-identical texts removed.
    std::vector<const Document*> exact_survivors;
    std::unordered_map<uint64_t, std::vector<const Document*>> by_hash;
    for (const Document& doc : corpus.documents) {
        uint64_t h = fnv1a64(doc.text);
        auto& bucket = by_hash[h];
        bool duplicate = false;
        for (const Document* prev : bucket) {
            if (prev->text == doc.text) {
                duplicate = true;
                break;
            }
        }
        if (duplicate) {
            ++report.exact_removed;
        } else {
            bucket.push_back(&doc);
            exact_survivors.push_back(&doc);
        }
    }

    // Near stage: sketches computed up front, then a sequential first-kept
    // pass comparing against every kept document.
    std::vector<MinHashSketch> sketches(exact_survivors.size());
    for (size_t i = 0; i < exact_survivors.size(); ++i) {
        sketches[i] = minhash_sketch(exact_survivors[i]->text);
    }

    Corpus out{corpus.name, corpus.regime, {}};
    std::vector<size_t> kept;
    for (size_t i = 0; i < exact_survivors.size(); ++i) {
        bool near_dup = false;
        for (size_t j : kept) {
            if (minhash_similarity(sketches[i], sketches[j]) >= near_threshold) {
                near_dup = true;
                break;
            }
        }
        if (near_dup) {
            ++report.near_removed;
        } else {
            kept.push_back(i);
            out.documents.push_back(*exact_survivors[i]);
        }
    }

    report.surviving_docs = out.documents.size();
    return {std::move(out), report};
}

}  // namespace varikit
