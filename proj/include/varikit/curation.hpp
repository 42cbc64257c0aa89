#pragma once

#include <array>
#include <string>
#include <vector>

#include "varikit/corpus.hpp"

namespace varikit {

struct DedupReport {
    size_t input_docs = 0;
    size_t exact_removed = 0;
    size_t near_removed = 0;
    size_t surviving_docs = 0;
};

// Unicode canonical composition (NFC).
std::string nfc(std::string_view text);

// NFC, control characters removed (newline/tab kept), runs of spaces
// collapsed, leading/trailing whitespace trimmed per line. Idempotent.
std::string normalize_text(std::string_view text);

Document normalize_document(const Document& doc);

Corpus normalize_corpus(const Corpus& corpus);

// Drops documents with fewer than min_words whitespace words. The only
// quality filter applied; anything heavier is deliberately out.
Corpus filter_short_documents(const Corpus& corpus, size_t min_words, size_t* removed = nullptr);

// 128-permutation MinHash over 5-word shingles.
struct MinHashSketch {
    static constexpr size_t kPermutations = 128;
    std::array<uint64_t, kPermutations> minima;
};

MinHashSketch minhash_sketch(std::string_view text);

double minhash_similarity(const MinHashSketch& a, const MinHashSketch& b);

// Exact Jaccard over 5-word shingle sets; the oracle the sketch estimates.
double shingle_jaccard(std::string_view a, std::string_view b);

// Exact-hash stage then near-duplicate stage (estimated Jaccard against
// every kept document >= near_threshold). First occurrence wins; survivor
// order is a subsequence of the input order.
std::pair<Corpus, DedupReport> deduplicate(const Corpus& corpus, double near_threshold = 0.8);

}  // namespace varikit
