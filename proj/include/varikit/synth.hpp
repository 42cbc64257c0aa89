#pragma once

#include <string>
#include <unordered_set>
#include <vector>

#include "varikit/corpus.hpp"
#include "varikit/diversity.hpp"
#include "varikit/eval.hpp"
#include "varikit/packing.hpp"
#include "varikit/util/rng.hpp"

namespace varikit {
namespace synth {

// Deterministic generators for demo corpora and test fixtures. Sentences
// are pseudo-Basque; the non-standard variety applies a fixed spelling
// rewrite, so generated labels are exact oracles.

const std::vector<std::string>& standard_word_list();

std::unordered_set<std::string> standard_lexicon();

std::string make_sentence(Rng& rng, size_t min_words = 4, size_t max_words = 11);

// Dialect-flavoured respelling (h-dropping, z->s, -ea->-ie, tz->ts).
std::string nonstandardize(const std::string& sentence);

struct VarietyCorpusSpec {
    std::string name;
    std::string source;
    size_t n_docs = 100;
    size_t sentences_per_doc = 100;
    double nonstandard_proportion = 0.0;
    Regime regime = Regime::standard;
};

struct VarietyCorpus {
    Corpus corpus;
    double injected_proportion = 0.0;  // realized value, exact by counting
};

// Non-standard sentence counts are spread over documents by largest
// remainder, so the realized aggregate proportion matches the request as
// closely as integer counts allow.
VarietyCorpus make_variety_corpus(const VarietyCorpusSpec& spec, uint64_t seed);

std::vector<std::pair<std::string, VarietyLabel>> make_labeled_sentences(size_t n, uint64_t seed);

// Corpora for the tokenizer regime experiments: standard prose, a
// social-media flavoured non-standard mix, and their concatenation.
struct RegimeCorpora {
    Corpus standard;
    Corpus diverse;
    Corpus both;
};

RegimeCorpora make_regime_corpora(size_t docs_per_regime, size_t sentences_per_doc, uint64_t seed);

// Packed sequences over a small synthetic vocabulary with strong local
// structure (noisy periodic motifs), so a toy MLM can actually learn.
std::vector<PackedSequence> make_structured_sequences(size_t count, size_t seq_len,
                                                      uint32_t vocab_size, uint64_t seed);

// Separable two-class classification task: each class has marker words.
std::vector<TaskExample> make_classification_examples(size_t n, uint64_t seed,
                                                      bool tag_dialects = false);

// Token labeling with word-identity labels (N for nouns, O otherwise).
std::vector<TaskExample> make_token_labeling_examples(size_t n, uint64_t seed);

// Pair classification: entailment iff the pair repeats a marker word.
std::vector<TaskExample> make_pair_examples(size_t n, uint64_t seed);

}  // namespace synth
}  // namespace varikit
