#pragma once

#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "varikit/corpus.hpp"

namespace varikit {

enum class VarietyLabel { standard, nonstandard };

enum class ClassifierKind { lexicon_ratio, char_ngram_linear };

std::string to_string(ClassifierKind k);
ClassifierKind classifier_kind_from_string(const std::string& s);

struct DiversityScore {
    std::string document_id;
    size_t nonstandard_count = 0;
    size_t sentence_count = 0;
    double score = 0.0;
    bool degenerate = false;  // no sentences; score pinned to 0
};

const std::vector<std::string>& default_abbreviations();

// Deterministic rule-based split on sentence-final punctuation followed by
// whitespace or end of text, with an abbreviation guard. Joining the
// output reproduces the input up to collapsed whitespace.
std::vector<std::string> segment_sentences(std::string_view text);
std::vector<std::string> segment_sentences(std::string_view text,
                                           const std::vector<std::string>& abbreviations);

// Sentence-level standard / non-standard decision function. Either a
// lexicon out-of-vocabulary ratio or a logistic model over hashed
// character 3-5 gram counts; both score into [0,1] and compare against
// the threshold (score >= threshold => nonstandard).
class VarietyClassifier {
public:
    static VarietyClassifier lexicon_ratio(std::unordered_set<std::string> lexicon,
                                           double threshold = 0.5);
    static VarietyClassifier char_ngram_linear(size_t feature_dim, uint64_t hash_salt,
                                               std::vector<double> weights, double bias,
                                               double threshold = 0.5);

    ClassifierKind kind() const { return kind_; }
    double threshold() const { return threshold_; }
    const std::unordered_set<std::string>& lexicon() const { return lexicon_; }
    const std::vector<double>& weights() const { return weights_; }

    double score(std::string_view sentence) const;
    VarietyLabel classify(std::string_view sentence) const;

    std::string to_json_string() const;
    static VarietyClassifier from_json_string(const std::string& text);
    void save(const std::string& path) const;
    static VarietyClassifier load(const std::string& path);

    // Hashed character n-gram counts, normalized to sum 1.
    static std::vector<std::pair<uint32_t, double>> ngram_features(std::string_view sentence,
                                                                   size_t feature_dim,
                                                                   uint64_t hash_salt);

private:
    VarietyClassifier() = default;

    ClassifierKind kind_ = ClassifierKind::lexicon_ratio;
    double threshold_ = 0.5;
    std::unordered_set<std::string> lexicon_;
    size_t feature_dim_ = 0;
    uint64_t hash_salt_ = 0;
    std::vector<double> weights_;
    double bias_ = 0.0;
};

struct TrainClassifierOptions {
    double threshold = 0.5;
    size_t feature_dim = 8192;
    size_t iterations = 400;
    double learning_rate = 4.0;
};

VarietyClassifier train_variety_classifier(
    std::span<const std::pair<std::string, VarietyLabel>> labeled, ClassifierKind kind,
    uint64_t seed, const TrainClassifierOptions& options = {});

DiversityScore document_diversity(const VarietyClassifier& classifier, const Document& doc);

// Per-source mean and population stddev of per-document scores, sorted
// ascending by mean. Also carries the doc/word counts of the source.
std::vector<SourceStats> source_diversity_report(const VarietyClassifier& classifier,
                                                 std::span<const Corpus> corpora);

}  // namespace varikit
