#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace varikit {

enum class Regime { standard, diverse, both };

enum class VarietyHint { standard, diverse, unknown };

std::string to_string(Regime r);
Regime regime_from_string(const std::string& s);

// One text unit with source/author/time metadata; the atom of every
// pipeline stage.
struct Document {
    std::string id;
    std::string source;
    std::string text;
    std::optional<std::string> author;
    std::optional<int64_t> timestamp;
    VarietyHint variety_hint = VarietyHint::unknown;

    bool operator==(const Document&) const = default;
};

struct Corpus {
    std::string name;
    Regime regime = Regime::standard;
    std::vector<Document> documents;

    bool operator==(const Corpus&) const = default;
};

// Per-source row of the corpus analysis report.
struct SourceStats {
    std::string source;
    size_t doc_count = 0;
    size_t word_count = 0;
    double diversity_mean = 0.0;
    double diversity_std = 0.0;
};

struct LoadReport {
    size_t total_lines = 0;
    size_t malformed_lines = 0;
    // 1-based line number and reason of the first malformed line, if any.
    size_t first_bad_line = 0;
    std::string first_bad_reason;
};

// Reads a JSON-lines corpus: one object per line with at least "text";
// optional "id", "source", "author", "timestamp", "variety_hint".
// Missing ids become "<name>-<line>". Malformed lines are counted in the
// report; more than 10% malformed is an error.
Corpus load_corpus(const std::string& path, const std::string& name, Regime regime,
                   LoadReport* report = nullptr);

void save_corpus(const Corpus& corpus, const std::string& path);

// Sorts ascending by timestamp, ties broken by id. Every document must
// carry a timestamp.
Corpus reorder_by_time(const Corpus& corpus);

// Merges each author's posts (ascending timestamp) into one document,
// authors ordered by first appearance. Every document must carry an
// author.
Corpus group_by_author(const Corpus& corpus);

// Both reorderings back to back; the explicit dataset-doubling step.
Corpus doubled_reorderings(const Corpus& corpus);

std::pair<size_t, size_t> corpus_word_doc_counts(const Corpus& corpus);

Corpus concat_corpora(const std::string& name, Regime regime, std::span<const Corpus> parts);

// (source, docs, words) rows in first-appearance order; the skeleton of
// the per-source analysis table.
std::vector<SourceStats> per_source_counts(const Corpus& corpus);

}  // namespace varikit
