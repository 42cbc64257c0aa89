#include "varikit/diversity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "varikit/util/hash.hpp"
#include "varikit/util/rng.hpp"
#include "varikit/util/text.hpp"

namespace varikit {

using nlohmann::json;

std::string to_string(ClassifierKind k) {
    return k == ClassifierKind::lexicon_ratio ? "lexicon_ratio" : "char_ngram_linear";
}

ClassifierKind classifier_kind_from_string(const std::string& s) {
    if (s == "lexicon_ratio") return ClassifierKind::lexicon_ratio;
    if (s == "char_ngram_linear") return ClassifierKind::char_ngram_linear;
    throw std::invalid_argument("unknown classifier kind: " + s);
}

const std::vector<std::string>& default_abbreviations() {
    static const std::vector<std::string> abbrevs = {
        "adib", "al", "art", "dr", "e.g", "etab", "etc", "i.e", "ik",
        "jn", "k.a", "or", "prof", "st", "vs", "zenb", "zk",
    };
    return abbrevs;
}

namespace {

bool is_terminator_at(std::string_view text, size_t i, size_t& len) {
    char c = text[i];
    if (c == '.' || c == '!' || c == '?') {
        len = 1;
        return true;
    }
    // U+2026 horizontal ellipsis.
    if (text.substr(i, 3) == "\xE2\x80\xA6") {
        len = 3;
        return true;
    }
    return false;
}

bool is_word_char(char c) { return !is_space_byte(c); }

// The token of non-space characters ending just before position `end`
// (exclusive), without the trailing dot.
std::string_view token_before(std::string_view text, size_t end) {
    size_t begin = end;
    while (begin > 0 && is_word_char(text[begin - 1])) --begin;
    return text.substr(begin, end - begin);
}

bool guarded_abbreviation(std::string_view text, size_t dot_pos,
                          const std::vector<std::string>& abbreviations) {
    std::string_view token = token_before(text, dot_pos);
    if (token.empty()) return false;
    // Single-letter initials ("J. Etxeberria").
    if (token.size() == 1 && std::isalpha(static_cast<unsigned char>(token[0]))) return true;
    std::string lowered = ascii_lower(token);
    for (const std::string& abbr : abbreviations) {
        if (lowered == abbr) return true;
    }
    return false;
}

}  // namespace

std::vector<std::string> segment_sentences(std::string_view text) {
    return segment_sentences(text, default_abbreviations());
}

std::vector<std::string> segment_sentences(std::string_view text,
                                           const std::vector<std::string>& abbreviations) {
    std::vector<std::string> sentences;
    size_t start = 0;
    size_t i = 0;
    auto flush = [&](size_t end) {
        size_t b = start, e = end;
        while (b < e && is_space_byte(text[b])) ++b;
        while (e > b && is_space_byte(text[e - 1])) --e;
        if (e > b) sentences.emplace_back(text.substr(b, e - b));
        start = end;
    };
    while (i < text.size()) {
        size_t tlen = 0;
        if (!is_terminator_at(text, i, tlen)) {
            ++i;
            continue;
        }
        if (text[i] == '.' && guarded_abbreviation(text, i, abbreviations)) {
            i += tlen;
            continue;
        }
        // Consume a run of terminators ("?!", "...").
        size_t end = i + tlen;
        size_t more = 0;
        while (end < text.size() && is_terminator_at(text, end, more)) end += more;
        if (end < text.size() && !is_space_byte(text[end])) {
            i = end;  // mid-token punctuation ("3.14", "e.g.x")
            continue;
        }
        flush(end);
        i = end;
    }
    flush(text.size());
    return sentences;
}

VarietyClassifier VarietyClassifier::lexicon_ratio(std::unordered_set<std::string> lexicon,
                                                   double threshold) {
    VarietyClassifier c;
    c.kind_ = ClassifierKind::lexicon_ratio;
    c.lexicon_ = std::move(lexicon);
    c.threshold_ = threshold;
    return c;
}

VarietyClassifier VarietyClassifier::char_ngram_linear(size_t feature_dim, uint64_t hash_salt,
                                                       std::vector<double> weights, double bias,
                                                       double threshold) {
    if (weights.size() != feature_dim) {
        throw std::invalid_argument("char_ngram_linear: weights size must equal feature_dim");
    }
    VarietyClassifier c;
    c.kind_ = ClassifierKind::char_ngram_linear;
    c.feature_dim_ = feature_dim;
    c.hash_salt_ = hash_salt;
    c.weights_ = std::move(weights);
    c.bias_ = bias;
    c.threshold_ = threshold;
    return c;
}

std::vector<std::pair<uint32_t, double>> VarietyClassifier::ngram_features(
    std::string_view sentence, size_t feature_dim, uint64_t hash_salt) {
    std::map<uint32_t, double> counts;
    size_t total = 0;
    for (size_t n = 3; n <= 5; ++n) {
        if (sentence.size() < n) continue;
        for (size_t i = 0; i + n <= sentence.size(); ++i) {
            uint64_t h = mix64(fnv1a64(sentence.substr(i, n)) ^ hash_salt);
            counts[static_cast<uint32_t>(h % feature_dim)] += 1.0;
            ++total;
        }
    }
    std::vector<std::pair<uint32_t, double>> features(counts.begin(), counts.end());
    if (total > 0) {
        for (auto& [idx, v] : features) v /= static_cast<double>(total);
    }
    return features;
}

namespace {

std::string strip_punct(std::string_view word) {
    auto is_punct = [](char c) {
        return std::ispunct(static_cast<unsigned char>(c)) != 0;
    };
    size_t b = 0, e = word.size();
    while (b < e && is_punct(word[b])) ++b;
    while (e > b && is_punct(word[e - 1])) --e;
    return std::string(word.substr(b, e - b));
}

}  // namespace

double VarietyClassifier::score(std::string_view sentence) const {
    if (kind_ == ClassifierKind::lexicon_ratio) {
        size_t total = 0, unknown = 0;
        for (std::string_view raw : split_words(sentence)) {
            std::string word = ascii_lower(strip_punct(raw));
            if (word.empty()) continue;
            ++total;
            if (!lexicon_.count(word)) ++unknown;
        }
        if (total == 0) return 0.0;
        return static_cast<double>(unknown) / static_cast<double>(total);
    }
    double z = bias_;
    for (auto [idx, v] : ngram_features(sentence, feature_dim_, hash_salt_)) {
        z += weights_[idx] * v;
    }
    return 1.0 / (1.0 + std::exp(-z));
}

VarietyLabel VarietyClassifier::classify(std::string_view sentence) const {
    return score(sentence) >= threshold_ ? VarietyLabel::nonstandard : VarietyLabel::standard;
}

std::string VarietyClassifier::to_json_string() const {
    json j;
    j["format"] = "varikit-classifier";
    j["version"] = 1;
    j["kind"] = to_string(kind_);
    j["threshold"] = threshold_;
    if (kind_ == ClassifierKind::lexicon_ratio) {
        std::vector<std::string> words(lexicon_.begin(), lexicon_.end());
        std::sort(words.begin(), words.end());
        j["lexicon"] = words;
    } else {
        j["feature_dim"] = feature_dim_;
        j["hash_salt"] = hash_salt_;
        j["bias"] = bias_;
        j["weights"] = weights_;
    }
    return j.dump(2);
}

VarietyClassifier VarietyClassifier::from_json_string(const std::string& text) {
    json j = json::parse(text);
    if (j.value("format", "") != "varikit-classifier") {
        throw std::runtime_error("not a varikit classifier file");
    }
    if (j.value("version", 0) != 1) {
        throw std::runtime_error("unsupported classifier file version");
    }
    ClassifierKind kind = classifier_kind_from_string(j.at("kind").get<std::string>());
    double threshold = j.at("threshold").get<double>();
    if (kind == ClassifierKind::lexicon_ratio) {
        std::unordered_set<std::string> lex;
        for (const auto& w : j.at("lexicon")) lex.insert(w.get<std::string>());
        return lexicon_ratio(std::move(lex), threshold);
    }
    return char_ngram_linear(j.at("feature_dim").get<size_t>(), j.at("hash_salt").get<uint64_t>(),
                             j.at("weights").get<std::vector<double>>(),
                             j.at("bias").get<double>(), threshold);
}

void VarietyClassifier::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write classifier file: " + path);
    out << to_json_string() << '\n';
}

VarietyClassifier VarietyClassifier::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open classifier file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_string(text);
}

VarietyClassifier train_variety_classifier(
    std::span<const std::pair<std::string, VarietyLabel>> labeled, ClassifierKind kind,
    uint64_t seed, const TrainClassifierOptions& options) {
    size_t n_standard = 0, n_nonstandard = 0;
    for (const auto& [sentence, label] : labeled) {
        (label == VarietyLabel::standard ? n_standard : n_nonstandard) += 1;
    }
    if (n_standard == 0 || n_nonstandard == 0) {
        throw std::invalid_argument("train_variety_classifier: both labels must be present");
    }
    if (labeled.size() < 20) {
        throw std::invalid_argument("train_variety_classifier: need at least 20 examples");
    }

    if (kind == ClassifierKind::lexicon_ratio) {
        // The standard lexicon is everything attested in standard-labeled
        // sentences.
        std::unordered_set<std::string> lexicon;
        for (const auto& [sentence, label] : labeled) {
            if (label != VarietyLabel::standard) continue;
            for (std::string_view raw : split_words(sentence)) {
                std::string word = ascii_lower(strip_punct(raw));
                if (!word.empty()) lexicon.insert(std::move(word));
            }
        }
        return VarietyClassifier::lexicon_ratio(std::move(lexicon), options.threshold);
    }

    // Logistic regression over hashed char n-gram counts; full-batch
    // gradient descent from zero initialization.
    const size_t dim = options.feature_dim;
    const uint64_t salt = mix64(seed);
    std::vector<std::vector<std::pair<uint32_t, double>>> features;
    std::vector<double> targets;
    features.reserve(labeled.size());
    for (const auto& [sentence, label] : labeled) {
        features.push_back(VarietyClassifier::ngram_features(sentence, dim, salt));
        targets.push_back(label == VarietyLabel::nonstandard ? 1.0 : 0.0);
    }

    std::vector<double> w(dim, 0.0);
    double bias = 0.0;
    const double n_inv = 1.0 / static_cast<double>(labeled.size());
    std::vector<double> grad(dim);
    for (size_t iter = 0; iter < options.iterations; ++iter) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_bias = 0.0;
        for (size_t i = 0; i < features.size(); ++i) {
            double z = bias;
            for (auto [idx, v] : features[i]) z += w[idx] * v;
            double p = 1.0 / (1.0 + std::exp(-z));
            double err = (p - targets[i]) * n_inv;
            for (auto [idx, v] : features[i]) grad[idx] += err * v;
            grad_bias += err;
        }
        for (size_t d = 0; d < dim; ++d) w[d] -= options.learning_rate * grad[d];
        bias -= options.learning_rate * grad_bias;
    }
    return VarietyClassifier::char_ngram_linear(dim, salt, std::move(w), bias, options.threshold);
}

DiversityScore document_diversity(const VarietyClassifier& classifier, const Document& doc) {
    DiversityScore score;
    score.document_id = doc.id;
    std::vector<std::string> sentences = segment_sentences(doc.text);
    score.sentence_count = sentences.size();
    for (const std::string& sentence : sentences) {
        if (classifier.classify(sentence) == VarietyLabel::nonstandard) {
            ++score.nonstandard_count;
        }
    }
    if (score.sentence_count == 0) {
        score.score = 0.0;
        score.degenerate = true;
    } else {
        score.score = static_cast<double>(score.nonstandard_count) /
                      static_cast<double>(score.sentence_count);
    }
    return score;
}

std::vector<SourceStats> source_diversity_report(const VarietyClassifier& classifier,
                                                 std::span<const Corpus> corpora) {
    struct Accum {
        size_t docs = 0;
        size_t words = 0;
        std::vector<double> scores;
    };
    std::vector<std::string> order;
    std::map<std::string, Accum> by_source;
    for (const Corpus& corpus : corpora) {
        if (corpus.documents.empty()) {
            throw std::invalid_argument("source_diversity_report: corpus \"" + corpus.name +
                                        "\" is empty");
        }
        for (const Document& doc : corpus.documents) {
            auto [it, inserted] = by_source.try_emplace(doc.source);
            if (inserted) order.push_back(doc.source);
            Accum& acc = it->second;
            acc.docs += 1;
            acc.words += count_words(doc.text);
            acc.scores.push_back(document_diversity(classifier, doc).score);
        }
    }

    std::vector<SourceStats> rows;
    rows.reserve(order.size());
    for (const std::string& source : order) {
        const Accum& acc = by_source[source];
        SourceStats row;
        row.source = source;
        row.doc_count = acc.docs;
        row.word_count = acc.words;
        double mean = 0.0;
        for (double s : acc.scores) mean += s;
        mean /= static_cast<double>(acc.scores.size());
        double var = 0.0;
        for (double s : acc.scores) var += (s - mean) * (s - mean);
        var /= static_cast<double>(acc.scores.size());
        row.diversity_mean = mean;
        row.diversity_std = std::sqrt(var);
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const SourceStats& a, const SourceStats& b) {
        return a.diversity_mean < b.diversity_mean;
    });
    return rows;
}

}  // namespace varikit
