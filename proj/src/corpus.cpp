#include "varikit/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "varikit/util/text.hpp"

namespace varikit {

using nlohmann::json;

std::string to_string(Regime r) {
    switch (r) {
        case Regime::standard: return "standard";
        case Regime::diverse: return "diverse";
        case Regime::both: return "both";
    }
    return "standard";
}

Regime regime_from_string(const std::string& s) {
    if (s == "standard") return Regime::standard;
    if (s == "diverse") return Regime::diverse;
    if (s == "both") return Regime::both;
    throw std::invalid_argument("unknown regime: " + s);
}

namespace {

const char* hint_to_string(VarietyHint h) {
    switch (h) {
        case VarietyHint::standard: return "standard";
        case VarietyHint::diverse: return "diverse";
        default: return "unknown";
    }
}

VarietyHint hint_from_string(const std::string& s) {
    if (s == "standard") return VarietyHint::standard;
    if (s == "diverse") return VarietyHint::diverse;
    if (s == "unknown") return VarietyHint::unknown;
    throw std::invalid_argument("unknown variety_hint: " + s);
}

// Returns an error reason, or empty on success.
std::string parse_document_line(const std::string& line, const std::string& corpus_name,
                                size_t line_no, Document& out) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) return "invalid JSON";
    if (!j.is_object()) return "line is not a JSON object";
    if (!j.contains("text") || !j["text"].is_string()) return "missing string field \"text\"";
    out.text = j["text"].get<std::string>();
    if (out.text.empty()) return "empty \"text\"";

    if (j.contains("id")) {
        if (!j["id"].is_string()) return "\"id\" is not a string";
        out.id = j["id"].get<std::string>();
    } else {
        out.id = corpus_name + "-" + std::to_string(line_no);
    }
    if (j.contains("source")) {
        if (!j["source"].is_string()) return "\"source\" is not a string";
        out.source = j["source"].get<std::string>();
    } else {
        out.source = corpus_name;
    }
    if (j.contains("author")) {
        if (!j["author"].is_string()) return "\"author\" is not a string";
        out.author = j["author"].get<std::string>();
    }
    if (j.contains("timestamp")) {
        if (!j["timestamp"].is_number_integer()) return "\"timestamp\" is not an integer";
        out.timestamp = j["timestamp"].get<int64_t>();
    }
    if (j.contains("variety_hint")) {
        if (!j["variety_hint"].is_string()) return "\"variety_hint\" is not a string";
        try {
            out.variety_hint = hint_from_string(j["variety_hint"].get<std::string>());
        } catch (const std::invalid_argument&) {
            return "bad \"variety_hint\" value";
        }
    }
    return {};
}

}  // namespace

Corpus load_corpus(const std::string& path, const std::string& name, Regime regime,
                   LoadReport* report) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open corpus file: " + path);

    Corpus corpus{name, regime, {}};
    LoadReport rep;
    std::unordered_set<std::string> seen_ids;

    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++rep.total_lines;

        Document doc;
        std::string reason = parse_document_line(line, name, line_no, doc);
        if (reason.empty() && !seen_ids.insert(doc.id).second) {
            reason = "duplicate id \"" + doc.id + "\"";
        }
        if (!reason.empty()) {
            ++rep.malformed_lines;
            if (rep.first_bad_line == 0) {
                rep.first_bad_line = line_no;
                rep.first_bad_reason = reason;
            }
            continue;
        }
        corpus.documents.push_back(std::move(doc));
    }
    if (in.bad()) throw std::runtime_error("I/O error reading corpus file: " + path);

    if (rep.total_lines > 0 && rep.malformed_lines * 10 > rep.total_lines) {
        throw std::runtime_error("corpus file " + path + ": " +
                                 std::to_string(rep.malformed_lines) + "/" +
                                 std::to_string(rep.total_lines) +
                                 " malformed lines, first at line " +
                                 std::to_string(rep.first_bad_line) + " (" +
                                 rep.first_bad_reason + ")");
    }
    if (report) *report = rep;
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    for (const Document& doc : corpus.documents) {
        json j;
        j["id"] = doc.id;
        j["source"] = doc.source;
        j["text"] = doc.text;
        if (doc.author) j["author"] = *doc.author;
        if (doc.timestamp) j["timestamp"] = *doc.timestamp;
        if (doc.variety_hint != VarietyHint::unknown) {
            j["variety_hint"] = hint_to_string(doc.variety_hint);
        }
        out << j.dump() << '\n';
    }
    if (!out) throw std::runtime_error("I/O error writing corpus file: " + path);
}

Corpus reorder_by_time(const Corpus& corpus) {
    for (const Document& doc : corpus.documents) {
        if (!doc.timestamp) {
            throw std::invalid_argument("reorder_by_time: document \"" + doc.id +
                                        "\" has no timestamp");
        }
    }
    Corpus out = corpus;
    std::stable_sort(out.documents.begin(), out.documents.end(),
                     [](const Document& a, const Document& b) {
                         if (*a.timestamp != *b.timestamp) return *a.timestamp < *b.timestamp;
                         return a.id < b.id;
                     });
    return out;
}

Corpus group_by_author(const Corpus& corpus) {
    std::vector<std::string> author_order;
    std::unordered_map<std::string, std::vector<const Document*>> by_author;
    for (const Document& doc : corpus.documents) {
        if (!doc.author) {
            throw std::invalid_argument("group_by_author: document \"" + doc.id +
                                        "\" has no author");
        }
        auto [it, inserted] = by_author.try_emplace(*doc.author);
        if (inserted) author_order.push_back(*doc.author);
        it->second.push_back(&doc);
    }

    Corpus out{corpus.name, corpus.regime, {}};
    out.documents.reserve(author_order.size());
    for (const std::string& author : author_order) {
        auto posts = by_author[author];
        std::stable_sort(posts.begin(), posts.end(), [](const Document* a, const Document* b) {
            int64_t ta = a->timestamp.value_or(std::numeric_limits<int64_t>::min());
            int64_t tb = b->timestamp.value_or(std::numeric_limits<int64_t>::min());
            return ta < tb;
        });
        Document merged;
        merged.id = "author-" + author;
        merged.source = posts.front()->source;
        merged.author = author;
        merged.timestamp = posts.front()->timestamp;
        merged.variety_hint = posts.front()->variety_hint;
        for (size_t i = 0; i < posts.size(); ++i) {
            if (i > 0) merged.text.push_back('\n');
            merged.text += posts[i]->text;
        }
        out.documents.push_back(std::move(merged));
    }
    return out;
}

Corpus doubled_reorderings(const Corpus& corpus) {
    Corpus by_time = reorder_by_time(corpus);
    Corpus by_author = group_by_author(corpus);
    Corpus out{corpus.name, corpus.regime, {}};
    out.documents.reserve(by_time.documents.size() + by_author.documents.size());
    for (Document& d : by_time.documents) out.documents.push_back(std::move(d));
    for (Document& d : by_author.documents) out.documents.push_back(std::move(d));
    return out;
}

std::pair<size_t, size_t> corpus_word_doc_counts(const Corpus& corpus) {
    size_t words = 0;
    for (const Document& doc : corpus.documents) words += count_words(doc.text);
    return {corpus.documents.size(), words};
}

Corpus concat_corpora(const std::string& name, Regime regime, std::span<const Corpus> parts) {
    Corpus out{name, regime, {}};
    std::unordered_set<std::string> seen;
    for (const Corpus& part : parts) {
        for (const Document& doc : part.documents) {
            Document copy = doc;
            if (!seen.insert(copy.id).second) {
                copy.id = part.name + ":" + copy.id;
                if (!seen.insert(copy.id).second) {
                    throw std::invalid_argument("concat_corpora: unresolvable id collision: " +
                                                doc.id);
                }
            }
            out.documents.push_back(std::move(copy));
        }
    }
    return out;
}

std::vector<SourceStats> per_source_counts(const Corpus& corpus) {
    std::vector<SourceStats> rows;
    std::unordered_map<std::string, size_t> index;
    for (const Document& doc : corpus.documents) {
        auto [it, inserted] = index.try_emplace(doc.source, rows.size());
        if (inserted) rows.push_back(SourceStats{doc.source});
        SourceStats& row = rows[it->second];
        row.doc_count += 1;
        row.word_count += count_words(doc.text);
    }
    return rows;
}

}  // namespace varikit
