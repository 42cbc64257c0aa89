#include "varikit/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "varikit/util/text.hpp"

namespace varikit {

using nlohmann::json;

namespace {

const char* special_name(size_t i) {
    static const char* names[] = {"<pad>", "<mask>", "<unk>", "<s>", "</s>"};
    return names[i];
}

std::string hex_encode(std::string_view bytes) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (unsigned char c : bytes) {
        out.push_back(digits[c >> 4]);
        out.push_back(digits[c & 0xF]);
    }
    return out;
}

std::string hex_decode(const std::string& hex) {
    if (hex.size() % 2 != 0) throw std::runtime_error("odd-length hex token");
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        throw std::runtime_error("bad hex digit in token");
    };
    std::string out;
    out.reserve(hex.size() / 2);
    for (size_t i = 0; i < hex.size(); i += 2) {
        out.push_back(static_cast<char>(nibble(hex[i]) << 4 | nibble(hex[i + 1])));
    }
    return out;
}

}  // namespace

TokenId SubwordTokenizer::lookup(const Token& t) const {
    auto it = vocab_.find(t);
    return it == vocab_.end() ? specials_.unk : it->second;
}

SubwordTokenizer SubwordTokenizer::build(std::vector<Token> alphabet,
                                         std::vector<Merge> merges) {
    SubwordTokenizer tok;
    tok.alphabet_size_ = alphabet.size();
    tok.tokens_.reserve(SpecialIds::kCount + alphabet.size() + merges.size());
    for (size_t i = 0; i < SpecialIds::kCount; ++i) {
        tok.tokens_.push_back(Token{special_name(i), false});
    }
    for (Token& t : alphabet) {
        TokenId id = static_cast<TokenId>(tok.tokens_.size());
        if (!tok.vocab_.emplace(t, id).second) {
            throw std::runtime_error("duplicate alphabet token");
        }
        tok.tokens_.push_back(std::move(t));
    }
    for (const Merge& m : merges) {
        if (m.left >= tok.tokens_.size() || m.right >= tok.tokens_.size()) {
            throw std::runtime_error("merge references unknown token id");
        }
        TokenId id = static_cast<TokenId>(tok.tokens_.size());
        if (m.out != id) throw std::runtime_error("merge output ids must be sequential");
        Token t{tok.tokens_[m.left].bytes + tok.tokens_[m.right].bytes,
                tok.tokens_[m.right].word_end};
        if (!tok.vocab_.emplace(t, id).second) {
            throw std::runtime_error("merge produces duplicate token");
        }
        tok.tokens_.push_back(std::move(t));
        tok.merge_rank_[{m.left, m.right}] = tok.merges_.size();
        tok.merges_.push_back(m);
    }
    return tok;
}

std::vector<TokenId> SubwordTokenizer::encode_word(std::string_view word) const {
    std::vector<TokenId> ids;
    ids.reserve(word.size());
    for (size_t i = 0; i < word.size(); ++i) {
        Token t{std::string(1, word[i]), i + 1 == word.size()};
        ids.push_back(lookup(t));
    }
    // Repeatedly apply the earliest-trained merge present in the word.
    while (ids.size() > 1) {
        size_t best_rank = SIZE_MAX;
        for (size_t i = 0; i + 1 < ids.size(); ++i) {
            auto it = merge_rank_.find({ids[i], ids[i + 1]});
            if (it != merge_rank_.end() && it->second < best_rank) best_rank = it->second;
        }
        if (best_rank == SIZE_MAX) break;
        const Merge& m = merges_[best_rank];
        std::vector<TokenId> next;
        next.reserve(ids.size());
        for (size_t i = 0; i < ids.size();) {
            if (i + 1 < ids.size() && ids[i] == m.left && ids[i + 1] == m.right) {
                next.push_back(m.out);
                i += 2;
            } else {
                next.push_back(ids[i]);
                i += 1;
            }
        }
        ids = std::move(next);
    }
    return ids;
}

std::vector<TokenId> SubwordTokenizer::encode(std::string_view text) const {
    std::vector<TokenId> out;
    size_t i = 0;
    const size_t n = text.size();
    while (i < n) {
        if (is_space_byte(text[i])) {
            Token t{std::string(1, text[i]), false};
            out.push_back(lookup(t));
            ++i;
            continue;
        }
        size_t start = i;
        while (i < n && !is_space_byte(text[i])) ++i;
        std::vector<TokenId> word = encode_word(text.substr(start, i - start));
        out.insert(out.end(), word.begin(), word.end());
    }
    return out;
}

std::string SubwordTokenizer::decode(const std::vector<TokenId>& ids) const {
    std::string out;
    for (TokenId id : ids) {
        if (id >= tokens_.size()) throw std::invalid_argument("decode: token id out of range");
        if (specials_.is_special(id)) {
            if (id == specials_.unk) out += "\xEF\xBF\xBD";  // U+FFFD
            continue;
        }
        out += tokens_[id].bytes;
    }
    return out;
}

SubwordTokenizer train_bpe(const Corpus& corpus, size_t vocab_size) {
    if (corpus.documents.empty()) throw std::invalid_argument("train_bpe: empty corpus");

    // Unique words with frequencies, in first-appearance order.
    std::vector<std::string> word_list;
    std::vector<size_t> word_freq;
    std::unordered_map<std::string, size_t> word_index;
    std::set<unsigned char> word_bytes, space_bytes;
    for (const Document& doc : corpus.documents) {
        for (std::string_view w : split_words(doc.text)) {
            auto [it, inserted] = word_index.try_emplace(std::string(w), word_list.size());
            if (inserted) {
                word_list.emplace_back(w);
                word_freq.push_back(0);
                for (unsigned char c : w) word_bytes.insert(c);
            }
            word_freq[it->second] += 1;
        }
        for (char c : doc.text) {
            if (is_space_byte(c)) space_bytes.insert(static_cast<unsigned char>(c));
        }
    }

    // Alphabet: plain and word-end variants of every byte seen inside
    // words, plus plain variants of whitespace bytes, sorted for
    // deterministic id assignment.
    std::vector<SubwordTokenizer::Token> alphabet;
    for (unsigned char c : word_bytes) {
        alphabet.push_back({std::string(1, static_cast<char>(c)), false});
        alphabet.push_back({std::string(1, static_cast<char>(c)), true});
    }
    for (unsigned char c : space_bytes) {
        if (!word_bytes.count(c)) alphabet.push_back({std::string(1, static_cast<char>(c)), false});
    }
    std::sort(alphabet.begin(), alphabet.end());

    if (vocab_size <= SpecialIds::kCount + alphabet.size()) {
        throw std::invalid_argument(
            "train_bpe: vocab_size " + std::to_string(vocab_size) +
            " must exceed alphabet (" + std::to_string(alphabet.size()) + ") plus specials (" +
            std::to_string(SpecialIds::kCount) + ")");
    }

    SubwordTokenizer tok = SubwordTokenizer::build(alphabet, {});

    // Words as id sequences.
    std::vector<std::vector<TokenId>> words(word_list.size());
    for (size_t w = 0; w < word_list.size(); ++w) {
        const std::string& s = word_list[w];
        words[w].reserve(s.size());
        for (size_t i = 0; i < s.size(); ++i) {
            words[w].push_back(
                tok.vocab_.at(SubwordTokenizer::Token{std::string(1, s[i]), i + 1 == s.size()}));
        }
    }

    using Pair = std::pair<TokenId, TokenId>;
    std::map<Pair, int64_t> pair_counts;
    std::map<Pair, std::set<size_t>> pair_words;  // lazily cleaned word index
    std::set<Pair> dead;  // pairs whose merged bytes already exist in vocab

    // Deterministic priority: highest count first, ties broken by the
    // lexicographically smaller (left, right) token pair.
    auto pair_key = [&](const Pair& p) {
        return std::tie(tok.tokens_[p.first], tok.tokens_[p.second]);
    };
    struct QueueEntry {
        int64_t count;
        Pair pair;
    };
    auto queue_less = [&](const QueueEntry& a, const QueueEntry& b) {
        if (a.count != b.count) return a.count < b.count;
        if (a.pair == b.pair) return false;
        return pair_key(a.pair) > pair_key(b.pair);
    };
    std::set<QueueEntry, decltype(queue_less)> queue(queue_less);

    auto adjust_count = [&](const Pair& p, int64_t delta, size_t touched_word) {
        int64_t& c = pair_counts[p];
        bool queued = c >= 2 && !dead.count(p);
        if (queued) queue.erase({c, p});
        c += delta;
        if (c >= 2 && !dead.count(p)) queue.insert({c, p});
        if (delta > 0) pair_words[p].insert(touched_word);
    };
    for (size_t w = 0; w < words.size(); ++w) {
        const auto& ids = words[w];
        for (size_t i = 0; i + 1 < ids.size(); ++i) {
            adjust_count({ids[i], ids[i + 1]}, static_cast<int64_t>(word_freq[w]), w);
        }
    }

    auto apply_merge = [](const std::vector<TokenId>& ids, Pair p, TokenId out) {
        std::vector<TokenId> next;
        next.reserve(ids.size());
        for (size_t i = 0; i < ids.size();) {
            if (i + 1 < ids.size() && ids[i] == p.first && ids[i + 1] == p.second) {
                next.push_back(out);
                i += 2;
            } else {
                next.push_back(ids[i]);
                i += 1;
            }
        }
        return next;
    };

    while (tok.tokens_.size() < vocab_size && !queue.empty()) {
        Pair bp = queue.rbegin()->pair;

        TokenId out_id = static_cast<TokenId>(tok.tokens_.size());
        SubwordTokenizer::Token merged{
            tok.tokens_[bp.first].bytes + tok.tokens_[bp.second].bytes,
            tok.tokens_[bp.second].word_end};
        if (tok.vocab_.count(merged)) {
            // Same byte sequence reachable via an earlier merge path; this
            // pair can never produce a fresh token.
            queue.erase(std::prev(queue.end()));
            dead.insert(bp);
            continue;
        }
        tok.vocab_.emplace(merged, out_id);
        tok.tokens_.push_back(merged);
        tok.merge_rank_[bp] = tok.merges_.size();
        tok.merges_.push_back({bp.first, bp.second, out_id});

        // Recount every word that may contain the pair: subtract its old
        // adjacent pairs, apply the merge, add the new ones.
        auto affected = pair_words[bp];
        for (size_t w : affected) {
            const auto& ids = words[w];
            std::vector<TokenId> next = apply_merge(ids, bp, out_id);
            if (next.size() == ids.size()) continue;  // stale index entry
            int64_t f = static_cast<int64_t>(word_freq[w]);
            for (size_t i = 0; i + 1 < ids.size(); ++i) {
                adjust_count({ids[i], ids[i + 1]}, -f, w);
            }
            for (size_t i = 0; i + 1 < next.size(); ++i) {
                adjust_count({next[i], next[i + 1]}, +f, w);
            }
            words[w] = std::move(next);
        }
        pair_words.erase(bp);
    }
    return tok;
}

double fertility(const SubwordTokenizer& tokenizer, const Corpus& corpus) {
    size_t total_words = 0;
    size_t total_tokens = 0;
    std::unordered_map<std::string, std::pair<size_t, size_t>> cache;  // word -> (tokens, freq)
    for (const Document& doc : corpus.documents) {
        for (std::string_view w : split_words(doc.text)) {
            auto [it, inserted] = cache.try_emplace(std::string(w), std::pair<size_t, size_t>{0, 0});
            if (inserted) it->second.first = tokenizer.encode_word(w).size();
            it->second.second += 1;
        }
    }
    for (const auto& [word, entry] : cache) {
        total_tokens += entry.first * entry.second;
        total_words += entry.second;
    }
    if (total_words == 0) throw std::invalid_argument("fertility: corpus has no words");
    return static_cast<double>(total_tokens) / static_cast<double>(total_words);
}

FertilityMatrix fertility_matrix(
    const std::vector<std::pair<std::string, const SubwordTokenizer*>>& tokenizers,
    const std::vector<std::pair<std::string, const Corpus*>>& corpora) {
    auto check_distinct = [](const auto& items, const char* what) {
        std::set<std::string> names;
        for (const auto& [name, ptr] : items) {
            if (!names.insert(name).second) {
                throw std::invalid_argument(std::string("fertility_matrix: duplicate ") + what +
                                            " name: " + name);
            }
        }
    };
    check_distinct(tokenizers, "tokenizer");
    check_distinct(corpora, "corpus");

    FertilityMatrix m;
    for (const auto& [name, t] : tokenizers) m.tokenizer_names.push_back(name);
    for (const auto& [name, c] : corpora) m.corpus_names.push_back(name);
    m.cells.resize(tokenizers.size());
    for (size_t r = 0; r < tokenizers.size(); ++r) {
        m.cells[r].resize(corpora.size());
        for (size_t c = 0; c < corpora.size(); ++c) {
            m.cells[r][c] = fertility(*tokenizers[r].second, *corpora[c].second);
        }
    }
    return m;
}

std::string SubwordTokenizer::to_json_string() const {
    json j;
    j["format"] = "varikit-bpe";
    j["version"] = 1;
    j["vocab_size"] = tokens_.size();
    j["specials"] = {{"pad", specials_.pad}, {"mask", specials_.mask}, {"unk", specials_.unk},
                     {"bos", specials_.bos}, {"eos", specials_.eos}};
    json alphabet = json::array();
    for (size_t i = SpecialIds::kCount; i < SpecialIds::kCount + alphabet_size_; ++i) {
        alphabet.push_back({{"b", hex_encode(tokens_[i].bytes)}, {"we", tokens_[i].word_end}});
    }
    j["alphabet"] = alphabet;
    json merges = json::array();
    for (const Merge& m : merges_) merges.push_back({m.left, m.right});
    j["merges"] = merges;
    return j.dump(2);
}

SubwordTokenizer SubwordTokenizer::from_json_string(const std::string& text) {
    json j = json::parse(text);
    if (j.value("format", "") != "varikit-bpe") throw std::runtime_error("not a varikit tokenizer file");
    if (j.value("version", 0) != 1) throw std::runtime_error("unsupported tokenizer file version");
    std::vector<Token> alphabet;
    for (const auto& e : j.at("alphabet")) {
        alphabet.push_back({hex_decode(e.at("b").get<std::string>()), e.at("we").get<bool>()});
    }
    std::vector<Merge> merges;
    TokenId next_id = static_cast<TokenId>(SpecialIds::kCount + alphabet.size());
    for (const auto& e : j.at("merges")) {
        merges.push_back({e.at(0).get<TokenId>(), e.at(1).get<TokenId>(), next_id++});
    }
    SubwordTokenizer tok = build(std::move(alphabet), std::move(merges));
    if (tok.vocab_size() != j.at("vocab_size").get<size_t>()) {
        throw std::runtime_error("tokenizer file vocab_size mismatch");
    }
    return tok;
}

void SubwordTokenizer::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write tokenizer file: " + path);
    out << to_json_string() << '\n';
}

SubwordTokenizer SubwordTokenizer::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open tokenizer file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_string(text);
}

}  // namespace varikit
