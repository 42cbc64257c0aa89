#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "varikit/corpus.hpp"

namespace varikit {

using TokenId = uint32_t;

struct SpecialIds {
    TokenId pad = 0;
    TokenId mask = 1;
    TokenId unk = 2;
    TokenId bos = 3;  // <s>
    TokenId eos = 4;  // </s>
    static constexpr size_t kCount = 5;
    bool is_special(TokenId id) const { return id < kCount; }
};

// Byte-level BPE with an end-of-word marker on the last byte of each
// word, so merges never cross whitespace and whole words can become
// single tokens. Whitespace runs encode as plain byte tokens, which makes
// decode(encode(x)) == x exact over the trained byte alphabet.
class SubwordTokenizer {
public:
    struct Token {
        std::string bytes;
        bool word_end = false;

        auto operator<=>(const Token&) const = default;
    };
    struct Merge {
        TokenId left;
        TokenId right;
        TokenId out;
    };

    size_t vocab_size() const { return tokens_.size(); }
    const SpecialIds& specials() const { return specials_; }
    const std::vector<Merge>& merges() const { return merges_; }
    const Token& token(TokenId id) const { return tokens_[id]; }
    size_t alphabet_size() const { return alphabet_size_; }

    // Whole text: word tokens plus plain byte tokens for whitespace runs.
    std::vector<TokenId> encode(std::string_view text) const;
    // One whitespace-free word; the unit the fertility statistics count.
    std::vector<TokenId> encode_word(std::string_view word) const;
    std::string decode(const std::vector<TokenId>& ids) const;

    std::string to_json_string() const;
    static SubwordTokenizer from_json_string(const std::string& text);
    void save(const std::string& path) const;
    static SubwordTokenizer load(const std::string& path);

    static SubwordTokenizer build(std::vector<Token> alphabet, std::vector<Merge> merges);

private:
    friend SubwordTokenizer train_bpe(const Corpus&, size_t);

    SubwordTokenizer() = default;

    TokenId lookup(const Token& t) const;

    SpecialIds specials_;
    size_t alphabet_size_ = 0;
    std::vector<Token> tokens_;                        // id -> token (specials first)
    std::map<Token, TokenId> vocab_;                   // token -> id
    std::map<std::pair<TokenId, TokenId>, size_t> merge_rank_;
};

// Standard BPE training: start from the observed byte alphabet, repeatedly
// merge the most frequent adjacent pair (ties to the lexicographically
// smaller pair) until vocab_size is reached or no pair occurs twice.
SubwordTokenizer train_bpe(const Corpus& corpus, size_t vocab_size);

// Mean subword tokens per whitespace word, specials and whitespace
// excluded. Lower is a better vocabulary fit.
double fertility(const SubwordTokenizer& tokenizer, const Corpus& corpus);

struct FertilityMatrix {
    std::vector<std::string> tokenizer_names;  // rows
    std::vector<std::string> corpus_names;     // columns
    std::vector<std::vector<double>> cells;
};

FertilityMatrix fertility_matrix(
    const std::vector<std::pair<std::string, const SubwordTokenizer*>>& tokenizers,
    const std::vector<std::pair<std::string, const Corpus*>>& corpora);

}  // namespace varikit
