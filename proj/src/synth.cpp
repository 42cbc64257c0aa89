#include "varikit/synth.hpp"

#include <algorithm>
#include <cmath>

#include "varikit/util/hash.hpp"
#include "varikit/util/text.hpp"

namespace varikit {
namespace synth {

const std::vector<std::string>& standard_word_list() {
    static const std::vector<std::string> words = {
        // frequent function words first; draws are skewed toward the front
        "eta", "da", "ez", "bai", "ere", "hau", "hori", "bat", "bi", "oso",
        "dira", "du", "dute", "zen", "dago", "daude", "gara", "naiz", "gaude", "ditu",
        "etxea", "mendia", "ibaia", "zubia", "herria", "kalea", "bidea", "lorea", "eguna", "gaua",
        "eguzkia", "ilargia", "itsasoa", "basoa", "zuhaitza", "harria", "haizea", "euria", "elurra",
        "ura", "sua", "lurra", "zerua", "hodeia", "izarra", "hondartza", "plaza", "liburua",
        "eskola", "lana", "jolasa", "kanta", "dantza", "hitza", "esaldia", "ipuina", "gizona",
        "emakumea", "haurra", "txakurra", "katua", "txoria", "arraina", "behia", "ardia",
        "zaldia", "berria", "zaharra", "handia", "txikia", "ederra", "polita", "gorria",
        "urdina", "zuria", "beltza", "berdea", "horia", "luzea", "motza", "azkarra",
        "etortzen", "joaten", "egiten", "esaten", "ikusten", "entzuten", "jaten", "edaten",
        "bizi", "maite", "hartzen", "ematen", "irakurtzen", "idazten", "abesten", "lantzen",
    };
    return words;
}

std::unordered_set<std::string> standard_lexicon() {
    const auto& words = standard_word_list();
    return {words.begin(), words.end()};
}

namespace {

// Skewed draw: small indices (function words) come out more often.
const std::string& draw_word(Rng& rng) {
    const auto& words = standard_word_list();
    double u = rng.uniform();
    size_t idx = static_cast<size_t>(u * u * static_cast<double>(words.size()));
    if (idx >= words.size()) idx = words.size() - 1;
    return words[idx];
}

std::string capitalize(std::string s) {
    if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
    return s;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
}

}  // namespace

std::string make_sentence(Rng& rng, size_t min_words, size_t max_words) {
    size_t n = min_words + rng.uniform_int(max_words - min_words + 1);
    std::string out;
    for (size_t i = 0; i < n; ++i) {
        if (i > 0) out.push_back(' ');
        out += i == 0 ? capitalize(draw_word(rng)) : draw_word(rng);
    }
    double u = rng.uniform();
    out.push_back(u < 0.9 ? '.' : (u < 0.95 ? '?' : '!'));
    return out;
}

std::string nonstandardize(const std::string& sentence) {
    std::string s = ascii_lower(sentence);
    replace_all(s, "ea", "ie");
    replace_all(s, "z", "s");
    replace_all(s, "h", "");
    replace_all(s, " eta ", " ta ");
    // Re-capitalize the first letter so the shape of the text is kept.
    for (char& c : s) {
        if (c >= 'a' && c <= 'z') {
            c = static_cast<char>(c - 'a' + 'A');
            break;
        }
    }
    return s;
}

VarietyCorpus make_variety_corpus(const VarietyCorpusSpec& spec, uint64_t seed) {
    Rng rng(mix64(seed ^ fnv1a64(spec.name)));
    const size_t total = spec.n_docs * spec.sentences_per_doc;
    const size_t target =
        static_cast<size_t>(std::llround(spec.nonstandard_proportion * static_cast<double>(total)));

    // Spread the non-standard sentence budget evenly over documents.
    std::vector<size_t> per_doc(spec.n_docs, target / std::max<size_t>(spec.n_docs, 1));
    for (size_t i = 0; i < target % std::max<size_t>(spec.n_docs, 1); ++i) per_doc[i] += 1;

    VarietyCorpus out;
    out.corpus.name = spec.name;
    out.corpus.regime = spec.regime;
    out.injected_proportion =
        total == 0 ? 0.0 : static_cast<double>(target) / static_cast<double>(total);

    for (size_t d = 0; d < spec.n_docs; ++d) {
        std::vector<bool> nonstandard(spec.sentences_per_doc, false);
        for (size_t k = 0; k < per_doc[d]; ++k) nonstandard[k] = true;
        rng.shuffle(nonstandard);

        Document doc;
        doc.id = spec.name + "-" + std::to_string(d + 1);
        doc.source = spec.source;
        doc.author = "user" + std::to_string(d % 13);
        doc.timestamp = 1'500'000'000 + static_cast<int64_t>(d) * 3600;
        for (size_t s = 0; s < spec.sentences_per_doc; ++s) {
            std::string sentence = make_sentence(rng);
            if (nonstandard[s]) sentence = nonstandardize(sentence);
            if (s > 0) doc.text.push_back(' ');
            doc.text += sentence;
        }
        out.corpus.documents.push_back(std::move(doc));
    }
    return out;
}

std::vector<std::pair<std::string, VarietyLabel>> make_labeled_sentences(size_t n, uint64_t seed) {
    Rng rng(mix64(seed ^ 0x1abe1edull));
    std::vector<std::pair<std::string, VarietyLabel>> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        std::string sentence = make_sentence(rng);
        if (i % 2 == 0) {
            out.emplace_back(std::move(sentence), VarietyLabel::standard);
        } else {
            out.emplace_back(nonstandardize(sentence), VarietyLabel::nonstandard);
        }
    }
    rng.shuffle(out);
    return out;
}

RegimeCorpora make_regime_corpora(size_t docs_per_regime, size_t sentences_per_doc,
                                  uint64_t seed) {
    Rng rng(mix64(seed ^ 0xc0e90ull));
    RegimeCorpora out;
    out.standard.name = "standard";
    out.standard.regime = Regime::standard;
    for (size_t d = 0; d < docs_per_regime; ++d) {
        Document doc;
        doc.id = "std-" + std::to_string(d + 1);
        doc.source = d % 2 == 0 ? "news" : "wiki";
        for (size_t s = 0; s < sentences_per_doc; ++s) {
            if (s > 0) doc.text.push_back(' ');
            doc.text += make_sentence(rng);
        }
        out.standard.documents.push_back(std::move(doc));
    }

    out.diverse.name = "diverse";
    out.diverse.regime = Regime::diverse;
    for (size_t d = 0; d < docs_per_regime; ++d) {
        Document doc;
        doc.id = "div-" + std::to_string(d + 1);
        doc.source = d % 2 == 0 ? "social" : "historical";
        doc.author = "user" + std::to_string(d % 17);
        doc.timestamp = 1'600'000'000 + static_cast<int64_t>(d) * 60;
        for (size_t s = 0; s < sentences_per_doc; ++s) {
            std::string sentence = make_sentence(rng);
            if (rng.uniform() < 0.7) sentence = nonstandardize(sentence);
            if (rng.uniform() < 0.2) sentence = "@lagun" + std::to_string(rng.uniform_int(40)) +
                                                " " + sentence;
            if (rng.uniform() < 0.15) sentence += " jaja";
            if (rng.uniform() < 0.1) sentence += " :)";
            if (s > 0) doc.text.push_back(' ');
            doc.text += sentence;
        }
        out.diverse.documents.push_back(std::move(doc));
    }

    const Corpus parts[] = {out.standard, out.diverse};
    out.both = concat_corpora("both", Regime::both, parts);
    return out;
}

std::vector<PackedSequence> make_structured_sequences(size_t count, size_t seq_len,
                                                      uint32_t vocab_size, uint64_t seed) {
    if (vocab_size <= SpecialIds::kCount + 8) {
        throw std::invalid_argument("make_structured_sequences: vocab too small");
    }
    Rng rng(mix64(seed ^ 0x5e90ull));
    const uint32_t n_regular = vocab_size - static_cast<uint32_t>(SpecialIds::kCount);
    constexpr size_t kMotifs = 6;
    constexpr size_t kMotifLen = 16;
    std::vector<std::vector<TokenId>> motifs(kMotifs);
    for (auto& motif : motifs) {
        motif.resize(kMotifLen);
        for (auto& id : motif) {
            id = static_cast<TokenId>(SpecialIds::kCount + rng.uniform_int(n_regular));
        }
    }

    SpecialIds sp;
    std::vector<PackedSequence> out;
    out.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        const auto& motif = motifs[rng.uniform_int(kMotifs)];
        size_t phase = rng.uniform_int(kMotifLen);
        PackedSequence seq;
        seq.token_ids.reserve(seq_len);
        seq.token_ids.push_back(sp.bos);
        for (size_t t = 0; t + 2 < seq_len; ++t) {
            TokenId id = motif[(t + phase) % kMotifLen];
            if (rng.uniform() < 0.03) {
                id = static_cast<TokenId>(SpecialIds::kCount + rng.uniform_int(n_regular));
            }
            seq.token_ids.push_back(id);
        }
        seq.token_ids.push_back(sp.eos);
        seq.segment_boundaries = {0};
        seq.pad_count = 0;
        out.push_back(std::move(seq));
    }
    return out;
}

namespace {

const std::vector<std::string>& positive_markers() {
    static const std::vector<std::string> m = {"pozik", "ederki", "maitea"};
    return m;
}
const std::vector<std::string>& negative_markers() {
    static const std::vector<std::string> m = {"triste", "gaizki", "beldurra"};
    return m;
}

std::string insert_word(const std::string& sentence, const std::string& word, Rng& rng) {
    auto words = split_words(sentence);
    size_t pos = 1 + rng.uniform_int(words.empty() ? 1 : words.size());
    std::string out;
    for (size_t i = 0; i <= words.size(); ++i) {
        if (i == pos || (i == words.size() && pos > words.size())) {
            if (!out.empty()) out.push_back(' ');
            out += word;
        }
        if (i < words.size()) {
            if (!out.empty()) out.push_back(' ');
            out += std::string(words[i]);
        }
    }
    return out;
}

}  // namespace

std::vector<TaskExample> make_classification_examples(size_t n, uint64_t seed,
                                                      bool tag_dialects) {
    static const std::vector<std::string> kDialects = {"central", "western", "navarrese"};
    Rng rng(mix64(seed ^ 0xc1a55ull));
    std::vector<TaskExample> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        bool positive = i % 2 == 0;
        const auto& markers = positive ? positive_markers() : negative_markers();
        std::string text = make_sentence(rng, 5, 9);
        text = insert_word(text, markers[rng.uniform_int(markers.size())], rng);
        text = insert_word(text, markers[rng.uniform_int(markers.size())], rng);
        TaskExample ex;
        ex.text = std::move(text);
        ex.label = positive ? "pos" : "neg";
        if (tag_dialects) ex.dialect = kDialects[i % kDialects.size()];
        out.push_back(std::move(ex));
    }
    rng.shuffle(out);
    return out;
}

std::vector<TaskExample> make_token_labeling_examples(size_t n, uint64_t seed) {
    // Words ending in "-a" after a consonant in the fixture list are the
    // "noun" class; the rule is exact, so labels are an oracle.
    static const std::unordered_set<std::string> nouns = {
        "etxea", "mendia", "ibaia", "zubia", "herria", "kalea", "bidea", "lorea",
        "eskola", "plaza", "kanta", "dantza", "hitza",
    };
    Rng rng(mix64(seed ^ 0x70c3ull));
    std::vector<TaskExample> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        TaskExample ex;
        size_t len = 4 + rng.uniform_int(6);
        for (size_t w = 0; w < len; ++w) {
            std::string word = draw_word(rng);
            ex.labels.push_back(nouns.count(word) ? "N" : "O");
            ex.tokens.push_back(std::move(word));
        }
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<TaskExample> make_pair_examples(size_t n, uint64_t seed) {
    Rng rng(mix64(seed ^ 0x9a17ull));
    std::vector<TaskExample> out;
    out.reserve(n);
    const auto& markers = positive_markers();
    for (size_t i = 0; i < n; ++i) {
        bool entail = i % 2 == 0;
        const std::string& marker = markers[rng.uniform_int(markers.size())];
        TaskExample ex;
        ex.text = insert_word(make_sentence(rng, 4, 8), marker, rng);
        std::string second = make_sentence(rng, 3, 6);
        if (entail) {
            ex.text_pair = insert_word(second, marker, rng);
            ex.label = "entail";
        } else {
            ex.text_pair = second;
            ex.label = "neutral";
        }
        out.push_back(std::move(ex));
    }
    rng.shuffle(out);
    return out;
}

}  // namespace synth
}  // namespace varikit
