#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "varikit/curation.hpp"
#include "varikit/util/text.hpp"

namespace varikit {

namespace {

#include "unicode_tables.inc"

constexpr uint32_t kHangulSBase = 0xAC00;
constexpr uint32_t kHangulLBase = 0x1100;
constexpr uint32_t kHangulVBase = 0x1161;
constexpr uint32_t kHangulTBase = 0x11A7;
constexpr uint32_t kHangulVCount = 21;
constexpr uint32_t kHangulTCount = 28;
constexpr uint32_t kHangulNCount = kHangulVCount * kHangulTCount;
constexpr uint32_t kHangulSCount = 19 * kHangulNCount;

const DecompEntry* find_decomp(uint32_t cp) {
    auto it = std::lower_bound(std::begin(kDecomp), std::end(kDecomp), cp,
                               [](const DecompEntry& e, uint32_t v) { return e.cp < v; });
    return (it != std::end(kDecomp) && it->cp == cp) ? &*it : nullptr;
}

uint8_t combining_class(uint32_t cp) {
    auto it = std::lower_bound(std::begin(kCcc), std::end(kCcc), cp,
                               [](const CccEntry& e, uint32_t v) { return e.cp < v; });
    return (it != std::end(kCcc) && it->cp == cp) ? it->ccc : 0;
}

uint32_t compose_pair(uint32_t a, uint32_t b) {
    // Hangul LV / LVT composition is algorithmic.
    if (a >= kHangulLBase && a < kHangulLBase + 19 && b >= kHangulVBase &&
        b < kHangulVBase + kHangulVCount) {
        return kHangulSBase + ((a - kHangulLBase) * kHangulVCount + (b - kHangulVBase)) *
                                  kHangulTCount;
    }
    if (a >= kHangulSBase && a < kHangulSBase + kHangulSCount &&
        (a - kHangulSBase) % kHangulTCount == 0 && b > kHangulTBase &&
        b < kHangulTBase + kHangulTCount) {
        return a + (b - kHangulTBase);
    }
    auto it = std::lower_bound(std::begin(kComp), std::end(kComp), std::pair{a, b},
                               [](const CompEntry& e, const std::pair<uint32_t, uint32_t>& v) {
                                   return e.first != v.first ? e.first < v.first
                                                             : e.second < v.second;
                               });
    return (it != std::end(kComp) && it->first == a && it->second == b) ? it->composed : 0;
}

void decompose_into(uint32_t cp, std::vector<uint32_t>& out) {
    if (cp >= kHangulSBase && cp < kHangulSBase + kHangulSCount) {
        uint32_t index = cp - kHangulSBase;
        out.push_back(kHangulLBase + index / kHangulNCount);
        out.push_back(kHangulVBase + (index % kHangulNCount) / kHangulTCount);
        if (index % kHangulTCount != 0) out.push_back(kHangulTBase + index % kHangulTCount);
        return;
    }
    if (const DecompEntry* e = find_decomp(cp)) {
        for (uint16_t i = 0; i < e->len; ++i) out.push_back(kDecompSeq[e->offset + i]);
        return;
    }
    out.push_back(cp);
}

}  // namespace

std::string nfc(std::string_view text) {
    std::vector<uint32_t> cps;
    cps.reserve(text.size());
    size_t i = 0;
    while (i < text.size()) decompose_into(utf8_next(text, i), cps);

    // Canonical ordering: stable sort of combining marks by class.
    for (size_t k = 1; k < cps.size(); ++k) {
        uint8_t cc = combining_class(cps[k]);
        if (cc == 0) continue;
        size_t j = k;
        while (j > 0) {
            uint8_t prev = combining_class(cps[j - 1]);
            if (prev == 0 || prev <= cc) break;
            std::swap(cps[j - 1], cps[j]);
            --j;
        }
    }

    // Canonical composition (UAX #15). A mark is blocked from the starter
    // when some character between them has a class >= its own.
    std::vector<uint32_t> out;
    out.reserve(cps.size());
    ptrdiff_t last_starter = -1;
    int last_cc = 0;
    for (uint32_t cp : cps) {
        int cc = combining_class(cp);
        if (last_starter >= 0) {
            bool adjacent = static_cast<size_t>(last_starter) + 1 == out.size();
            if (adjacent || last_cc < cc) {
                if (uint32_t composed = compose_pair(out[last_starter], cp)) {
                    out[last_starter] = composed;
                    continue;
                }
            }
        }
        if (cc == 0) last_starter = static_cast<ptrdiff_t>(out.size());
        last_cc = cc;
        out.push_back(cp);
    }
    return utf8_encode(out);
}

namespace {

bool is_control(uint32_t cp) {
    if (cp == '\n' || cp == '\t') return false;
    return cp < 0x20 || cp == 0x7F || (cp >= 0x80 && cp <= 0x9F);
}

std::string strip_controls(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    size_t i = 0;
    while (i < text.size()) {
        uint32_t cp = utf8_next(text, i);
        if (!is_control(cp)) utf8_append(out, cp);
    }
    return out;
}

std::string tidy_line(std::string_view line) {
    size_t begin = 0, end = line.size();
    while (begin < end && (line[begin] == ' ' || line[begin] == '\t')) ++begin;
    while (end > begin && (line[end - 1] == ' ' || line[end - 1] == '\t')) --end;
    std::string out;
    out.reserve(end - begin);
    bool prev_space = false;
    for (size_t i = begin; i < end; ++i) {
        char c = line[i];
        if (c == ' ') {
            if (!prev_space) out.push_back(' ');
            prev_space = true;
        } else {
            out.push_back(c);
            prev_space = false;
        }
    }
    return out;
}

}  // namespace

std::string normalize_text(std::string_view text) {
    std::string composed = nfc(text);
    std::string stripped = strip_controls(composed);

    std::string out;
    out.reserve(stripped.size());
    size_t pos = 0;
    bool first = true;
    while (pos <= stripped.size()) {
        size_t nl = stripped.find('\n', pos);
        std::string_view line(stripped.data() + pos,
                              (nl == std::string::npos ? stripped.size() : nl) - pos);
        if (!first) out.push_back('\n');
        out += tidy_line(line);
        first = false;
        if (nl == std::string::npos) break;
        pos = nl + 1;
    }
    return out;
}

Document normalize_document(const Document& doc) {
    Document out = doc;
    out.text = normalize_text(doc.text);
    return out;
}

Corpus normalize_corpus(const Corpus& corpus) {
    Corpus out{corpus.name, corpus.regime, {}};
    out.documents.reserve(corpus.documents.size());
    for (const Document& doc : corpus.documents) out.documents.push_back(normalize_document(doc));
    return out;
}

Corpus filter_short_documents(const Corpus& corpus, size_t min_words, size_t* removed) {
    Corpus out{corpus.name, corpus.regime, {}};
    size_t dropped = 0;
    for (const Document& doc : corpus.documents) {
        if (count_words(doc.text) >= min_words) {
            out.documents.push_back(doc);
        } else {
            ++dropped;
        }
    }
    if (removed) *removed = dropped;
    return out;
}

}  // namespace varikit
