#include "varikit/packing.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "varikit/util/hash.hpp"
#include "varikit/util/rng.hpp"

namespace varikit {

static_assert(std::endian::native == std::endian::little,
              "packed-file writer assumes a little-endian host");

std::vector<std::vector<TokenId>> chunk_document(std::span<const TokenId> token_ids, size_t L) {
    if (L < 8) throw std::invalid_argument("chunk_document: L must be >= 8");
    const size_t payload = L - 2;
    std::vector<std::vector<TokenId>> chunks;
    for (size_t i = 0; i < token_ids.size(); i += payload) {
        size_t n = std::min(payload, token_ids.size() - i);
        chunks.emplace_back(token_ids.begin() + i, token_ids.begin() + i + n);
    }
    return chunks;
}

PackResult pack_sequences(const std::vector<std::vector<TokenId>>& fragments, size_t L,
                          const SpecialIds& specials) {
    if (L < 8) throw std::invalid_argument("pack_sequences: L must be >= 8");
    for (const auto& frag : fragments) {
        if (frag.size() > L - 2) {
            throw std::invalid_argument("pack_sequences: fragment of " +
                                        std::to_string(frag.size()) +
                                        " tokens exceeds L-2 = " + std::to_string(L - 2));
        }
    }

    struct Open {
        std::vector<TokenId> ids;
        std::vector<uint32_t> boundaries;
    };
    std::vector<Open> open;
    for (const auto& frag : fragments) {
        const size_t wrapped = frag.size() + 2;
        size_t target = open.size();
        for (size_t s = 0; s < open.size(); ++s) {
            // A separator token goes between packed fragments.
            if (open[s].ids.size() + 1 + wrapped <= L) {
                target = s;
                break;
            }
        }
        if (target == open.size()) open.emplace_back();
        Open& seq = open[target];
        if (!seq.ids.empty()) seq.ids.push_back(specials.eos);
        seq.boundaries.push_back(static_cast<uint32_t>(seq.ids.size()));
        seq.ids.push_back(specials.bos);
        seq.ids.insert(seq.ids.end(), frag.begin(), frag.end());
        seq.ids.push_back(specials.eos);
    }

    PackResult result;
    double total_util = 0.0;
    for (Open& seq : open) {
        PackedSequence packed;
        packed.pad_count = static_cast<uint32_t>(L - seq.ids.size());
        total_util += static_cast<double>(seq.ids.size()) / static_cast<double>(L);
        packed.token_ids = std::move(seq.ids);
        packed.token_ids.resize(L, specials.pad);
        packed.segment_boundaries = std::move(seq.boundaries);
        result.sequences.push_back(std::move(packed));
    }
    result.mean_utilization =
        result.sequences.empty() ? 0.0 : total_util / static_cast<double>(result.sequences.size());
    return result;
}

PackResult pack_corpus_tokens(const std::vector<std::vector<TokenId>>& docs, size_t L,
                              const SpecialIds& specials) {
    std::vector<std::vector<TokenId>> fragments;
    for (const auto& doc : docs) {
        for (auto& chunk : chunk_document(doc, L)) fragments.push_back(std::move(chunk));
    }
    return pack_sequences(fragments, L, specials);
}

MaskedSequence apply_mlm_mask(const PackedSequence& seq, const MaskParams& params,
                              uint32_t vocab_size, const SpecialIds& specials, uint64_t seed) {
    if (!(params.mask_rate > 0.0 && params.mask_rate < 1.0)) {
        throw std::invalid_argument("apply_mlm_mask: mask_rate must be in (0, 1)");
    }
    if (vocab_size <= SpecialIds::kCount) {
        throw std::invalid_argument("apply_mlm_mask: vocab has no maskable tokens");
    }
    Rng rng(mix64(seed));
    MaskedSequence out;
    out.input_ids = seq.token_ids;
    out.targets.assign(seq.token_ids.size(), -1);
    const uint32_t n_regular = vocab_size - static_cast<uint32_t>(SpecialIds::kCount);
    for (size_t i = 0; i < seq.token_ids.size(); ++i) {
        TokenId id = seq.token_ids[i];
        if (specials.is_special(id)) continue;  // covers padding too
        if (rng.uniform() >= params.mask_rate) continue;
        out.targets[i] = static_cast<int64_t>(id);
        out.mask_positions.push_back(static_cast<uint32_t>(i));
        double r = rng.uniform();
        if (r < params.mask_token_fraction) {
            out.input_ids[i] = specials.mask;
        } else if (r < params.mask_token_fraction + params.random_token_fraction) {
            out.input_ids[i] =
                static_cast<TokenId>(SpecialIds::kCount + rng.uniform_int(n_regular));
        }  // else keep the original token
    }
    return out;
}

MaskedBatch apply_mlm_mask_batch(std::span<const PackedSequence> seqs, const MaskParams& params,
                                 uint32_t vocab_size, const SpecialIds& specials, uint64_t seed) {
    MaskedBatch batch;
    batch.sequences.reserve(seqs.size());
    for (size_t i = 0; i < seqs.size(); ++i) {
        batch.sequences.push_back(
            apply_mlm_mask(seqs[i], params, vocab_size, specials, hash_combine(seed, i)));
    }
    return batch;
}

namespace {
constexpr char kMagic[4] = {'V', 'K', 'P', 'K'};
constexpr uint32_t kVersion = 1;
}  // namespace

void save_packed(const std::vector<PackedSequence>& seqs, size_t L, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write packed file: " + path);
    uint32_t header[3] = {kVersion, static_cast<uint32_t>(L), static_cast<uint32_t>(seqs.size())};
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    for (const PackedSequence& seq : seqs) {
        if (seq.token_ids.size() != L) {
            throw std::invalid_argument("save_packed: sequence length != L");
        }
        out.write(reinterpret_cast<const char*>(seq.token_ids.data()),
                  static_cast<std::streamsize>(L * sizeof(TokenId)));
    }
    if (!out) throw std::runtime_error("I/O error writing packed file: " + path);
}

std::vector<PackedSequence> load_packed(const std::string& path, size_t* L_out,
                                        const SpecialIds& specials) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open packed file: " + path);
    char magic[4];
    uint32_t header[3];
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw std::runtime_error("not a varikit packed file: " + path);
    }
    if (header[0] != kVersion) throw std::runtime_error("unsupported packed file version");
    const size_t L = header[1];
    const size_t count = header[2];
    if (L_out) *L_out = L;

    std::vector<PackedSequence> seqs(count);
    for (size_t s = 0; s < count; ++s) {
        PackedSequence& seq = seqs[s];
        seq.token_ids.resize(L);
        in.read(reinterpret_cast<char*>(seq.token_ids.data()),
                static_cast<std::streamsize>(L * sizeof(TokenId)));
        if (!in) throw std::runtime_error("truncated packed file: " + path);
        // Boundaries and pad count are derivable: <s> starts a fragment,
        // padding is trailing.
        for (size_t i = 0; i < L; ++i) {
            if (seq.token_ids[i] == specials.bos) {
                seq.segment_boundaries.push_back(static_cast<uint32_t>(i));
            }
        }
        size_t pads = 0;
        while (pads < L && seq.token_ids[L - 1 - pads] == specials.pad) ++pads;
        seq.pad_count = static_cast<uint32_t>(pads);
    }
    return seqs;
}

}  // namespace varikit
