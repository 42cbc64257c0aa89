#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "varikit/tokenizer.hpp"

namespace varikit {

// Fixed-length training sequence assembled from one or more document
// fragments. Layout: <s> frag </s> [</s> is followed by a <s> of the next
// fragment when packed, with a <pad>-free separator in between], padding
// only at the tail.
struct PackedSequence {
    std::vector<TokenId> token_ids;          // length exactly L
    std::vector<uint32_t> segment_boundaries;  // offsets where a fragment begins
    uint32_t pad_count = 0;
};

// Consecutive non-overlapping chunks of at most L-2 tokens (room for the
// begin/end specials); concatenation equals the input.
std::vector<std::vector<TokenId>> chunk_document(std::span<const TokenId> token_ids, size_t L);

struct PackResult {
    std::vector<PackedSequence> sequences;
    double mean_utilization = 0.0;  // mean non-pad fraction
};

// First-fit packing: each fragment goes into the first open sequence with
// room for <sep> <s> fragment </s>, else opens a new sequence.
PackResult pack_sequences(const std::vector<std::vector<TokenId>>& fragments, size_t L,
                          const SpecialIds& specials = {});

// Convenience: chunk every document then pack.
PackResult pack_corpus_tokens(const std::vector<std::vector<TokenId>>& docs, size_t L,
                              const SpecialIds& specials = {});

struct MaskedSequence {
    std::vector<TokenId> input_ids;       // masked inputs
    std::vector<int64_t> targets;         // original id at masked positions, -1 elsewhere
    std::vector<uint32_t> mask_positions;
};

struct MaskedBatch {
    std::vector<MaskedSequence> sequences;
};

struct MaskParams {
    double mask_rate = 0.15;
    double mask_token_fraction = 0.8;
    double random_token_fraction = 0.1;  // remainder stays unchanged
};

// Each non-special, non-pad position is selected independently with
// probability mask_rate; selected positions become <mask> / a random
// non-special token / stay unchanged per the 80/10/10 split.
MaskedSequence apply_mlm_mask(const PackedSequence& seq, const MaskParams& params,
                              uint32_t vocab_size, const SpecialIds& specials, uint64_t seed);

MaskedBatch apply_mlm_mask_batch(std::span<const PackedSequence> seqs, const MaskParams& params,
                                 uint32_t vocab_size, const SpecialIds& specials, uint64_t seed);

// Binary packed-data file: 16-byte header (magic "VKPK", u32 version,
// u32 L, u32 count) then count records of L little-endian u32 ids.
void save_packed(const std::vector<PackedSequence>& seqs, size_t L, const std::string& path);

std::vector<PackedSequence> load_packed(const std::string& path, size_t* L_out = nullptr,
                                        const SpecialIds& specials = {});

}  // namespace varikit
