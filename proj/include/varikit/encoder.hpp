#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "varikit/packing.hpp"

namespace varikit {

enum class SizeClass { toy, medium, base, large };

std::string to_string(SizeClass s);
SizeClass size_class_from_string(const std::string& s);

// Full-scale peak learning rates that keep each size class stable on
// heterogeneous corpora; recorded here as the documented defaults.
double default_peak_lr(SizeClass s);

struct EncoderConfig {
    int layers = 2;
    int hidden_dim = 64;
    int heads = 4;
    int ffn_dim = 256;
    int vocab_size = 0;
    int max_positions = 512;
    SizeClass size_class = SizeClass::toy;

    void validate() const;

    static EncoderConfig toy(int vocab_size, int max_positions = 128);
    // Dimension presets for the published size classes.
    static EncoderConfig for_size_class(SizeClass s, int vocab_size, int max_positions = 512);
};

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using IdMatrix = Eigen::Matrix<int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using TargetMatrix = Eigen::Matrix<int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct TokenBatch {
    IdMatrix input_ids;     // B x L
    TargetMatrix targets;   // B x L; -1 where no MLM target
};

TokenBatch make_token_batch(std::span<const MaskedSequence> seqs);

template <typename Scalar>
struct BlockWeights {
    Mat<Scalar> ln1_gain, ln1_bias;
    Mat<Scalar> wq, bq, wk, bk, wv, bv, wo, bo;
    Mat<Scalar> ln2_gain, ln2_bias;
    Mat<Scalar> w1, b1, w2, b2;
};

// Pre-norm transformer encoder with learned positions and an MLM head
// tied to the input embedding.
template <typename Scalar>
struct EncoderWeights {
    EncoderConfig config;
    Mat<Scalar> token_embedding;     // V x d (also the MLM output projection)
    Mat<Scalar> position_embedding;  // P x d
    std::vector<BlockWeights<Scalar>> blocks;
    Mat<Scalar> final_ln_gain, final_ln_bias;
    Mat<Scalar> output_bias;         // 1 x V

    // Visits every parameter tensor in a fixed order; the order defines
    // optimizer state layout and the checkpoint format.
    template <typename Fn>
    void for_each_param(Fn&& fn) {
        fn("token_embedding", token_embedding);
        fn("position_embedding", position_embedding);
        for (size_t i = 0; i < blocks.size(); ++i) {
            const std::string p = "block" + std::to_string(i) + ".";
            auto& blk = blocks[i];
            fn(p + "ln1_gain", blk.ln1_gain);
            fn(p + "ln1_bias", blk.ln1_bias);
            fn(p + "wq", blk.wq);
            fn(p + "bq", blk.bq);
            fn(p + "wk", blk.wk);
            fn(p + "bk", blk.bk);
            fn(p + "wv", blk.wv);
            fn(p + "bv", blk.bv);
            fn(p + "wo", blk.wo);
            fn(p + "bo", blk.bo);
            fn(p + "ln2_gain", blk.ln2_gain);
            fn(p + "ln2_bias", blk.ln2_bias);
            fn(p + "w1", blk.w1);
            fn(p + "b1", blk.b1);
            fn(p + "w2", blk.w2);
            fn(p + "b2", blk.b2);
        }
        fn("final_ln_gain", final_ln_gain);
        fn("final_ln_bias", final_ln_bias);
        fn("output_bias", output_bias);
    }

    template <typename Fn>
    void for_each_param_const(Fn&& fn) const {
        const_cast<EncoderWeights*>(this)->for_each_param(
            [&](const std::string& name, Mat<Scalar>& m) {
                fn(name, static_cast<const Mat<Scalar>&>(m));
            });
    }

    size_t parameter_count() const;
    double squared_norm() const;

    static EncoderWeights zeros(const EncoderConfig& config);
    static EncoderWeights init(const EncoderConfig& config, uint64_t seed);

    template <typename Other>
    EncoderWeights<Other> cast() const {
        EncoderWeights<Other> out = EncoderWeights<Other>::zeros(config);
        std::vector<const Mat<Scalar>*> mats;
        for_each_param_const([&](const std::string&, const Mat<Scalar>& m) { mats.push_back(&m); });
        size_t i = 0;
        out.for_each_param([&](const std::string&, Mat<Other>& m) {
            m = mats[i++]->template cast<Other>();
        });
        return out;
    }
};

// Activations captured by the forward pass for backprop.
template <typename Scalar>
struct LayerCache {
    Mat<Scalar> x_in;           // block input, (B*L) x d
    Mat<Scalar> ln1_xhat;       // normalized input of the attention path
    Mat<Scalar> ln1_rstd;       // (B*L) x 1
    Mat<Scalar> q, k, v;        // (B*L) x d
    std::vector<Mat<Scalar>> attn_probs;  // B*heads entries, each L x L
    Mat<Scalar> attn_concat;    // (B*L) x d, heads concatenated before Wo
    Mat<Scalar> x_mid;          // after the attention residual
    Mat<Scalar> ln2_xhat;
    Mat<Scalar> ln2_rstd;
    Mat<Scalar> ffn_pre;        // (B*L) x f, before GELU
};

template <typename Scalar>
struct EncoderCache {
    IdMatrix input_ids;
    std::vector<int> valid_len;  // non-pad prefix length per sequence
    std::vector<LayerCache<Scalar>> layers;
    Mat<Scalar> final_in;        // input of the final layer norm
    Mat<Scalar> final_xhat;
    Mat<Scalar> final_rstd;
    Mat<Scalar> hidden;          // forward_hidden output
};

// Final hidden states, one row per (sequence, position): (B*L) x d.
template <typename Scalar>
Mat<Scalar> forward_hidden(const EncoderWeights<Scalar>& w, const IdMatrix& input_ids,
                           EncoderCache<Scalar>* cache);

// Accumulates parameter gradients for dLoss/dHidden into `grads`.
template <typename Scalar>
void backward_hidden(const EncoderWeights<Scalar>& w, const EncoderCache<Scalar>& cache,
                     const Mat<Scalar>& d_hidden, EncoderWeights<Scalar>& grads);

template <typename Scalar>
struct MlmForward {
    double loss = 0.0;
    size_t n_masked = 0;
    bool zero_mask_warning = false;  // no masked positions: loss defined as 0
    Mat<Scalar> masked_logits;       // n_masked x V, batch order
};

// Mean cross-entropy over masked positions only.
template <typename Scalar>
MlmForward<Scalar> forward_mlm(const EncoderWeights<Scalar>& w, const TokenBatch& batch,
                               EncoderCache<Scalar>* cache = nullptr);

template <typename Scalar>
EncoderWeights<Scalar> backward_mlm(const EncoderWeights<Scalar>& w, const TokenBatch& batch,
                                    const EncoderCache<Scalar>& cache);

// Versioned binary checkpoint (parameters stored as float64).
template <typename Scalar>
void save_checkpoint(const EncoderWeights<Scalar>& w, const std::string& path);
template <typename Scalar>
EncoderWeights<Scalar> load_checkpoint(const std::string& path);

}  // namespace varikit
