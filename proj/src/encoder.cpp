#include "varikit/encoder.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "varikit/util/rng.hpp"

namespace varikit {

std::string to_string(SizeClass s) {
    switch (s) {
        case SizeClass::toy: return "toy";
        case SizeClass::medium: return "medium";
        case SizeClass::base: return "base";
        case SizeClass::large: return "large";
    }
    return "toy";
}

SizeClass size_class_from_string(const std::string& s) {
    if (s == "toy") return SizeClass::toy;
    if (s == "medium") return SizeClass::medium;
    if (s == "base") return SizeClass::base;
    if (s == "large") return SizeClass::large;
    throw std::invalid_argument("unknown size class: " + s);
}

double default_peak_lr(SizeClass s) {
    switch (s) {
        case SizeClass::medium: return 8e-4;
        case SizeClass::base: return 4e-4;
        case SizeClass::large: return 1e-4;
        case SizeClass::toy: return 3e-4;
    }
    return 3e-4;
}

void EncoderConfig::validate() const {
    if (layers < 1) throw std::invalid_argument("encoder config: layers must be >= 1");
    if (hidden_dim < 1 || ffn_dim < 1) throw std::invalid_argument("encoder config: bad dims");
    if (heads < 1 || hidden_dim % heads != 0) {
        throw std::invalid_argument("encoder config: hidden_dim must be divisible by heads");
    }
    if (vocab_size <= static_cast<int>(SpecialIds::kCount)) {
        throw std::invalid_argument("encoder config: vocab_size too small");
    }
    if (max_positions < 8) throw std::invalid_argument("encoder config: max_positions too small");
}

EncoderConfig EncoderConfig::toy(int vocab_size, int max_positions) {
    return {2, 64, 4, 256, vocab_size, max_positions, SizeClass::toy};
}

EncoderConfig EncoderConfig::for_size_class(SizeClass s, int vocab_size, int max_positions) {
    switch (s) {
        case SizeClass::toy: return toy(vocab_size, max_positions);
        case SizeClass::medium: return {8, 512, 8, 2048, vocab_size, max_positions, s};
        case SizeClass::base: return {12, 768, 12, 3072, vocab_size, max_positions, s};
        case SizeClass::large: return {24, 1024, 16, 4096, vocab_size, max_positions, s};
    }
    return toy(vocab_size, max_positions);
}

TokenBatch make_token_batch(std::span<const MaskedSequence> seqs) {
    if (seqs.empty()) throw std::invalid_argument("make_token_batch: empty batch");
    const auto B = static_cast<Eigen::Index>(seqs.size());
    const auto L = static_cast<Eigen::Index>(seqs[0].input_ids.size());
    TokenBatch batch;
    batch.input_ids.resize(B, L);
    batch.targets.resize(B, L);
    for (Eigen::Index b = 0; b < B; ++b) {
        if (static_cast<Eigen::Index>(seqs[b].input_ids.size()) != L) {
            throw std::invalid_argument("make_token_batch: ragged sequence lengths");
        }
        for (Eigen::Index t = 0; t < L; ++t) {
            batch.input_ids(b, t) = static_cast<int32_t>(seqs[b].input_ids[t]);
            batch.targets(b, t) = seqs[b].targets[t];
        }
    }
    return batch;
}

template <typename Scalar>
size_t EncoderWeights<Scalar>::parameter_count() const {
    size_t n = 0;
    for_each_param_const([&](const std::string&, const Mat<Scalar>& m) {
        n += static_cast<size_t>(m.size());
    });
    return n;
}

template <typename Scalar>
double EncoderWeights<Scalar>::squared_norm() const {
    double n = 0.0;
    for_each_param_const([&](const std::string&, const Mat<Scalar>& m) {
        n += m.template cast<double>().squaredNorm();
    });
    return n;
}

template <typename Scalar>
EncoderWeights<Scalar> EncoderWeights<Scalar>::zeros(const EncoderConfig& config) {
    config.validate();
    const int d = config.hidden_dim;
    const int f = config.ffn_dim;
    EncoderWeights w;
    w.config = config;
    w.token_embedding = Mat<Scalar>::Zero(config.vocab_size, d);
    w.position_embedding = Mat<Scalar>::Zero(config.max_positions, d);
    w.blocks.resize(config.layers);
    for (auto& blk : w.blocks) {
        blk.ln1_gain = Mat<Scalar>::Zero(1, d);
        blk.ln1_bias = Mat<Scalar>::Zero(1, d);
        blk.wq = Mat<Scalar>::Zero(d, d);
        blk.bq = Mat<Scalar>::Zero(1, d);
        blk.wk = Mat<Scalar>::Zero(d, d);
        blk.bk = Mat<Scalar>::Zero(1, d);
        blk.wv = Mat<Scalar>::Zero(d, d);
        blk.bv = Mat<Scalar>::Zero(1, d);
        blk.wo = Mat<Scalar>::Zero(d, d);
        blk.bo = Mat<Scalar>::Zero(1, d);
        blk.ln2_gain = Mat<Scalar>::Zero(1, d);
        blk.ln2_bias = Mat<Scalar>::Zero(1, d);
        blk.w1 = Mat<Scalar>::Zero(d, f);
        blk.b1 = Mat<Scalar>::Zero(1, f);
        blk.w2 = Mat<Scalar>::Zero(f, d);
        blk.b2 = Mat<Scalar>::Zero(1, d);
    }
    w.final_ln_gain = Mat<Scalar>::Zero(1, d);
    w.final_ln_bias = Mat<Scalar>::Zero(1, d);
    w.output_bias = Mat<Scalar>::Zero(1, config.vocab_size);
    return w;
}

template <typename Scalar>
EncoderWeights<Scalar> EncoderWeights<Scalar>::init(const EncoderConfig& config, uint64_t seed) {
    EncoderWeights w = zeros(config);
    Rng rng(mix64(seed ^ 0x1234abcd9876ull));
    constexpr double kStd = 0.02;
    // Weight matrices and embeddings ~ N(0, 0.02^2); bias rows stay zero,
    // layer norm gains start at one. All 1-row tensors here are biases or
    // gains.
    w.for_each_param([&](const std::string& name, Mat<Scalar>& m) {
        if (m.rows() > 1) {
            for (Eigen::Index i = 0; i < m.rows(); ++i) {
                for (Eigen::Index j = 0; j < m.cols(); ++j) {
                    m(i, j) = static_cast<Scalar>(rng.normal(0.0, kStd));
                }
            }
        } else if (name.ends_with("gain")) {
            m.setOnes();
        }
    });
    return w;
}

namespace {

// Row-wise layer norm; stores xhat and 1/std for the backward pass.
template <typename Scalar>
Mat<Scalar> layer_norm(const Mat<Scalar>& x, const Mat<Scalar>& gain, const Mat<Scalar>& bias,
                       Mat<Scalar>& xhat, Mat<Scalar>& rstd) {
    constexpr Scalar kEps = static_cast<Scalar>(1e-5);
    const Eigen::Index n = x.rows(), d = x.cols();
    xhat.resize(n, d);
    rstd.resize(n, 1);
    Mat<Scalar> out(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        Scalar mean = x.row(i).mean();
        Scalar var = (x.row(i).array() - mean).square().mean();
        Scalar r = Scalar(1) / std::sqrt(var + kEps);
        rstd(i, 0) = r;
        xhat.row(i) = (x.row(i).array() - mean) * r;
        out.row(i) = xhat.row(i).cwiseProduct(gain.row(0)) + bias.row(0);
    }
    return out;
}

// dL/dx for layer norm given dL/dy; accumulates gain/bias grads.
template <typename Scalar>
Mat<Scalar> layer_norm_backward(const Mat<Scalar>& dy, const Mat<Scalar>& xhat,
                                const Mat<Scalar>& rstd, const Mat<Scalar>& gain,
                                Mat<Scalar>& dgain, Mat<Scalar>& dbias) {
    const Eigen::Index n = dy.rows(), d = dy.cols();
    Mat<Scalar> dx(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        auto dyr = dy.row(i).array();
        auto xh = xhat.row(i).array();
        dgain.row(0).array() += (dyr * xh);
        dbias.row(0).array() += dyr;
        auto dxhat = dyr * gain.row(0).array();
        Scalar m1 = dxhat.mean();
        Scalar m2 = (dxhat * xh).mean();
        dx.row(i) = (rstd(i, 0) * (dxhat - m1 - xh * m2)).matrix();
    }
    return dx;
}

template <typename Scalar>
Scalar gelu_scalar(Scalar x) {
    return Scalar(0.5) * x * (Scalar(1) + std::erf(x / std::numbers::sqrt2_v<Scalar>));
}

template <typename Scalar>
Scalar gelu_grad_scalar(Scalar x) {
    const Scalar cdf = Scalar(0.5) * (Scalar(1) + std::erf(x / std::numbers::sqrt2_v<Scalar>));
    const Scalar pdf = std::exp(Scalar(-0.5) * x * x) /
                       std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar>);
    return cdf + x * pdf;
}

}  // namespace

template <typename Scalar>
Mat<Scalar> forward_hidden(const EncoderWeights<Scalar>& w, const IdMatrix& input_ids,
                           EncoderCache<Scalar>* cache) {
    const EncoderConfig& cfg = w.config;
    const Eigen::Index B = input_ids.rows();
    const Eigen::Index L = input_ids.cols();
    const int d = cfg.hidden_dim;
    const int H = cfg.heads;
    const int dh = d / H;
    if (L > cfg.max_positions) {
        throw std::invalid_argument("forward: sequence length exceeds max_positions");
    }

    EncoderCache<Scalar> local;
    EncoderCache<Scalar>& c = cache ? *cache : local;
    c.input_ids = input_ids;
    c.layers.assign(static_cast<size_t>(cfg.layers), LayerCache<Scalar>{});
    c.valid_len.assign(static_cast<size_t>(B), static_cast<int>(L));
    constexpr TokenId kPad = 0;
    for (Eigen::Index b = 0; b < B; ++b) {
        int vl = static_cast<int>(L);
        while (vl > 0 && input_ids(b, vl - 1) == static_cast<int32_t>(kPad)) --vl;
        c.valid_len[static_cast<size_t>(b)] = std::max(vl, 1);
    }

    Mat<Scalar> x(B * L, d);
    for (Eigen::Index b = 0; b < B; ++b) {
        for (Eigen::Index t = 0; t < L; ++t) {
            int32_t id = input_ids(b, t);
            if (id < 0 || id >= cfg.vocab_size) {
                throw std::invalid_argument("forward: token id out of range");
            }
            x.row(b * L + t) = w.token_embedding.row(id) + w.position_embedding.row(t);
        }
    }

    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));
    for (int layer = 0; layer < cfg.layers; ++layer) {
        const BlockWeights<Scalar>& blk = w.blocks[static_cast<size_t>(layer)];
        LayerCache<Scalar>& lc = c.layers[static_cast<size_t>(layer)];
        lc.x_in = x;

        Mat<Scalar> a = layer_norm(x, blk.ln1_gain, blk.ln1_bias, lc.ln1_xhat, lc.ln1_rstd);
        lc.q = (a * blk.wq).rowwise() + blk.bq.row(0);
        lc.k = (a * blk.wk).rowwise() + blk.bk.row(0);
        lc.v = (a * blk.wv).rowwise() + blk.bv.row(0);

        lc.attn_probs.assign(static_cast<size_t>(B) * H, Mat<Scalar>());
        lc.attn_concat.resize(B * L, d);
        for (Eigen::Index b = 0; b < B; ++b) {
            const int vl = c.valid_len[static_cast<size_t>(b)];
            for (int h = 0; h < H; ++h) {
                auto Q = lc.q.block(b * L, h * dh, L, dh);
                auto K = lc.k.block(b * L, h * dh, L, dh);
                auto V = lc.v.block(b * L, h * dh, L, dh);
                Mat<Scalar> scores = Q * K.transpose() * scale;  // L x L
                if (vl < L) {
                    scores.rightCols(L - vl).setConstant(
                        -std::numeric_limits<Scalar>::infinity());
                }
                Mat<Scalar> probs(L, L);
                for (Eigen::Index i = 0; i < L; ++i) {
                    Scalar row_max = scores.row(i).head(vl).maxCoeff();
                    auto ex = (scores.row(i).array() - row_max).exp();
                    probs.row(i) = (ex / ex.sum()).matrix();
                }
                lc.attn_probs[static_cast<size_t>(b) * H + static_cast<size_t>(h)] = probs;
                lc.attn_concat.block(b * L, h * dh, L, dh) = probs * V;
            }
        }

        Mat<Scalar> attn = (lc.attn_concat * blk.wo).rowwise() + blk.bo.row(0);
        lc.x_mid = x + attn;

        Mat<Scalar> cmid =
            layer_norm(lc.x_mid, blk.ln2_gain, blk.ln2_bias, lc.ln2_xhat, lc.ln2_rstd);
        lc.ffn_pre = (cmid * blk.w1).rowwise() + blk.b1.row(0);
        Mat<Scalar> act = lc.ffn_pre.unaryExpr([](Scalar t) { return gelu_scalar(t); });
        Mat<Scalar> ffn = (act * blk.w2).rowwise() + blk.b2.row(0);
        x = lc.x_mid + ffn;
    }

    c.final_in = x;
    c.hidden = layer_norm(x, w.final_ln_gain, w.final_ln_bias, c.final_xhat, c.final_rstd);
    return c.hidden;
}

template <typename Scalar>
void backward_hidden(const EncoderWeights<Scalar>& w, const EncoderCache<Scalar>& c,
                     const Mat<Scalar>& d_hidden, EncoderWeights<Scalar>& grads) {
    const EncoderConfig& cfg = w.config;
    const Eigen::Index B = c.input_ids.rows();
    const Eigen::Index L = c.input_ids.cols();
    const int d = cfg.hidden_dim;
    const int H = cfg.heads;
    const int dh = d / H;
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));

    Mat<Scalar> dx = layer_norm_backward(d_hidden, c.final_xhat, c.final_rstd, w.final_ln_gain,
                                         grads.final_ln_gain, grads.final_ln_bias);

    for (int layer = cfg.layers - 1; layer >= 0; --layer) {
        const BlockWeights<Scalar>& blk = w.blocks[static_cast<size_t>(layer)];
        const LayerCache<Scalar>& lc = c.layers[static_cast<size_t>(layer)];
        BlockWeights<Scalar>& g = grads.blocks[static_cast<size_t>(layer)];

        // FFN path: x3 = x_mid + W2 * gelu(W1 * LN2(x_mid) + b1) + b2.
        Mat<Scalar> act = lc.ffn_pre.unaryExpr([](Scalar t) { return gelu_scalar(t); });
        Mat<Scalar> d_ffn_out = dx;  // alias for clarity
        g.b2.row(0) += d_ffn_out.colwise().sum();
        g.w2 += act.transpose() * d_ffn_out;
        Mat<Scalar> d_act = d_ffn_out * blk.w2.transpose();
        Mat<Scalar> d_pre =
            d_act.cwiseProduct(lc.ffn_pre.unaryExpr([](Scalar t) { return gelu_grad_scalar(t); }));
        g.b1.row(0) += d_pre.colwise().sum();
        Mat<Scalar> cmid(B * L, d);
        for (Eigen::Index i = 0; i < B * L; ++i) {
            cmid.row(i) = lc.ln2_xhat.row(i).cwiseProduct(blk.ln2_gain.row(0)) + blk.ln2_bias.row(0);
        }
        g.w1 += cmid.transpose() * d_pre;
        Mat<Scalar> d_cmid = d_pre * blk.w1.transpose();
        Mat<Scalar> d_xmid =
            dx + layer_norm_backward(d_cmid, lc.ln2_xhat, lc.ln2_rstd, blk.ln2_gain, g.ln2_gain,
                                     g.ln2_bias);

        // Attention path: x_mid = x_in + Wo * concat(heads) + bo.
        g.bo.row(0) += d_xmid.colwise().sum();
        g.wo += lc.attn_concat.transpose() * d_xmid;
        Mat<Scalar> d_concat = d_xmid * blk.wo.transpose();

        Mat<Scalar> dq = Mat<Scalar>::Zero(B * L, d);
        Mat<Scalar> dk = Mat<Scalar>::Zero(B * L, d);
        Mat<Scalar> dv = Mat<Scalar>::Zero(B * L, d);
        for (Eigen::Index b = 0; b < B; ++b) {
            for (int h = 0; h < H; ++h) {
                const Mat<Scalar>& P = lc.attn_probs[static_cast<size_t>(b) * H +
                                                     static_cast<size_t>(h)];
                auto Q = lc.q.block(b * L, h * dh, L, dh);
                auto K = lc.k.block(b * L, h * dh, L, dh);
                auto V = lc.v.block(b * L, h * dh, L, dh);
                auto dO = d_concat.block(b * L, h * dh, L, dh);
                Mat<Scalar> dP = dO * V.transpose();
                Mat<Scalar> dS(L, L);
                for (Eigen::Index i = 0; i < L; ++i) {
                    Scalar dot = dP.row(i).cwiseProduct(P.row(i)).sum();
                    dS.row(i) = P.row(i).cwiseProduct(dP.row(i).array() - dot);
                }
                dq.block(b * L, h * dh, L, dh) += dS * K * scale;
                dk.block(b * L, h * dh, L, dh) += dS.transpose() * Q * scale;
                dv.block(b * L, h * dh, L, dh) += P.transpose() * dO;
            }
        }

        Mat<Scalar> a(B * L, d);
        for (Eigen::Index i = 0; i < B * L; ++i) {
            a.row(i) = lc.ln1_xhat.row(i).cwiseProduct(blk.ln1_gain.row(0)) + blk.ln1_bias.row(0);
        }
        g.bq.row(0) += dq.colwise().sum();
        g.wq += a.transpose() * dq;
        g.bk.row(0) += dk.colwise().sum();
        g.wk += a.transpose() * dk;
        g.bv.row(0) += dv.colwise().sum();
        g.wv += a.transpose() * dv;
        Mat<Scalar> da = dq * blk.wq.transpose() + dk * blk.wk.transpose() + dv * blk.wv.transpose();
        dx = d_xmid + layer_norm_backward(da, lc.ln1_xhat, lc.ln1_rstd, blk.ln1_gain, g.ln1_gain,
                                          g.ln1_bias);
    }

    for (Eigen::Index b = 0; b < B; ++b) {
        for (Eigen::Index t = 0; t < L; ++t) {
            int32_t id = c.input_ids(b, t);
            grads.token_embedding.row(id) += dx.row(b * L + t);
            grads.position_embedding.row(t) += dx.row(b * L + t);
        }
    }
}

template <typename Scalar>
MlmForward<Scalar> forward_mlm(const EncoderWeights<Scalar>& w, const TokenBatch& batch,
                               EncoderCache<Scalar>* cache) {
    EncoderCache<Scalar> local;
    EncoderCache<Scalar>& c = cache ? *cache : local;
    Mat<Scalar> hidden = forward_hidden(w, batch.input_ids, &c);

    const Eigen::Index B = batch.input_ids.rows();
    const Eigen::Index L = batch.input_ids.cols();
    const int V = w.config.vocab_size;

    MlmForward<Scalar> out;
    std::vector<std::pair<Eigen::Index, int64_t>> masked;  // (flat row, target id)
    for (Eigen::Index b = 0; b < B; ++b) {
        for (Eigen::Index t = 0; t < L; ++t) {
            int64_t target = batch.targets(b, t);
            if (target < 0) continue;
            if (target >= V) throw std::invalid_argument("forward_mlm: target id out of range");
            masked.emplace_back(b * L + t, target);
        }
    }
    out.n_masked = masked.size();
    if (masked.empty()) {
        out.zero_mask_warning = true;
        out.loss = 0.0;
        return out;
    }

    const auto M = static_cast<Eigen::Index>(masked.size());
    Mat<Scalar> gathered(M, w.config.hidden_dim);
    for (Eigen::Index m = 0; m < M; ++m) {
        gathered.row(m) = hidden.row(masked[static_cast<size_t>(m)].first);
    }
    out.masked_logits = gathered * w.token_embedding.transpose();
    out.masked_logits.rowwise() += w.output_bias.row(0);

    double loss = 0.0;
    for (Eigen::Index m = 0; m < M; ++m) {
        auto logits = out.masked_logits.row(m).array();
        Scalar mx = logits.maxCoeff();
        double lse = static_cast<double>(mx) +
                     std::log((logits - mx).exp().template cast<double>().sum());
        loss += lse -
                static_cast<double>(logits(static_cast<Eigen::Index>(masked[static_cast<size_t>(m)].second)));
    }
    out.loss = loss / static_cast<double>(masked.size());
    return out;
}

template <typename Scalar>
EncoderWeights<Scalar> backward_mlm(const EncoderWeights<Scalar>& w, const TokenBatch& batch,
                                    const EncoderCache<Scalar>& cache) {
    EncoderWeights<Scalar> grads = EncoderWeights<Scalar>::zeros(w.config);
    const Eigen::Index B = batch.input_ids.rows();
    const Eigen::Index L = batch.input_ids.cols();

    std::vector<std::pair<Eigen::Index, int64_t>> masked;
    for (Eigen::Index b = 0; b < B; ++b) {
        for (Eigen::Index t = 0; t < L; ++t) {
            int64_t target = batch.targets(b, t);
            if (target >= 0) masked.emplace_back(b * L + t, target);
        }
    }
    if (masked.empty()) return grads;

    const auto M = static_cast<Eigen::Index>(masked.size());
    const Scalar inv_m = Scalar(1) / static_cast<Scalar>(masked.size());
    Mat<Scalar> gathered(M, w.config.hidden_dim);
    for (Eigen::Index m = 0; m < M; ++m) {
        gathered.row(m) = cache.hidden.row(masked[static_cast<size_t>(m)].first);
    }
    Mat<Scalar> d_logits = gathered * w.token_embedding.transpose();
    d_logits.rowwise() += w.output_bias.row(0);
    for (Eigen::Index m = 0; m < M; ++m) {
        auto row = d_logits.row(m).array();
        Scalar mx = row.maxCoeff();
        row = (row - mx).exp();
        row /= row.sum();
        d_logits(m, static_cast<Eigen::Index>(masked[static_cast<size_t>(m)].second)) -= Scalar(1);
        d_logits.row(m) *= inv_m;
    }

    grads.output_bias.row(0) += d_logits.colwise().sum();
    // Tied embedding: the output projection gradient lands on it too.
    grads.token_embedding += d_logits.transpose() * gathered;
    Mat<Scalar> d_gathered = d_logits * w.token_embedding;

    Mat<Scalar> d_hidden = Mat<Scalar>::Zero(B * L, w.config.hidden_dim);
    for (Eigen::Index m = 0; m < M; ++m) {
        d_hidden.row(masked[static_cast<size_t>(m)].first) += d_gathered.row(m);
    }

    backward_hidden(w, cache, d_hidden, grads);
    return grads;
}

namespace {
constexpr char kCkptMagic[4] = {'V', 'K', 'C', 'P'};
constexpr uint32_t kCkptVersion = 1;

void write_u32(std::ofstream& out, uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
uint32_t read_u32(std::ifstream& in) {
    uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
}  // namespace

template <typename Scalar>
void save_checkpoint(const EncoderWeights<Scalar>& w, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out.write(kCkptMagic, 4);
    write_u32(out, kCkptVersion);
    const EncoderConfig& cfg = w.config;
    for (int v : {cfg.layers, cfg.hidden_dim, cfg.heads, cfg.ffn_dim, cfg.vocab_size,
                  cfg.max_positions, static_cast<int>(cfg.size_class)}) {
        write_u32(out, static_cast<uint32_t>(v));
    }
    w.for_each_param_const([&](const std::string& name, const Mat<Scalar>& m) {
        write_u32(out, static_cast<uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u32(out, static_cast<uint32_t>(m.rows()));
        write_u32(out, static_cast<uint32_t>(m.cols()));
        Mat<double> md = m.template cast<double>();
        out.write(reinterpret_cast<const char*>(md.data()),
                  static_cast<std::streamsize>(sizeof(double) * md.size()));
    });
    if (!out) throw std::runtime_error("I/O error writing checkpoint: " + path);
}

template <typename Scalar>
EncoderWeights<Scalar> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kCkptMagic, 4) != 0) {
        throw std::runtime_error("not a varikit checkpoint: " + path);
    }
    if (read_u32(in) != kCkptVersion) throw std::runtime_error("unsupported checkpoint version");
    EncoderConfig cfg;
    cfg.layers = static_cast<int>(read_u32(in));
    cfg.hidden_dim = static_cast<int>(read_u32(in));
    cfg.heads = static_cast<int>(read_u32(in));
    cfg.ffn_dim = static_cast<int>(read_u32(in));
    cfg.vocab_size = static_cast<int>(read_u32(in));
    cfg.max_positions = static_cast<int>(read_u32(in));
    cfg.size_class = static_cast<SizeClass>(read_u32(in));

    EncoderWeights<Scalar> w = EncoderWeights<Scalar>::zeros(cfg);
    w.for_each_param([&](const std::string& name, Mat<Scalar>& m) {
        uint32_t name_len = read_u32(in);
        std::string file_name(name_len, '\0');
        in.read(file_name.data(), name_len);
        if (file_name != name) {
            throw std::runtime_error("checkpoint parameter order mismatch at " + name);
        }
        uint32_t rows = read_u32(in), cols = read_u32(in);
        if (rows != m.rows() || cols != m.cols()) {
            throw std::runtime_error("checkpoint shape mismatch at " + name);
        }
        Mat<double> md(rows, cols);
        in.read(reinterpret_cast<char*>(md.data()),
                static_cast<std::streamsize>(sizeof(double) * md.size()));
        m = md.cast<Scalar>();
    });
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    return w;
}

// Explicit instantiations: float for training, double for gradient checks.
template struct EncoderWeights<float>;
template struct EncoderWeights<double>;

template Mat<float> forward_hidden<float>(const EncoderWeights<float>&, const IdMatrix&,
                                          EncoderCache<float>*);
template Mat<double> forward_hidden<double>(const EncoderWeights<double>&, const IdMatrix&,
                                            EncoderCache<double>*);
template void backward_hidden<float>(const EncoderWeights<float>&, const EncoderCache<float>&,
                                     const Mat<float>&, EncoderWeights<float>&);
template void backward_hidden<double>(const EncoderWeights<double>&, const EncoderCache<double>&,
                                      const Mat<double>&, EncoderWeights<double>&);
template MlmForward<float> forward_mlm<float>(const EncoderWeights<float>&, const TokenBatch&,
                                              EncoderCache<float>*);
template MlmForward<double> forward_mlm<double>(const EncoderWeights<double>&, const TokenBatch&,
                                                EncoderCache<double>*);
template EncoderWeights<float> backward_mlm<float>(const EncoderWeights<float>&, const TokenBatch&,
                                                   const EncoderCache<float>&);
template EncoderWeights<double> backward_mlm<double>(const EncoderWeights<double>&,
                                                     const TokenBatch&,
                                                     const EncoderCache<double>&);
template void save_checkpoint<float>(const EncoderWeights<float>&, const std::string&);
template void save_checkpoint<double>(const EncoderWeights<double>&, const std::string&);
template EncoderWeights<float> load_checkpoint<float>(const std::string&);
template EncoderWeights<double> load_checkpoint<double>(const std::string&);

}  // namespace varikit
