#include "varikit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "varikit/util/rng.hpp"

namespace varikit {

double LrSchedule::at(int64_t step) const {
    if (total_steps <= 0) return peak_lr;
    if (step < warmup_steps) {
        return peak_lr * static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
    }
    int64_t decay_steps = std::max<int64_t>(total_steps - warmup_steps, 1);
    double frac = static_cast<double>(total_steps - step) / static_cast<double>(decay_steps);
    return peak_lr * std::clamp(frac, 0.0, 1.0);
}

template <typename Scalar>
TrainState<Scalar> TrainState<Scalar>::initialize(const EncoderConfig& config, uint64_t seed) {
    TrainState state{
        EncoderWeights<Scalar>::init(config, seed),
        EncoderWeights<Scalar>::zeros(config),
        EncoderWeights<Scalar>::zeros(config),
    };
    return state;
}

template <typename Scalar>
TrainLogEntry train_step(TrainState<Scalar>& state, const TokenBatch& batch,
                         const LrSchedule& schedule, const TrainOptions& options) {
    const double lr = schedule.at(state.step);
    TrainLogEntry entry{state.step, lr, 0.0, 0.0};

    EncoderCache<Scalar> cache;
    MlmForward<Scalar> fwd = forward_mlm(state.weights, batch, &cache);
    entry.loss = fwd.loss;
    if (!std::isfinite(fwd.loss)) {
        state.exploded = true;
        state.history.push_back(entry);
        ++state.step;
        return entry;
    }

    EncoderWeights<Scalar> grads = backward_mlm(state.weights, batch, cache);
    double grad_norm = std::sqrt(grads.squared_norm());
    entry.grad_norm = grad_norm;
    if (!std::isfinite(grad_norm)) {
        state.exploded = true;
        state.history.push_back(entry);
        ++state.step;
        return entry;
    }

    double scale = 1.0;
    if (options.clip_norm > 0.0 && grad_norm > options.clip_norm) {
        scale = options.clip_norm / grad_norm;
    }

    // AdamW with decoupled weight decay; decay skips biases and layer norm
    // parameters (the 1-row tensors).
    const double b1 = options.beta1, b2 = options.beta2;
    const double step_num = static_cast<double>(state.step + 1);
    const double bias_c1 = 1.0 - std::pow(b1, step_num);
    const double bias_c2 = 1.0 - std::pow(b2, step_num);

    std::vector<Mat<Scalar>*> params, ms, vs;
    state.weights.for_each_param([&](const std::string&, Mat<Scalar>& m) { params.push_back(&m); });
    state.adam_m.for_each_param([&](const std::string&, Mat<Scalar>& m) { ms.push_back(&m); });
    state.adam_v.for_each_param([&](const std::string&, Mat<Scalar>& m) { vs.push_back(&m); });
    std::vector<const Mat<Scalar>*> gs;
    grads.for_each_param_const([&](const std::string&, const Mat<Scalar>& m) { gs.push_back(&m); });

    for (size_t i = 0; i < params.size(); ++i) {
        auto& p = *params[i];
        auto& m = *ms[i];
        auto& v = *vs[i];
        auto g = (gs[i]->array() * static_cast<Scalar>(scale)).eval();
        m.array() = static_cast<Scalar>(b1) * m.array() + static_cast<Scalar>(1.0 - b1) * g;
        v.array() = static_cast<Scalar>(b2) * v.array() + static_cast<Scalar>(1.0 - b2) * g * g;
        auto m_hat = m.array() / static_cast<Scalar>(bias_c1);
        auto v_hat = v.array() / static_cast<Scalar>(bias_c2);
        auto update = m_hat / (v_hat.sqrt() + static_cast<Scalar>(options.adam_eps));
        if (options.weight_decay > 0.0 && p.rows() > 1) {
            p.array() -= static_cast<Scalar>(lr) *
                         (update + static_cast<Scalar>(options.weight_decay) * p.array());
        } else {
            p.array() -= static_cast<Scalar>(lr) * update;
        }
    }

    state.history.push_back(entry);
    ++state.step;
    return entry;
}

namespace {

template <typename Scalar>
double validation_loss(const EncoderWeights<Scalar>& weights,
                       const std::vector<PackedSequence>& val_data, const TrainOptions& options) {
    if (val_data.empty()) throw std::invalid_argument("train: validation split is empty");
    const uint64_t val_seed = hash_combine(options.seed, 0xa11da7aull);
    double total = 0.0;
    size_t total_masked = 0;
    for (size_t start = 0; start < val_data.size();
         start += static_cast<size_t>(options.batch_size)) {
        size_t end = std::min(val_data.size(), start + static_cast<size_t>(options.batch_size));
        std::vector<MaskedSequence> masked;
        masked.reserve(end - start);
        for (size_t i = start; i < end; ++i) {
            masked.push_back(apply_mlm_mask(val_data[i], options.mask,
                                            static_cast<uint32_t>(weights.config.vocab_size), {},
                                            hash_combine(val_seed, i)));
        }
        TokenBatch batch = make_token_batch(masked);
        MlmForward<Scalar> fwd = forward_mlm(weights, batch, nullptr);
        total += fwd.loss * static_cast<double>(fwd.n_masked);
        total_masked += fwd.n_masked;
    }
    return total_masked == 0 ? 0.0 : total / static_cast<double>(total_masked);
}

}  // namespace

template <typename Scalar>
TrainResult<Scalar> train(const EncoderConfig& config,
                          const std::vector<PackedSequence>& train_data,
                          const std::vector<PackedSequence>& val_data,
                          const TrainOptions& options) {
    if (train_data.empty()) throw std::invalid_argument("train: no training data");
    if (val_data.empty()) throw std::invalid_argument("train: validation split required");

    TrainResult<Scalar> result{TrainState<Scalar>::initialize(config, options.seed), {}};
    const size_t batches_per_epoch =
        (train_data.size() + static_cast<size_t>(options.batch_size) - 1) /
        static_cast<size_t>(options.batch_size);
    const int64_t total_steps =
        static_cast<int64_t>(batches_per_epoch) * std::max(options.epochs, 1);
    LrSchedule schedule{options.peak_lr,
                        std::max<int64_t>(1, static_cast<int64_t>(options.warmup_fraction *
                                                                  static_cast<double>(total_steps))),
                        total_steps};

    std::vector<size_t> order(train_data.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= options.epochs; ++epoch) {
        Rng shuffle_rng(hash_combine(options.seed, 0xe90c000ull + static_cast<uint64_t>(epoch)));
        shuffle_rng.shuffle(order);
        const uint64_t mask_seed = hash_combine(options.seed, static_cast<uint64_t>(epoch));

        for (size_t start = 0; start < order.size();
             start += static_cast<size_t>(options.batch_size)) {
            size_t end = std::min(order.size(), start + static_cast<size_t>(options.batch_size));
            std::vector<MaskedSequence> masked;
            masked.reserve(end - start);
            for (size_t i = start; i < end; ++i) {
                masked.push_back(apply_mlm_mask(train_data[order[i]], options.mask,
                                                static_cast<uint32_t>(config.vocab_size), {},
                                                hash_combine(mask_seed, order[i])));
            }
            TokenBatch batch = make_token_batch(masked);
            train_step(result.state, batch, schedule, options);
            if (result.state.exploded) return result;
        }

        result.state.val_history.push_back(
            {epoch, validation_loss(result.state.weights, val_data, options)});
        result.checkpoints.push_back(result.state.weights);
    }
    return result;
}

int select_best_checkpoint(const std::vector<EpochVal>& val_history) {
    if (val_history.empty()) {
        throw std::invalid_argument("select_best_checkpoint: no validation history");
    }
    int best_epoch = val_history.front().epoch;
    double best_loss = val_history.front().val_loss;
    for (const EpochVal& e : val_history) {
        if (e.val_loss < best_loss) {
            best_loss = e.val_loss;
            best_epoch = e.epoch;
        }
    }
    return best_epoch;
}

StabilityReport lr_stability_probe(
    const EncoderConfig& config,
    const std::vector<std::pair<std::string, const std::vector<PackedSequence>*>>& regimes,
    const std::vector<double>& lr_grid, int budget_steps, uint64_t seed,
    const TrainOptions& base_options) {
    if (lr_grid.empty()) throw std::invalid_argument("lr_stability_probe: empty grid");
    for (size_t i = 1; i < lr_grid.size(); ++i) {
        if (lr_grid[i] >= lr_grid[i - 1]) {
            throw std::invalid_argument("lr_stability_probe: grid must be descending");
        }
    }

    StabilityReport report;
    report.explosion_grad_norm = base_options.explosion_grad_norm;
    for (const auto& [regime, data] : regimes) {
        if (!data || data->empty()) {
            throw std::invalid_argument("lr_stability_probe: regime \"" + regime +
                                        "\" has no data");
        }
        double max_stable = 0.0;
        for (double lr : lr_grid) {
            TrainOptions options = base_options;
            options.peak_lr = lr;
            options.seed = seed;
            TrainState<float> state = TrainState<float>::initialize(config, seed);
            // Constant lr inside the probe: warmup would hide instability.
            LrSchedule schedule{lr, 0, 0};

            bool exploded = false;
            const uint64_t mask_seed = hash_combine(seed, fnv1a64(regime));
            size_t cursor = 0;
            for (int s = 0; s < budget_steps && !exploded; ++s) {
                std::vector<MaskedSequence> masked;
                for (int b = 0; b < options.batch_size; ++b) {
                    size_t idx = cursor % data->size();
                    ++cursor;
                    masked.push_back(apply_mlm_mask((*data)[idx], options.mask,
                                                    static_cast<uint32_t>(config.vocab_size), {},
                                                    hash_combine(mask_seed, cursor)));
                }
                TokenBatch batch = make_token_batch(masked);
                TrainLogEntry entry = train_step(state, batch, schedule, options);
                if (state.exploded || !std::isfinite(entry.loss) ||
                    entry.grad_norm > options.explosion_grad_norm) {
                    exploded = true;
                }
            }
            report.outcomes.push_back({regime, lr, exploded});
            if (!exploded && max_stable == 0.0) max_stable = lr;  // grid is descending
        }
        report.max_stable_lr[regime] = max_stable;
    }
    return report;
}

GradCheckResult gradient_check(const EncoderConfig& config, uint64_t seed, size_t n_coordinates,
                               double fd_step) {
    config.validate();
    Rng rng(mix64(seed ^ 0x9dc0ffeeull));

    // Random batch: two sequences of random regular tokens with ~15%
    // random MLM targets.
    const int L = std::min(16, config.max_positions);
    const int B = 2;
    TokenBatch batch;
    batch.input_ids.resize(B, L);
    batch.targets.resize(B, L);
    const uint32_t n_regular = static_cast<uint32_t>(config.vocab_size) - SpecialIds::kCount;
    for (int b = 0; b < B; ++b) {
        for (int t = 0; t < L; ++t) {
            batch.input_ids(b, t) =
                static_cast<int32_t>(SpecialIds::kCount + rng.uniform_int(n_regular));
            batch.targets(b, t) =
                rng.uniform() < 0.15
                    ? static_cast<int64_t>(SpecialIds::kCount + rng.uniform_int(n_regular))
                    : -1;
        }
    }
    // Guarantee at least one target.
    batch.targets(0, 0) = static_cast<int64_t>(SpecialIds::kCount);

    EncoderWeights<double> weights = EncoderWeights<double>::init(config, seed);
    EncoderCache<double> cache;
    forward_mlm(weights, batch, &cache);
    EncoderWeights<double> grads = backward_mlm(weights, batch, cache);

    std::vector<Mat<double>*> params;
    weights.for_each_param([&](const std::string&, Mat<double>& m) { params.push_back(&m); });
    std::vector<Mat<double>*> grad_mats;
    grads.for_each_param([&](const std::string&, Mat<double>& m) { grad_mats.push_back(&m); });

    GradCheckResult result;
    result.coordinates_checked = n_coordinates;
    for (size_t c = 0; c < n_coordinates; ++c) {
        size_t p = rng.uniform_int(params.size());
        Mat<double>& mat = *params[p];
        Eigen::Index i = static_cast<Eigen::Index>(rng.uniform_int(static_cast<uint64_t>(mat.rows())));
        Eigen::Index j = static_cast<Eigen::Index>(rng.uniform_int(static_cast<uint64_t>(mat.cols())));

        const double original = mat(i, j);
        mat(i, j) = original + fd_step;
        double loss_plus = forward_mlm(weights, batch, nullptr).loss;
        mat(i, j) = original - fd_step;
        double loss_minus = forward_mlm(weights, batch, nullptr).loss;
        mat(i, j) = original;

        double fd = (loss_plus - loss_minus) / (2.0 * fd_step);
        double analytic = (*grad_mats[p])(i, j);
        double denom = std::max({std::abs(fd), std::abs(analytic), 1e-8});
        double rel = std::abs(fd - analytic) / denom;
        result.max_rel_error = std::max(result.max_rel_error, rel);
    }
    return result;
}

template struct TrainState<float>;
template struct TrainState<double>;
template TrainLogEntry train_step<float>(TrainState<float>&, const TokenBatch&, const LrSchedule&,
                                         const TrainOptions&);
template TrainLogEntry train_step<double>(TrainState<double>&, const TokenBatch&,
                                          const LrSchedule&, const TrainOptions&);
template TrainResult<float> train<float>(const EncoderConfig&, const std::vector<PackedSequence>&,
                                         const std::vector<PackedSequence>&, const TrainOptions&);
template TrainResult<double> train<double>(const EncoderConfig&,
                                           const std::vector<PackedSequence>&,
                                           const std::vector<PackedSequence>&,
                                           const TrainOptions&);

}  // namespace varikit
