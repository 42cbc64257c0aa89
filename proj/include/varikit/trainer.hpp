#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "varikit/encoder.hpp"
#include "varikit/packing.hpp"

namespace varikit {

struct TrainOptions {
    int epochs = 5;
    double peak_lr = 3e-4;
    int batch_size = 8;
    double warmup_fraction = 0.06;
    double clip_norm = 0.0;  // 0 disables clipping
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.98;
    double adam_eps = 1e-6;
    uint64_t seed = 1;
    MaskParams mask;
    double explosion_grad_norm = 1e3;
};

// Linear warmup to peak_lr, then linear decay to zero.
struct LrSchedule {
    double peak_lr = 0.0;
    int64_t warmup_steps = 0;
    int64_t total_steps = 1;

    double at(int64_t step) const;
};

struct TrainLogEntry {
    int64_t step = 0;
    double lr = 0.0;
    double loss = 0.0;
    double grad_norm = 0.0;  // global norm before any clipping
};

struct EpochVal {
    int epoch = 0;  // 1-based
    double val_loss = 0.0;
};

template <typename Scalar>
struct TrainState {
    EncoderWeights<Scalar> weights;
    EncoderWeights<Scalar> adam_m;
    EncoderWeights<Scalar> adam_v;
    int64_t step = 0;
    bool exploded = false;
    std::vector<TrainLogEntry> history;
    std::vector<EpochVal> val_history;

    static TrainState initialize(const EncoderConfig& config, uint64_t seed);
};

// One forward/backward/AdamW step. Gradient norm is recorded before any
// clipping; a non-finite loss or gradient aborts the update and marks the
// state exploded.
template <typename Scalar>
TrainLogEntry train_step(TrainState<Scalar>& state, const TokenBatch& batch,
                         const LrSchedule& schedule, const TrainOptions& options);

template <typename Scalar>
struct TrainResult {
    TrainState<Scalar> state;
    std::vector<EncoderWeights<Scalar>> checkpoints;  // one per completed epoch
};

// Epoch loop with per-epoch validation loss and checkpoints. Masking is
// re-drawn per epoch from seeds derived from (seed, epoch); validation
// masking is fixed across epochs so the losses are comparable.
template <typename Scalar>
TrainResult<Scalar> train(const EncoderConfig& config,
                          const std::vector<PackedSequence>& train_data,
                          const std::vector<PackedSequence>& val_data,
                          const TrainOptions& options);

// 1-based epoch of the minimum validation loss, earliest on ties.
int select_best_checkpoint(const std::vector<EpochVal>& val_history);

struct StabilityOutcome {
    std::string regime;
    double lr = 0.0;
    bool exploded = false;
};

struct StabilityReport {
    std::vector<StabilityOutcome> outcomes;           // grid order per regime
    std::map<std::string, double> max_stable_lr;      // 0 when nothing was stable
    double explosion_grad_norm = 1e3;
};

// Runs budget_steps of training per (regime, lr) and classifies the run
// exploded when the gradient norm exceeds the threshold or a loss turns
// non-finite.
StabilityReport lr_stability_probe(
    const EncoderConfig& config,
    const std::vector<std::pair<std::string, const std::vector<PackedSequence>*>>& regimes,
    const std::vector<double>& lr_grid, int budget_steps, uint64_t seed,
    const TrainOptions& base_options = {});

struct GradCheckResult {
    double max_rel_error = 0.0;
    size_t coordinates_checked = 0;
};

// Central finite differences against the analytic gradient on a random
// toy batch, in double precision.
GradCheckResult gradient_check(const EncoderConfig& config, uint64_t seed, size_t n_coordinates,
                               double fd_step = 1e-3);

}  // namespace varikit
