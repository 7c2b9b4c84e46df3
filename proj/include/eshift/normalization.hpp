#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eshift/tensor.hpp"

namespace eshift {

/// Which axes a standardization averages over. One kernel serves BN, LN, GN
/// and IN; they differ only in how the input is partitioned into cells.
enum class PartitionKind {
    BatchPerFeature,             // rank-2 [m x d]: one cell per feature
    BatchPerChannelSpatial,      // rank-4 [m x d x H x W]: one cell per channel
    PerSampleAllFeatures,        // one cell per sample
    PerSampleGroup,              // one cell per (sample, feature group)
    PerSamplePerChannelSpatial,  // rank-4: one cell per (sample, channel)
};

struct PartitionScheme {
    PartitionKind kind = PartitionKind::BatchPerFeature;
    std::size_t groups = 1;  // PerSampleGroup only

    static PartitionScheme batch_per_feature() { return {PartitionKind::BatchPerFeature, 1}; }
    static PartitionScheme batch_per_channel_spatial() { return {PartitionKind::BatchPerChannelSpatial, 1}; }
    static PartitionScheme per_sample_all_features() { return {PartitionKind::PerSampleAllFeatures, 1}; }
    static PartitionScheme per_sample_group(std::size_t g) { return {PartitionKind::PerSampleGroup, g}; }
    static PartitionScheme per_sample_per_channel_spatial() { return {PartitionKind::PerSamplePerChannelSpatial, 1}; }
};

struct StandardizeCache {
    Tensor normalized;         // x-hat
    std::vector<double> mean;  // per cell
    std::vector<double> var;   // per cell, biased
    PartitionKind kind = PartitionKind::BatchPerFeature;
    std::size_t groups = 1;
    std::size_t samples = 0, channels = 0, spatial = 1, cells = 0;
    double eps = 0.0;
    bool live = false;
};

/// Within each partition cell: y = (x - mean) / sqrt(var + eps), biased
/// moments over the cell. The cache keeps what the exact backward needs.
Tensor standardize_forward(const Tensor& x, const PartitionScheme& scheme, double eps,
                           StandardizeCache* cache = nullptr);

/// Exact gradient of the standardization map:
/// dx = inv_std * (dy - mean_cell(dy) - xhat * mean_cell(dy * xhat)).
Tensor standardize_backward(StandardizeCache& cache, const Tensor& dy);

struct AffineParams {
    Tensor gamma;  // [d]
    Tensor beta;   // [d]
};

struct BatchNormState {
    Tensor running_mean;  // [d]
    Tensor running_var;   // [d], elementwise >= 0
    double alpha = 0.9;   // weight of the newest batch in the running average
    double eps = 1e-5;
    std::optional<AffineParams> affine;
    enum class Mode { Train, Infer } mode = Mode::Train;
};

BatchNormState make_batch_norm(std::size_t features, double alpha, double eps, bool affine);

struct BatchStats {
    Tensor mean;  // [d]
    Tensor var;   // [d]
};

struct BnTrainResult {
    Tensor y;
    BatchStats stats;
};

/// Training transform: standardize with the batch scheme matching the input
/// rank ([m x d] per feature, [m x d x H x W] per channel pooled over m,H,W),
/// then the affine map when present. Also returns the batch statistics the
/// running update consumes.
BnTrainResult bn_forward_train(BatchNormState& state, const Tensor& x,
                               StandardizeCache* cache = nullptr);

/// running <- (1 - alpha) * running + alpha * batch, for mean and variance.
void bn_update_running(BatchNormState& state, const BatchStats& stats);

/// Inference transform: elementwise (x - running_mean) / sqrt(running_var + eps)
/// per feature/channel, affine afterward; independent of batch composition.
Tensor bn_forward_infer(const BatchNormState& state, const Tensor& x);

struct PerturbReport {
    std::size_t clamped = 0;  // variance entries clamped up to eps
};

/// Multiplicative noise on the estimated statistics: each feature draws
/// delta_mu, delta_sigma ~ uniform(-delta_max, delta_max) independently and
/// scales mean (variance) by 1 + delta.
PerturbReport perturb_stats(BatchNormState& state, double delta_max, RngState& rng);

}  // namespace eshift
