#include "eshift/normalization.hpp"

#include <cmath>
#include <stdexcept>

namespace eshift {

namespace {

struct CellLayout {
    PartitionKind kind;
    std::size_t groups;
    std::size_t samples, channels, spatial, cells;
    std::size_t group_width;  // channels per group (PerSampleGroup)
};

CellLayout resolve_layout(const Tensor& x, const PartitionScheme& scheme) {
    CellLayout lay{};
    lay.kind = scheme.kind;
    lay.groups = scheme.groups;
    const std::size_t rank = x.rank();
    if (rank == 2) {
        lay.samples = x.dim(0);
        lay.channels = x.dim(1);
        lay.spatial = 1;
    } else if (rank == 4) {
        lay.samples = x.dim(0);
        lay.channels = x.dim(1);
        lay.spatial = x.dim(2) * x.dim(3);
    } else {
        throw std::invalid_argument("standardize expects rank-2 or rank-4 input, got " + x.shape_str());
    }

    switch (scheme.kind) {
        case PartitionKind::BatchPerFeature:
            if (rank != 2) throw std::invalid_argument("batch-per-feature requires rank-2 input");
            lay.cells = lay.channels;
            break;
        case PartitionKind::BatchPerChannelSpatial:
            if (rank != 4) throw std::invalid_argument("batch-per-channel-spatial requires rank-4 input");
            lay.cells = lay.channels;
            break;
        case PartitionKind::PerSampleAllFeatures:
            lay.cells = lay.samples;
            break;
        case PartitionKind::PerSampleGroup:
            if (scheme.groups < 1 || lay.channels % scheme.groups != 0) {
                throw std::invalid_argument("group count must divide the feature/channel count");
            }
            lay.group_width = lay.channels / scheme.groups;
            lay.cells = lay.samples * scheme.groups;
            break;
        case PartitionKind::PerSamplePerChannelSpatial:
            if (rank != 4) throw std::invalid_argument("per-sample-per-channel-spatial requires rank-4 input");
            lay.cells = lay.samples * lay.channels;
            break;
    }
    return lay;
}

inline std::size_t cell_id(const CellLayout& lay, std::size_t n, std::size_t c) {
    switch (lay.kind) {
        case PartitionKind::BatchPerFeature:
        case PartitionKind::BatchPerChannelSpatial:
            return c;
        case PartitionKind::PerSampleAllFeatures:
            return n;
        case PartitionKind::PerSampleGroup:
            return n * lay.groups + c / lay.group_width;
        case PartitionKind::PerSamplePerChannelSpatial:
            return n * lay.channels + c;
    }
    return 0;
}

CellLayout layout_from_cache(const StandardizeCache& cache) {
    CellLayout lay{};
    lay.kind = cache.kind;
    lay.groups = cache.groups;
    lay.samples = cache.samples;
    lay.channels = cache.channels;
    lay.spatial = cache.spatial;
    lay.cells = cache.cells;
    lay.group_width = cache.groups ? cache.channels / cache.groups : cache.channels;
    return lay;
}

}  // namespace

Tensor standardize_forward(const Tensor& x, const PartitionScheme& scheme, double eps,
                           StandardizeCache* cache) {
    if (eps <= 0) throw std::invalid_argument("standardize eps must be positive");
    const CellLayout lay = resolve_layout(x, scheme);
    const std::size_t S = lay.spatial;
    const double cell_size = static_cast<double>(x.size() / lay.cells);

    std::vector<double> mean(lay.cells, 0.0), var(lay.cells, 0.0);
    const double* xp = x.data();
    for (std::size_t n = 0; n < lay.samples; ++n) {
        for (std::size_t c = 0; c < lay.channels; ++c) {
            const double* row = xp + (n * lay.channels + c) * S;
            double s = 0;
            for (std::size_t i = 0; i < S; ++i) s += row[i];
            mean[cell_id(lay, n, c)] += s;
        }
    }
    for (double& v : mean) v /= cell_size;
    for (std::size_t n = 0; n < lay.samples; ++n) {
        for (std::size_t c = 0; c < lay.channels; ++c) {
            const double* row = xp + (n * lay.channels + c) * S;
            const double mu = mean[cell_id(lay, n, c)];
            double s = 0;
            for (std::size_t i = 0; i < S; ++i) {
                const double d = row[i] - mu;
                s += d * d;
            }
            var[cell_id(lay, n, c)] += s;
        }
    }
    for (double& v : var) v /= cell_size;

    Tensor y(x.shape());
    double* yp = y.data();
    for (std::size_t n = 0; n < lay.samples; ++n) {
        for (std::size_t c = 0; c < lay.channels; ++c) {
            const std::size_t cell = cell_id(lay, n, c);
            const double mu = mean[cell];
            const double inv_std = 1.0 / std::sqrt(var[cell] + eps);
            const double* row = xp + (n * lay.channels + c) * S;
            double* orow = yp + (n * lay.channels + c) * S;
            for (std::size_t i = 0; i < S; ++i) orow[i] = (row[i] - mu) * inv_std;
        }
    }

    if (cache) {
        cache->normalized = y;
        cache->mean = std::move(mean);
        cache->var = std::move(var);
        cache->kind = lay.kind;
        cache->groups = lay.groups;
        cache->samples = lay.samples;
        cache->channels = lay.channels;
        cache->spatial = lay.spatial;
        cache->cells = lay.cells;
        cache->eps = eps;
        cache->live = true;
    }
    return y;
}

Tensor standardize_backward(StandardizeCache& cache, const Tensor& dy) {
    if (!cache.live) throw std::logic_error("standardize_backward: cache already consumed");
    cache.live = false;
    const Tensor& xhat = cache.normalized;
    if (!dy.same_shape(xhat)) throw std::invalid_argument("standardize_backward gradient shape mismatch");

    const CellLayout lay = layout_from_cache(cache);
    const std::size_t S = lay.spatial;
    const double cell_size = static_cast<double>(dy.size() / lay.cells);

    std::vector<double> sum_dy(lay.cells, 0.0), sum_dy_xhat(lay.cells, 0.0);
    const double* dp = dy.data();
    const double* hp = xhat.data();
    for (std::size_t n = 0; n < lay.samples; ++n) {
        for (std::size_t c = 0; c < lay.channels; ++c) {
            const std::size_t base = (n * lay.channels + c) * S;
            double s1 = 0, s2 = 0;
            for (std::size_t i = 0; i < S; ++i) {
                s1 += dp[base + i];
                s2 += dp[base + i] * hp[base + i];
            }
            const std::size_t cell = cell_id(lay, n, c);
            sum_dy[cell] += s1;
            sum_dy_xhat[cell] += s2;
        }
    }

    Tensor dx(dy.shape());
    double* out = dx.data();
    for (std::size_t n = 0; n < lay.samples; ++n) {
        for (std::size_t c = 0; c < lay.channels; ++c) {
            const std::size_t cell = cell_id(lay, n, c);
            const double inv_std = 1.0 / std::sqrt(cache.var[cell] + cache.eps);
            const double mean_dy = sum_dy[cell] / cell_size;
            const double mean_dy_xhat = sum_dy_xhat[cell] / cell_size;
            const std::size_t base = (n * lay.channels + c) * S;
            for (std::size_t i = 0; i < S; ++i) {
                out[base + i] = inv_std * (dp[base + i] - mean_dy - hp[base + i] * mean_dy_xhat);
            }
        }
    }
    return dx;
}

BatchNormState make_batch_norm(std::size_t features, double alpha, double eps, bool affine) {
    if (alpha <= 0 || alpha > 1) throw std::invalid_argument("batch norm alpha must be in (0,1]");
    if (eps <= 0) throw std::invalid_argument("batch norm eps must be positive");
    BatchNormState s;
    s.running_mean = Tensor({features});
    s.running_var = Tensor::full({features}, 1.0);
    s.alpha = alpha;
    s.eps = eps;
    if (affine) s.affine = AffineParams{Tensor::full({features}, 1.0), Tensor({features})};
    return s;
}

namespace {

// gamma * x + beta broadcast per feature (rank-2 column) or channel (rank-4).
void apply_affine(Tensor& y, const AffineParams& affine) {
    const std::size_t d = affine.gamma.size();
    const std::size_t m = y.dim(0);
    const std::size_t spatial = y.rank() == 4 ? y.dim(2) * y.dim(3) : 1;
    double* p = y.data();
    for (std::size_t n = 0; n < m; ++n) {
        for (std::size_t c = 0; c < d; ++c) {
            const double g = affine.gamma[c], b = affine.beta[c];
            double* row = p + (n * d + c) * spatial;
            for (std::size_t i = 0; i < spatial; ++i) row[i] = g * row[i] + b;
        }
    }
}

std::size_t feature_count(const Tensor& x) {
    if (x.rank() == 2 || x.rank() == 4) return x.dim(1);
    throw std::invalid_argument("batch norm expects rank-2 or rank-4 input, got " + x.shape_str());
}

}  // namespace

BnTrainResult bn_forward_train(BatchNormState& state, const Tensor& x, StandardizeCache* cache) {
    if (state.mode != BatchNormState::Mode::Train) {
        throw std::logic_error("bn_forward_train called in inference mode");
    }
    if (x.dim(0) < 2) throw std::invalid_argument("batch too small for batch statistics");
    const std::size_t d = feature_count(x);
    if (d != state.running_mean.size()) {
        throw std::invalid_argument("batch norm feature count mismatch");
    }
    const PartitionScheme scheme = x.rank() == 2 ? PartitionScheme::batch_per_feature()
                                                 : PartitionScheme::batch_per_channel_spatial();
    StandardizeCache local;
    StandardizeCache& c = cache ? *cache : local;
    BnTrainResult r;
    r.y = standardize_forward(x, scheme, state.eps, &c);
    r.stats.mean = Tensor({d}, std::vector<double>(c.mean.begin(), c.mean.end()));
    r.stats.var = Tensor({d}, std::vector<double>(c.var.begin(), c.var.end()));
    if (state.affine) apply_affine(r.y, *state.affine);
    return r;
}

void bn_update_running(BatchNormState& state, const BatchStats& stats) {
    if (!stats.mean.same_shape(state.running_mean) || !stats.var.same_shape(state.running_var)) {
        throw std::invalid_argument("bn_update_running shape mismatch");
    }
    const double a = state.alpha;
    for (std::size_t i = 0; i < state.running_mean.size(); ++i) {
        state.running_mean[i] = (1 - a) * state.running_mean[i] + a * stats.mean[i];
        state.running_var[i] = (1 - a) * state.running_var[i] + a * stats.var[i];
    }
}

Tensor bn_forward_infer(const BatchNormState& state, const Tensor& x) {
    if (state.mode != BatchNormState::Mode::Infer) {
        throw std::logic_error("bn_forward_infer called in training mode");
    }
    const std::size_t d = feature_count(x);
    if (d != state.running_mean.size()) {
        throw std::invalid_argument("batch norm feature count mismatch");
    }
    const std::size_t m = x.dim(0);
    const std::size_t spatial = x.rank() == 4 ? x.dim(2) * x.dim(3) : 1;
    Tensor y(x.shape());
    const double* xp = x.data();
    double* yp = y.data();
    for (std::size_t c = 0; c < d; ++c) {
        const double mu = state.running_mean[c];
        const double inv_std = 1.0 / std::sqrt(state.running_var[c] + state.eps);
        for (std::size_t n = 0; n < m; ++n) {
            const std::size_t base = (n * d + c) * spatial;
            for (std::size_t i = 0; i < spatial; ++i) yp[base + i] = (xp[base + i] - mu) * inv_std;
        }
    }
    if (state.affine) apply_affine(y, *state.affine);
    return y;
}

PerturbReport perturb_stats(BatchNormState& state, double delta_max, RngState& rng) {
    if (delta_max < 0) throw std::invalid_argument("perturbation magnitude must be non-negative");
    PerturbReport report;
    for (std::size_t i = 0; i < state.running_mean.size(); ++i) {
        const double delta_mu = rng.next_uniform(-delta_max, delta_max);
        const double delta_sigma = rng.next_uniform(-delta_max, delta_max);
        state.running_mean[i] *= 1.0 + delta_mu;
        state.running_var[i] *= 1.0 + delta_sigma;
        if (state.running_var[i] < state.eps) {
            state.running_var[i] = state.eps;
            ++report.clamped;
        }
    }
    return report;
}

}  // namespace eshift
