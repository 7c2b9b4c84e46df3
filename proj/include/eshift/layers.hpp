#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "eshift/tensor.hpp"

namespace eshift {

// Every forward below can fill a cache; the matching backward consumes it
// exactly once and throws if it is re-used or was never filled.

struct LinearParams {
    Tensor weight;  // [out x in]
    Tensor bias;    // [out]
};

/// Zero-mean Gaussian weights with stddev sqrt(2/fan_in), zero bias.
LinearParams make_linear(std::size_t in, std::size_t out, RngState& rng);

struct LinearCache {
    Tensor input;
    bool live = false;
};

struct LinearGrads {
    Tensor dx;
    Tensor dweight;
    Tensor dbias;
};

Tensor linear_forward(const LinearParams& p, const Tensor& x, LinearCache* cache = nullptr);
LinearGrads linear_backward(const LinearParams& p, LinearCache& cache, const Tensor& dy);

struct Conv2dParams {
    Tensor kernels;  // [out x in x kh x kw], kh and kw odd
    Tensor bias;     // [out]
    std::size_t stride = 1;
    std::size_t padding = 0;
};

Conv2dParams make_conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                         std::size_t stride, std::size_t padding, RngState& rng);

struct Conv2dCache {
    Tensor input;
    bool live = false;
};

struct Conv2dGrads {
    Tensor dx;
    Tensor dkernels;
    Tensor dbias;
};

/// Direct (non-FFT) cross-correlation on [m x in x H x W] input.
Tensor conv2d_forward(const Conv2dParams& p, const Tensor& x, Conv2dCache* cache = nullptr);
Conv2dGrads conv2d_backward(const Conv2dParams& p, Conv2dCache& cache, const Tensor& dy);

/// Output spatial size for one axis; throws on underflow.
std::size_t conv2d_out_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                              std::size_t padding);

struct ReluCache {
    std::vector<std::uint8_t> positive;
    bool live = false;
};

Tensor relu_forward(const Tensor& x, ReluCache* cache = nullptr);
Tensor relu_backward(ReluCache& cache, const Tensor& dy);

struct SoftmaxXentResult {
    double loss = 0.0;      // mean negative log-likelihood
    Tensor dlogits;         // (softmax - onehot) / m
};

SoftmaxXentResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

/// Pair of closures over the same scalar-valued map: `value` evaluates it,
/// `gradient` returns the analytic gradient at the same point.
struct GradCheckFn {
    std::function<double(const Tensor&)> value;
    std::function<Tensor(const Tensor&)> gradient;
};

/// Max over coordinates of |analytic - central difference| /
/// max(|analytic|, |numeric|, 1e-8).
double grad_check(const GradCheckFn& f, const Tensor& x, double h);

}  // namespace eshift
