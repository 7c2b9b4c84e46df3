#include "eshift/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace eshift {

LinearParams make_linear(std::size_t in, std::size_t out, RngState& rng) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(in));
    return {rng_normal(rng, stddev, {out, in}), Tensor({out})};
}

Tensor linear_forward(const LinearParams& p, const Tensor& x, LinearCache* cache) {
    if (x.rank() != 2) throw std::invalid_argument("linear_forward expects rank-2 input");
    if (x.dim(1) != p.weight.dim(1)) {
        throw std::invalid_argument("linear_forward input width " + x.shape_str() +
                                    " does not match weight " + p.weight.shape_str());
    }
    Tensor y = matmul_bt(x, p.weight);
    const std::size_t m = y.dim(0), out = y.dim(1);
    for (std::size_t i = 0; i < m; ++i) {
        double* row = y.data() + i * out;
        for (std::size_t o = 0; o < out; ++o) row[o] += p.bias[o];
    }
    if (cache) {
        cache->input = x;
        cache->live = true;
    }
    return y;
}

LinearGrads linear_backward(const LinearParams& p, LinearCache& cache, const Tensor& dy) {
    if (!cache.live) throw std::logic_error("linear_backward: cache already consumed");
    cache.live = false;
    const Tensor& x = cache.input;
    if (dy.rank() != 2 || dy.dim(0) != x.dim(0) || dy.dim(1) != p.weight.dim(0)) {
        throw std::invalid_argument("linear_backward gradient shape mismatch");
    }
    LinearGrads g;
    g.dx = matmul(dy, p.weight);  // [m x out] x [out x in]
    const std::size_t m = dy.dim(0), out = dy.dim(1), in = x.dim(1);
    g.dweight = Tensor({out, in});
    g.dbias = Tensor({out});
    for (std::size_t i = 0; i < m; ++i) {
        const double* dyrow = dy.data() + i * out;
        const double* xrow = x.data() + i * in;
        for (std::size_t o = 0; o < out; ++o) {
            const double d = dyrow[o];
            g.dbias[o] += d;
            double* wrow = g.dweight.data() + o * in;
            for (std::size_t k = 0; k < in; ++k) wrow[k] += d * xrow[k];
        }
    }
    return g;
}

Conv2dParams make_conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                         std::size_t stride, std::size_t padding, RngState& rng) {
    if (kernel % 2 == 0) throw std::invalid_argument("conv kernel extent must be odd");
    if (stride == 0) throw std::invalid_argument("conv stride must be positive");
    const double fan_in = static_cast<double>(in_ch * kernel * kernel);
    Conv2dParams p;
    p.kernels = rng_normal(rng, std::sqrt(2.0 / fan_in), {out_ch, in_ch, kernel, kernel});
    p.bias = Tensor({out_ch});
    p.stride = stride;
    p.padding = padding;
    return p;
}

std::size_t conv2d_out_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                              std::size_t padding) {
    if (in + 2 * padding < kernel) {
        throw std::invalid_argument("conv spatial size underflow");
    }
    return (in + 2 * padding - kernel) / stride + 1;
}

namespace {

struct ConvDims {
    std::size_t m, in_ch, h, w, out_ch, kh, kw, oh, ow;
    std::ptrdiff_t stride, pad;
};

ConvDims conv_dims(const Conv2dParams& p, const Tensor& x) {
    if (x.rank() != 4) throw std::invalid_argument("conv2d expects rank-4 input");
    if (p.kernels.rank() != 4) throw std::invalid_argument("conv kernels must be rank-4");
    ConvDims d;
    d.m = x.dim(0);
    d.in_ch = x.dim(1);
    d.h = x.dim(2);
    d.w = x.dim(3);
    d.out_ch = p.kernels.dim(0);
    if (p.kernels.dim(1) != d.in_ch) {
        throw std::invalid_argument("conv2d channel mismatch: input " + x.shape_str() +
                                    ", kernels " + p.kernels.shape_str());
    }
    d.kh = p.kernels.dim(2);
    d.kw = p.kernels.dim(3);
    d.oh = conv2d_out_extent(d.h, d.kh, p.stride, p.padding);
    d.ow = conv2d_out_extent(d.w, d.kw, p.stride, p.padding);
    d.stride = static_cast<std::ptrdiff_t>(p.stride);
    d.pad = static_cast<std::ptrdiff_t>(p.padding);
    return d;
}

// Output-column range for which the input column ow*stride + k - pad stays
// inside [0, extent).
void valid_out_range(std::ptrdiff_t k, std::ptrdiff_t pad, std::ptrdiff_t stride,
                     std::ptrdiff_t in_extent, std::ptrdiff_t out_extent,
                     std::ptrdiff_t& lo, std::ptrdiff_t& hi) {
    // lo = ceil((pad - k) / stride), hi = floor((in_extent - 1 - k + pad) / stride)
    std::ptrdiff_t num = pad - k;
    lo = num <= 0 ? 0 : (num + stride - 1) / stride;
    num = in_extent - 1 - k + pad;
    hi = num < 0 ? -1 : num / stride;
    hi = std::min(hi, out_extent - 1);
}

}  // namespace

Tensor conv2d_forward(const Conv2dParams& p, const Tensor& x, Conv2dCache* cache) {
    const ConvDims d = conv_dims(p, x);
    Tensor y({d.m, d.out_ch, d.oh, d.ow});
    const double* xp = x.data();
    const double* kp = p.kernels.data();
    double* yp = y.data();

    for (std::size_t n = 0; n < d.m; ++n) {
        for (std::size_t oc = 0; oc < d.out_ch; ++oc) {
            double* out_plane = yp + ((n * d.out_ch + oc) * d.oh) * d.ow;
            const double b = p.bias[oc];
            for (std::size_t i = 0; i < d.oh * d.ow; ++i) out_plane[i] = b;
            for (std::size_t ic = 0; ic < d.in_ch; ++ic) {
                const double* in_plane = xp + ((n * d.in_ch + ic) * d.h) * d.w;
                const double* kplane = kp + ((oc * d.in_ch + ic) * d.kh) * d.kw;
                for (std::size_t kh = 0; kh < d.kh; ++kh) {
                    std::ptrdiff_t oh_lo, oh_hi;
                    valid_out_range(static_cast<std::ptrdiff_t>(kh), d.pad, d.stride,
                                    static_cast<std::ptrdiff_t>(d.h),
                                    static_cast<std::ptrdiff_t>(d.oh), oh_lo, oh_hi);
                    for (std::size_t kwi = 0; kwi < d.kw; ++kwi) {
                        const double kval = kplane[kh * d.kw + kwi];
                        std::ptrdiff_t ow_lo, ow_hi;
                        valid_out_range(static_cast<std::ptrdiff_t>(kwi), d.pad, d.stride,
                                        static_cast<std::ptrdiff_t>(d.w),
                                        static_cast<std::ptrdiff_t>(d.ow), ow_lo, ow_hi);
                        for (std::ptrdiff_t oh = oh_lo; oh <= oh_hi; ++oh) {
                            const std::ptrdiff_t ih = oh * d.stride + static_cast<std::ptrdiff_t>(kh) - d.pad;
                            const double* in_row = in_plane + ih * static_cast<std::ptrdiff_t>(d.w);
                            double* out_row = out_plane + oh * static_cast<std::ptrdiff_t>(d.ow);
                            const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(kwi) - d.pad;
                            for (std::ptrdiff_t ow = ow_lo; ow <= ow_hi; ++ow) {
                                out_row[ow] += kval * in_row[ow * d.stride + base];
                            }
                        }
                    }
                }
            }
        }
    }
    if (cache) {
        cache->input = x;
        cache->live = true;
    }
    return y;
}

Conv2dGrads conv2d_backward(const Conv2dParams& p, Conv2dCache& cache, const Tensor& dy) {
    if (!cache.live) throw std::logic_error("conv2d_backward: cache already consumed");
    cache.live = false;
    const Tensor& x = cache.input;
    const ConvDims d = conv_dims(p, x);
    if (dy.shape() != std::vector<std::size_t>{d.m, d.out_ch, d.oh, d.ow}) {
        throw std::invalid_argument("conv2d_backward gradient shape mismatch");
    }

    Conv2dGrads g;
    g.dx = Tensor(x.shape());
    g.dkernels = Tensor(p.kernels.shape());
    g.dbias = Tensor({d.out_ch});

    const double* xp = x.data();
    const double* kp = p.kernels.data();
    const double* dyp = dy.data();
    double* dxp = g.dx.data();
    double* dkp = g.dkernels.data();

    for (std::size_t n = 0; n < d.m; ++n) {
        for (std::size_t oc = 0; oc < d.out_ch; ++oc) {
            const double* dy_plane = dyp + ((n * d.out_ch + oc) * d.oh) * d.ow;
            double bsum = 0;
            for (std::size_t i = 0; i < d.oh * d.ow; ++i) bsum += dy_plane[i];
            g.dbias[oc] += bsum;
            for (std::size_t ic = 0; ic < d.in_ch; ++ic) {
                const double* in_plane = xp + ((n * d.in_ch + ic) * d.h) * d.w;
                double* dx_plane = dxp + ((n * d.in_ch + ic) * d.h) * d.w;
                const double* kplane = kp + ((oc * d.in_ch + ic) * d.kh) * d.kw;
                double* dkplane = dkp + ((oc * d.in_ch + ic) * d.kh) * d.kw;
                for (std::size_t kh = 0; kh < d.kh; ++kh) {
                    std::ptrdiff_t oh_lo, oh_hi;
                    valid_out_range(static_cast<std::ptrdiff_t>(kh), d.pad, d.stride,
                                    static_cast<std::ptrdiff_t>(d.h),
                                    static_cast<std::ptrdiff_t>(d.oh), oh_lo, oh_hi);
                    for (std::size_t kwi = 0; kwi < d.kw; ++kwi) {
                        const double kval = kplane[kh * d.kw + kwi];
                        std::ptrdiff_t ow_lo, ow_hi;
                        valid_out_range(static_cast<std::ptrdiff_t>(kwi), d.pad, d.stride,
                                        static_cast<std::ptrdiff_t>(d.w),
                                        static_cast<std::ptrdiff_t>(d.ow), ow_lo, ow_hi);
                        const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(kwi) - d.pad;
                        double ksum = 0;
                        for (std::ptrdiff_t oh = oh_lo; oh <= oh_hi; ++oh) {
                            const std::ptrdiff_t ih = oh * d.stride + static_cast<std::ptrdiff_t>(kh) - d.pad;
                            const double* in_row = in_plane + ih * static_cast<std::ptrdiff_t>(d.w);
                            double* dx_row = dx_plane + ih * static_cast<std::ptrdiff_t>(d.w);
                            const double* dy_row = dy_plane + oh * static_cast<std::ptrdiff_t>(d.ow);
                            for (std::ptrdiff_t ow = ow_lo; ow <= ow_hi; ++ow) {
                                const double dv = dy_row[ow];
                                ksum += dv * in_row[ow * d.stride + base];
                                dx_row[ow * d.stride + base] += kval * dv;
                            }
                        }
                        dkplane[kh * d.kw + kwi] += ksum;
                    }
                }
            }
        }
    }
    return g;
}

Tensor relu_forward(const Tensor& x, ReluCache* cache) {
    Tensor y(x.shape());
    if (cache) {
        cache->positive.assign(x.size(), 0);
        cache->live = true;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0) {
            y[i] = x[i];
            if (cache) cache->positive[i] = 1;
        }
    }
    return y;
}

Tensor relu_backward(ReluCache& cache, const Tensor& dy) {
    if (!cache.live) throw std::logic_error("relu_backward: cache already consumed");
    cache.live = false;
    if (dy.size() != cache.positive.size()) {
        throw std::invalid_argument("relu_backward gradient size mismatch");
    }
    Tensor dx(dy.shape());
    for (std::size_t i = 0; i < dy.size(); ++i) {
        if (cache.positive[i]) dx[i] = dy[i];
    }
    return dx;
}

SoftmaxXentResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2) throw std::invalid_argument("softmax_cross_entropy expects rank-2 logits");
    const std::size_t m = logits.dim(0), c = logits.dim(1);
    if (labels.size() != m) throw std::invalid_argument("softmax_cross_entropy label count mismatch");

    SoftmaxXentResult r;
    r.dlogits = Tensor({m, c});
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) {
        const int label = labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= c) {
            throw std::invalid_argument("softmax_cross_entropy label out of range");
        }
        const double* row = logits.data() + i * c;
        double mx = row[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double z = 0;
        for (std::size_t j = 0; j < c; ++j) z += std::exp(row[j] - mx);
        const double log_z = mx + std::log(z);
        r.loss += (log_z - row[label]) * inv_m;
        double* drow = r.dlogits.data() + i * c;
        for (std::size_t j = 0; j < c; ++j) drow[j] = std::exp(row[j] - log_z) * inv_m;
        drow[label] -= inv_m;
    }
    return r;
}

double grad_check(const GradCheckFn& f, const Tensor& x, double h) {
    if (h <= 0) throw std::invalid_argument("grad_check step must be positive");
    const Tensor analytic = f.gradient(x);
    if (!analytic.same_shape(x)) throw std::invalid_argument("grad_check gradient shape mismatch");
    double worst = 0;
    Tensor probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = probe[i];
        probe[i] = saved + h;
        const double up = f.value(probe);
        probe[i] = saved - h;
        const double down = f.value(probe);
        probe[i] = saved;
        const double numeric = (up - down) / (2 * h);
        const double denom = std::max({std::fabs(analytic[i]), std::fabs(numeric), 1e-8});
        worst = std::max(worst, std::fabs(analytic[i] - numeric) / denom);
    }
    return worst;
}

}  // namespace eshift
