#include "eshift/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace eshift {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           std::multiplies<>());
}

static void validate_shape(const std::vector<std::size_t>& shape) {
    for (std::size_t d : shape) {
        if (d == 0) throw std::invalid_argument("tensor dimension must be positive");
    }
}

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
    validate_shape(shape_);
    data_.assign(shape_product(shape_), 0.0);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape(shape_);
    if (data_.size() != shape_product(shape_)) {
        throw std::invalid_argument("tensor data length does not match shape");
    }
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= shape_.size()) throw std::out_of_range("tensor axis out of range");
    return shape_[axis];
}

Tensor Tensor::reshaped(std::vector<std::size_t> new_shape) const {
    if (shape_product(new_shape) != data_.size()) {
        throw std::invalid_argument("reshape changes element count");
    }
    return Tensor(std::move(new_shape), data_);
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) os << 'x';
        os << shape_[i];
    }
    os << ']';
    return os.str();
}

Moments moments(const Tensor& x, const std::vector<std::size_t>& reduce_axes) {
    const auto& shape = x.shape();
    if (reduce_axes.empty()) throw std::invalid_argument("degenerate reduction");
    std::vector<bool> reduced(shape.size(), false);
    for (std::size_t a : reduce_axes) {
        if (a >= shape.size()) throw std::invalid_argument("degenerate reduction");
        reduced[a] = true;
    }

    std::vector<std::size_t> out_shape;
    std::size_t slice = 1;
    for (std::size_t a = 0; a < shape.size(); ++a) {
        if (reduced[a]) slice *= shape[a];
        else out_shape.push_back(shape[a]);
    }
    if (slice == 0) throw std::invalid_argument("degenerate reduction");

    // Stride of each input axis in the output index space (0 for reduced axes).
    std::vector<std::size_t> out_stride(shape.size(), 0);
    std::size_t acc = 1;
    for (std::size_t a = shape.size(); a-- > 0;) {
        if (!reduced[a]) {
            out_stride[a] = acc;
            acc *= shape[a];
        }
    }

    Tensor mean(out_shape);
    Tensor var(out_shape);

    std::vector<std::size_t> idx(shape.size(), 0);
    auto for_each_cell = [&](auto&& body) {
        std::fill(idx.begin(), idx.end(), 0);
        std::size_t out = 0;
        for (std::size_t flat = 0; flat < x.size(); ++flat) {
            body(flat, out);
            for (std::size_t a = shape.size(); a-- > 0;) {
                if (++idx[a] < shape[a]) {
                    out += out_stride[a];
                    break;
                }
                idx[a] = 0;
                out -= out_stride[a] * (shape[a] - 1);
            }
        }
    };

    for_each_cell([&](std::size_t flat, std::size_t out) { mean[out] += x[flat]; });
    const double inv = 1.0 / static_cast<double>(slice);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] *= inv;
    for_each_cell([&](std::size_t flat, std::size_t out) {
        const double d = x[flat] - mean[out];
        var[out] += d * d;
    });
    for (std::size_t i = 0; i < var.size(); ++i) var[i] *= inv;

    return {std::move(mean), std::move(var)};
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) throw std::invalid_argument("matmul expects rank-2 tensors");
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) {
        throw std::invalid_argument("matmul shape mismatch: " + a.shape_str() + " x " + b.shape_str());
    }
    Tensor y({m, n});
    const double* ap = a.data();
    const double* bp = b.data();
    double* yp = y.data();
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = ap + i * k;
        double* yrow = yp + i * n;
        for (std::size_t l = 0; l < k; ++l) {
            const double av = arow[l];
            const double* brow = bp + l * n;
            for (std::size_t j = 0; j < n; ++j) yrow[j] += av * brow[j];
        }
    }
    return y;
}

Tensor matmul_bt(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) throw std::invalid_argument("matmul_bt expects rank-2 tensors");
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
    if (b.dim(1) != k) {
        throw std::invalid_argument("matmul_bt shape mismatch: " + a.shape_str() + " x " + b.shape_str() + "^T");
    }
    Tensor y({m, n});
    const double* ap = a.data();
    const double* bp = b.data();
    double* yp = y.data();
    // Four independent accumulator lanes; the fixed summation order keeps
    // results reproducible while letting the loop pipeline.
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = ap + i * k;
        double* yrow = yp + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = bp + j * k;
            double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
            std::size_t l = 0;
            for (; l + 4 <= k; l += 4) {
                s0 += arow[l] * brow[l];
                s1 += arow[l + 1] * brow[l + 1];
                s2 += arow[l + 2] * brow[l + 2];
                s3 += arow[l + 3] * brow[l + 3];
            }
            double s = (s0 + s1) + (s2 + s3);
            for (; l < k; ++l) s += arow[l] * brow[l];
            yrow[j] = s;
        }
    }
    return y;
}

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kStreamSalt = 0xD1B54A32D192ED03ull;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t RngState::next_u64() {
    ++counter_;
    return mix64(seed_ + counter_ * kGolden);
}

std::uint64_t RngState::next_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("next_below(0)");
    // Lemire's multiply-shift; bias is < n / 2^64 and irrelevant here.
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

double RngState::next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngState::next_uniform(double lo, double hi) {
    if (lo > hi) throw std::invalid_argument("uniform bounds reversed");
    return lo + next_unit() * (hi - lo);
}

double RngState::next_normal() {
    // Box-Muller; u1 in (0,1] so the log is finite.
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(2.0 * 3.14159265358979323846 * u2);
}

RngState RngState::split(std::uint64_t stream) const {
    return RngState(mix64(seed_ + kStreamSalt * (stream + 1)));
}

Tensor rng_uniform(RngState& rng, double lo, double hi, std::vector<std::size_t> shape) {
    if (lo > hi) throw std::invalid_argument("uniform bounds reversed");
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.next_uniform(lo, hi);
    return t;
}

Tensor rng_normal(RngState& rng, double stddev, std::vector<std::size_t> shape) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = stddev * rng.next_normal();
    return t;
}

}  // namespace eshift
