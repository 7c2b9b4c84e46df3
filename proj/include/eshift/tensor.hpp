#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace eshift {

/// Dense row-major tensor of 64-bit reals. Immutable shape; element data is
/// value-semantic (copying a Tensor copies its buffer).
class Tensor {
public:
    Tensor() = default;

    /// Zero-filled tensor of the given shape. Every dimension must be positive.
    explicit Tensor(std::vector<std::size_t> shape);

    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor full(std::vector<std::size_t> shape, double value);
    static Tensor scalar(double value);  // rank-0, one element

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t dim(std::size_t axis) const;

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    /// Same data, new shape (element counts must agree).
    Tensor reshaped(std::vector<std::size_t> new_shape) const;

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    std::string shape_str() const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

struct Moments {
    Tensor mean;
    Tensor var;  // biased (divide by slice size)
};

/// Mean and biased variance over `reduce_axes`; output shape is the input
/// shape with the reduced axes removed.
Moments moments(const Tensor& x, const std::vector<std::size_t>& reduce_axes);

/// Standard rank-2 matrix product, 64-bit accumulation.
Tensor matmul(const Tensor& a, const Tensor& b);

/// a [m x k] times b^T where b is [n x k]; both operands walked row-wise.
Tensor matmul_bt(const Tensor& a, const Tensor& b);

/// Counter-based generator: the stream is a pure function of (seed, counter),
/// so identical state reproduces identical draws on any platform, and
/// independent streams can be split off without shared state.
class RngState {
public:
    explicit RngState(std::uint64_t seed, std::uint64_t counter = 0)
        : seed_(seed), counter_(counter) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64();
    std::uint64_t next_below(std::uint64_t n);  // [0, n)
    double next_unit();                         // [0, 1)
    double next_uniform(double lo, double hi);  // [lo, hi)
    double next_normal();                       // N(0,1), consumes two draws

    /// Independent stream derived from (seed, stream index); the parent is
    /// left untouched.
    RngState split(std::uint64_t stream) const;

private:
    std::uint64_t seed_ = 0;
    std::uint64_t counter_ = 0;
};

Tensor rng_uniform(RngState& rng, double lo, double hi, std::vector<std::size_t> shape);
Tensor rng_normal(RngState& rng, double stddev, std::vector<std::size_t> shape);

}  // namespace eshift
