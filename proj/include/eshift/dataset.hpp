#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eshift/tensor.hpp"

namespace eshift {

struct Dataset {
    Tensor images;  // [n x 1 x 28 x 28] or flattened [n x d], values in [0,1]
    std::vector<int> labels;
    std::string name;

    std::size_t size() const { return labels.size(); }
};

/// IDX reader (big-endian): image files carry magic 0x00000803 then count,
/// rows, cols and the raw bytes; label files carry 0x00000801 then count and
/// the bytes. Pixels are scaled by 1/255.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path);

/// [n x c x h x w] -> [n x c*h*w]; rank-2 input is returned unchanged.
Dataset flatten_images(const Dataset& ds);

/// n examples drawn uniformly without replacement, deterministic in the seed.
Dataset subsample(const Dataset& ds, std::size_t n, std::uint64_t seed);

/// Rows [begin, begin+count) as a batch tensor plus their labels.
Tensor batch_images(const Dataset& ds, std::size_t begin, std::size_t count);
std::vector<int> batch_labels(const Dataset& ds, std::size_t begin, std::size_t count);

/// Fraction of rows whose argmax logit disagrees with the label.
double classification_error(const Tensor& logits, const std::vector<int>& labels);

}  // namespace eshift
