#include "eshift/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "eshift/errors.hpp"

namespace eshift {

namespace {

std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                      std::istreambuf_iterator<char>());
}

std::uint32_t read_u32_be(const std::vector<unsigned char>& buf, std::size_t offset,
                          const std::string& path) {
    if (offset + 4 > buf.size()) throw DataError("truncated file: " + path);
    return (std::uint32_t(buf[offset]) << 24) | (std::uint32_t(buf[offset + 1]) << 16) |
           (std::uint32_t(buf[offset + 2]) << 8) | std::uint32_t(buf[offset + 3]);
}

}  // namespace

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
    const auto img = read_file(images_path);
    if (read_u32_be(img, 0, images_path) != 0x00000803u) {
        throw DataError("bad magic in image file: " + images_path);
    }
    const std::size_t n = read_u32_be(img, 4, images_path);
    const std::size_t rows = read_u32_be(img, 8, images_path);
    const std::size_t cols = read_u32_be(img, 12, images_path);
    if (img.size() < 16 + n * rows * cols) {
        throw DataError("truncated image file: " + images_path);
    }

    const auto lab = read_file(labels_path);
    if (read_u32_be(lab, 0, labels_path) != 0x00000801u) {
        throw DataError("bad magic in label file: " + labels_path);
    }
    const std::size_t n_labels = read_u32_be(lab, 4, labels_path);
    if (lab.size() < 8 + n_labels) throw DataError("truncated label file: " + labels_path);
    if (n != n_labels) {
        throw DataError("count mismatch between image and label files (" + std::to_string(n) +
                        " vs " + std::to_string(n_labels) + ")");
    }

    Dataset ds;
    ds.name = images_path;
    ds.images = Tensor({n, 1, rows, cols});
    for (std::size_t i = 0; i < n * rows * cols; ++i) {
        ds.images[i] = static_cast<double>(img[16 + i]) / 255.0;
    }
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = lab[8 + i];
        if (label < 0 || label > 9) throw DataError("label out of range in " + labels_path);
        ds.labels[i] = label;
    }
    return ds;
}

Dataset flatten_images(const Dataset& ds) {
    if (ds.images.rank() == 2) return ds;
    const std::size_t n = ds.images.dim(0);
    Dataset out = ds;
    out.images = ds.images.reshaped({n, ds.images.size() / n});
    return out;
}

Dataset subsample(const Dataset& ds, std::size_t n, std::uint64_t seed) {
    if (n < 1 || n > ds.size()) {
        throw std::invalid_argument("subsample size out of range");
    }
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), 0);
    RngState rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + rng.next_below(idx.size() - i);
        std::swap(idx[i], idx[j]);
    }

    const std::size_t row = ds.images.size() / ds.size();
    std::vector<std::size_t> shape = ds.images.shape();
    shape[0] = n;
    Dataset out;
    out.name = ds.name + "#subsample" + std::to_string(n);
    out.images = Tensor(shape);
    out.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::copy_n(ds.images.data() + idx[i] * row, row, out.images.data() + i * row);
        out.labels[i] = ds.labels[idx[i]];
    }
    return out;
}

Tensor batch_images(const Dataset& ds, std::size_t begin, std::size_t count) {
    if (begin + count > ds.size()) throw std::out_of_range("batch range out of bounds");
    const std::size_t row = ds.images.size() / ds.size();
    std::vector<std::size_t> shape = ds.images.shape();
    shape[0] = count;
    Tensor out(shape);
    std::copy_n(ds.images.data() + begin * row, count * row, out.data());
    return out;
}

std::vector<int> batch_labels(const Dataset& ds, std::size_t begin, std::size_t count) {
    if (begin + count > ds.size()) throw std::out_of_range("batch range out of bounds");
    return std::vector<int>(ds.labels.begin() + begin, ds.labels.begin() + begin + count);
}

double classification_error(const Tensor& logits, const std::vector<int>& labels) {
    const std::size_t m = logits.dim(0), c = logits.dim(1);
    if (labels.size() != m) throw std::invalid_argument("label count mismatch");
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = logits.data() + i * c;
        std::size_t best = 0;
        for (std::size_t j = 1; j < c; ++j) {
            if (row[j] > row[best]) best = j;
        }
        if (static_cast<int>(best) != labels[i]) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(m);
}

}  // namespace eshift
