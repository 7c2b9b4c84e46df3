#pragma once

#include <stdexcept>

namespace eshift {

/// Bad experiment configuration (CLI exit code 1).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Unreadable or malformed dataset/checkpoint input (CLI exit code 2).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Training reached a non-finite loss (CLI exit code 3).
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace eshift
