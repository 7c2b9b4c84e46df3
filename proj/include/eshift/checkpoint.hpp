#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "eshift/networks.hpp"

namespace eshift {

/// Full training state: network spec, every parameter tensor, every BN running
/// statistic, the harness RNG position and the epoch. Round-trips bit-exactly.
struct Checkpoint {
    std::uint32_t version = 1;
    std::string spec_json;
    std::uint64_t rng_seed = 0;
    std::uint64_t rng_counter = 0;
    std::int64_t epoch = 0;
    std::vector<std::vector<double>> tensors;  // network state in declared layer order
};

Checkpoint capture_checkpoint(Network& net, const RngState& rng, std::int64_t epoch);

/// Copies the checkpoint's tensors back into a structurally matching network.
void restore_into(Network& net, const Checkpoint& ckpt);

/// Rebuilds the network from the stored spec, then restores its state.
Network network_from_checkpoint(const Checkpoint& ckpt);

/// Binary format: magic "ESHIFT01", then little-endian u32 version,
/// length-prefixed spec string, RNG state, epoch and the length-prefixed
/// 64-bit-real arrays in declared layer order.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace eshift
