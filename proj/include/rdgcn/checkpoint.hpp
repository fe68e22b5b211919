#pragma once

#include <cstdint>
#include <filesystem>

#include "rdgcn/config.hpp"
#include "rdgcn/graph.hpp"
#include "rdgcn/network.hpp"

namespace rdgcn {

/// Fingerprint of the shape-defining quantities (n, m, d, variant).
std::uint64_t compat_hash(std::size_t entities, std::size_t relations, std::size_t dim, Variant variant);

struct Checkpoint {
    RunConfig config;
    ModelParams<double> params;
    std::size_t entities = 0;
    std::size_t relations = 0;
    std::uint64_t compat = 0;
    std::uint64_t config_hash = 0;
};

/// Text checkpoint: versioned header, compatibility hash, the embedded config
/// and every tensor as hexadecimal floating point (exact round trip).
template <typename Scalar>
void save_checkpoint(const std::filesystem::path& file, const ModelParams<Scalar>& params, const PrimalGraph& graph,
                     const RunConfig& config);

/// Throws DataError on malformed files or hash mismatches.
Checkpoint load_checkpoint(const std::filesystem::path& file);

/// Throws DataError unless the checkpoint was trained on a graph of this shape.
void check_compatible(const Checkpoint& checkpoint, const PrimalGraph& graph);

}  // namespace rdgcn
