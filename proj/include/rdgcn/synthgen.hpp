#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "rdgcn/graph.hpp"

namespace rdgcn {

/// Synthetic bilingual KG pair with known alignment.
struct SynthConfig {
    std::size_t entities_per_kg = 200;
    std::size_t relation_count = 20;
    std::size_t triple_count = 800;  // base graph, before per-copy dropout
    double edge_dropout = 0.2;       // ρ, independent per KG copy
    double name_noise = 0.1;         // σ, per-coordinate std-dev of name perturbations
    std::size_t embedding_dim = 50;
    std::uint64_t rng_seed = 0;
    double seed_fraction = 0.3;      // default train split used by callers
    std::size_t planted_triangles = 20;

    void validate() const;
};

struct SynthOutput {
    std::filesystem::path dataset_dir;
    std::filesystem::path names_file;
    std::vector<std::pair<OriginalId, OriginalId>> gold_pairs;
    std::vector<std::array<OriginalId, 3>> planted_triangles;  // KG1 ids
    std::array<std::size_t, 2> triple_counts{0, 0};
};

/// Writes ent_ids_*, rel_ids_*, triples_*, ref_ent_ids, gold_pairs and
/// name_vectors under `dir`. Output bytes depend only on `config`.
SynthOutput generate(const SynthConfig& config, const std::filesystem::path& dir);

}  // namespace rdgcn
