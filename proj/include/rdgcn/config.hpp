#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rdgcn/evaluation.hpp"
#include "rdgcn/network.hpp"
#include "rdgcn/synthgen.hpp"
#include "rdgcn/training.hpp"

namespace rdgcn {

struct EvalOptions {
    std::vector<std::size_t> ks{1, 10};
    Direction direction = Direction::KG1ToKG2;
    CandidatePool pool = CandidatePool::TestSet;
    bool per_pair_ranks = false;
};

/// Everything needed to reproduce a run. Serialized as flat `key = value` text.
///
/// Keys (defaults in parentheses):
///   dataset (empty), names (empty: <dataset>/name_vectors when present), synth (false),
///   synth.entities (200), synth.relations (20), synth.triples (800), synth.dropout (0.2),
///   synth.noise (0.1), synth.triangles (20),
///   dim (300), interactions (2), gcn_layers (2), betas (0.1,0.3), share_scorers (false),
///   leaky_slope (0.2), dual_activation (relu), primal_activation (relu), gcn_init (glorot), gate_bias_init (-2),
///   variant (rdgcn),
///   margin (1), negatives (125), refresh (10), lr (0.001), epochs (600), optimizer (adam),
///   adam_beta1 (0.9), adam_beta2 (0.999), adam_eps (1e-08), early_stop (false), patience (50),
///   validation_fraction (0.1), eval_every (10),
///   split (0.3), seed (0), ks (1,10), direction (kg1-kg2), candidate_pool (test),
///   per_pair_ranks (false), out (empty), precision (double),
///   fractions (0.1,0.2,0.3,0.4), variants (gcn-s,hgcn-s,rd,rdgcn)
struct RunConfig {
    std::string dataset;
    std::string names;
    bool use_synth = false;
    SynthConfig synth;
    ModelOptions model;
    TrainingConfig training;
    EvalOptions eval;
    double split_fraction = 0.3;
    std::uint64_t rng_seed = 0;
    std::string output_dir;
    std::string precision = "double";
    std::vector<double> fractions{0.1, 0.2, 0.3, 0.4};
    std::vector<Variant> variants{Variant::GCN_S, Variant::HGCN_S, Variant::RD, Variant::RDGCN};

    /// Sets one key from its text form. Throws std::invalid_argument on unknown keys or bad values.
    void set(std::string_view key, std::string_view value);
    /// Canonical text, one `key = value` per line in a fixed order.
    std::string to_text() const;
    /// Fingerprint of the canonical text.
    std::uint64_t hash() const;

    /// Keeps derived settings consistent (synthetic dim, seeds) and validates.
    void resolve();

    /// Applies `key = value` lines on top of the current values. Lines starting with '#' are comments.
    void apply_text(std::string_view text);
    void apply_file(const std::filesystem::path& file);

    static RunConfig parse(std::string_view text);
    static RunConfig load(const std::filesystem::path& file);
};

/// Scaled-down defaults used for the synthetic task (d = 50, 300 epochs).
RunConfig synthetic_defaults();

}  // namespace rdgcn
