#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rdgcn/config.hpp"
#include "rdgcn/dual_graph.hpp"
#include "rdgcn/evaluation.hpp"
#include "rdgcn/graph.hpp"
#include "rdgcn/network.hpp"
#include "rdgcn/synthgen.hpp"
#include "rdgcn/training.hpp"

namespace rdgcn {

/// Dataset plus everything derived from it that does not depend on parameters.
struct PreparedData {
    std::filesystem::path dataset_dir;
    Dataset dataset;
    NameEmbeddings names;
    std::string names_source;  // file path, or "fallback" when none was found
    DualRelationGraph dual;
    double dual_build_seconds = 0.0;
    std::vector<EntityId> triangular;
    std::optional<SynthOutput> synth;
};

/// Loads the configured dataset, or generates the synthetic one under
/// `scratch_dir`. Names come from `config.names`, else `<dataset>/name_vectors`.
PreparedData prepare_data(const RunConfig& config, const std::filesystem::path& scratch_dir);

struct RunResult {
    ModelParams<double> params;  // trained parameters, widened to double
    std::vector<EpochRecord> log;
    AlignmentReport report;
    AlignmentReport baseline;  // untrained name-init embeddings, same protocol
    double train_seconds = 0.0;
};

/// Initializes, trains and evaluates one model in `config.precision`.
RunResult run_experiment(const RunConfig& config, const PreparedData& data, const AlignmentSeeds& seeds,
                         const EpochCallback& on_epoch = {});

/// Final embeddings for stored parameters, computed in `config.precision`.
AlignmentReport evaluate_params(const ModelParams<double>& params, const RunConfig& config, const PreparedData& data,
                                const AlignmentSeeds& seeds);

/// Untrained name-init baseline.
AlignmentReport evaluate_names(const RunConfig& config, const PreparedData& data, const AlignmentSeeds& seeds);

/// One row of a sweep or ablation table.
struct TableCell {
    Variant variant = Variant::RDGCN;
    double fraction = 0.0;
    std::uint64_t split_seed = 0;
    std::vector<std::size_t> ks;
    std::vector<double> hits;  // parallel to ks; empty when the cell failed
    double baseline_hits1 = 0.0;
    double seconds = 0.0;
    std::string error;

    bool ok() const { return error.empty(); }
    std::optional<double> hits_at(std::size_t k) const;
};

using CellCallback = std::function<void(const TableCell&)>;

/// Retrains `config.model.variant` from scratch for every fraction in
/// `config.fractions`, each with its own seeded split of all known pairs.
/// A failing cell records its error and the sweep continues.
std::vector<TableCell> seed_sweep(const RunConfig& config, const PreparedData& data, const CellCallback& on_cell = {});

/// Trains every variant in `config.variants` on the dataset's split.
std::vector<TableCell> ablation(const RunConfig& config, const PreparedData& data, const CellCallback& on_cell = {});

std::string table_text(const std::vector<TableCell>& cells);
std::string table_json(const std::vector<TableCell>& cells, const RunConfig& config);

}  // namespace rdgcn
