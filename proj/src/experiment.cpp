#include "rdgcn/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "rdgcn/hash.hpp"

namespace rdgcn {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

template <typename Scalar>
ModelParams<Scalar> cast_params(const ModelParams<double>& p) {
    return {p.options, p.tensors.template cast<Scalar>()};
}

template <typename Scalar>
AlignmentReport evaluate_in(const ModelParams<double>& params, const RunConfig& config, const PreparedData& data,
                            const AlignmentSeeds& seeds) {
    const GraphContext<Scalar> ctx(data.dataset.graph, data.dual);
    const auto x = embed(ctx, cast_params<Scalar>(params));
    auto report = evaluate(x, data.dataset.graph, seeds.test, config.eval.ks, config.eval.direction, config.eval.pool,
                           &data.triangular);
    report.config_fingerprint = hex64(config.hash());
    return report;
}

template <typename Scalar>
RunResult run_in(const RunConfig& config, const PreparedData& data, const AlignmentSeeds& seeds,
                 const EpochCallback& on_epoch) {
    const GraphContext<Scalar> ctx(data.dataset.graph, data.dual);
    auto init = init_params<Scalar>(config.model, data.names.values, config.rng_seed);
    auto training = config.training;
    training.rng_seed = config.rng_seed;

    RunResult out;
    const auto start = std::chrono::steady_clock::now();
    auto trained = train(ctx, std::move(init), training, seeds.train, on_epoch);
    out.train_seconds = seconds_since(start);
    out.log = std::move(trained.log);
    out.params = {trained.params.options, trained.params.tensors.template cast<double>()};

    const auto x = embed(ctx, trained.params);
    out.report = evaluate(x, data.dataset.graph, seeds.test, config.eval.ks, config.eval.direction, config.eval.pool,
                          &data.triangular);
    out.report.config_fingerprint = hex64(config.hash());
    out.baseline = evaluate_names(config, data, seeds);
    return out;
}

std::uint64_t fraction_seed(std::uint64_t base, double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", fraction);
    return fnv1a64(buf, base ^ 0x9e3779b97f4a7c15ULL);
}

TableCell run_cell(const RunConfig& config, const PreparedData& data, const AlignmentSeeds& seeds) {
    TableCell cell;
    cell.variant = config.model.variant;
    const auto start = std::chrono::steady_clock::now();
    try {
        const auto result = run_experiment(config, data, seeds);
        cell.ks = result.report.ks;
        cell.hits = result.report.hits;
        cell.baseline_hits1 = result.baseline.hits_at(1);
    } catch (const std::exception& e) {
        cell.error = e.what();
        if (cell.error.empty()) cell.error = "unknown error";
    }
    cell.seconds = seconds_since(start);
    return cell;
}

}  // namespace

PreparedData prepare_data(const RunConfig& config, const std::filesystem::path& scratch_dir) {
    PreparedData data;
    if (config.use_synth) {
        auto synth = config.synth;
        synth.embedding_dim = config.model.dim;
        synth.rng_seed = config.rng_seed;
        synth.seed_fraction = config.split_fraction;
        data.dataset_dir = scratch_dir / "synthetic";
        data.synth = generate(synth, data.dataset_dir);
    } else {
        data.dataset_dir = config.dataset;
    }
    data.dataset = load_dataset(data.dataset_dir, config.split_fraction, config.rng_seed);

    std::filesystem::path names_path = config.names;
    if (names_path.empty() && std::filesystem::exists(data.dataset_dir / "name_vectors"))
        names_path = data.dataset_dir / "name_vectors";
    if (names_path.empty()) {
        data.names.values.resize(static_cast<Eigen::Index>(data.dataset.graph.entity_count()),
                                 static_cast<Eigen::Index>(config.model.dim));
        const auto& g = data.dataset.graph;
        for (EntityId e = 0; e < static_cast<EntityId>(g.entity_count()); ++e) {
            data.names.values.row(e) =
                fallback_name_vector(g.kg_of(e), g.original_entity(e), config.model.dim, config.rng_seed).transpose();
        }
        data.names.missing = g.entity_count();
        data.names_source = "fallback";
        data.dataset.warnings.push_back("no name vectors found; every entity uses its fallback vector");
    } else {
        data.names = load_name_embeddings(names_path, config.model.dim, data.dataset.graph, config.rng_seed);
        data.names_source = names_path.string();
    }

    const auto start = std::chrono::steady_clock::now();
    data.dual = build_dual_graph(data.dataset.graph);
    data.dual_build_seconds = seconds_since(start);
    data.triangular = find_triangular_entities(data.dataset.graph);
    return data;
}

RunResult run_experiment(const RunConfig& config, const PreparedData& data, const AlignmentSeeds& seeds,
                         const EpochCallback& on_epoch) {
    if (config.precision == "float") return run_in<float>(config, data, seeds, on_epoch);
    return run_in<double>(config, data, seeds, on_epoch);
}

AlignmentReport evaluate_params(const ModelParams<double>& params, const RunConfig& config, const PreparedData& data,
                                const AlignmentSeeds& seeds) {
    if (config.precision == "float") return evaluate_in<float>(params, config, data, seeds);
    return evaluate_in<double>(params, config, data, seeds);
}

AlignmentReport evaluate_names(const RunConfig& config, const PreparedData& data, const AlignmentSeeds& seeds) {
    auto report = evaluate(data.names.values, data.dataset.graph, seeds.test, config.eval.ks, config.eval.direction,
                           config.eval.pool, &data.triangular);
    report.config_fingerprint = hex64(config.hash());
    return report;
}

std::optional<double> TableCell::hits_at(std::size_t k) const {
    for (std::size_t i = 0; i < ks.size() && i < hits.size(); ++i)
        if (ks[i] == k) return hits[i];
    return std::nullopt;
}

std::vector<TableCell> seed_sweep(const RunConfig& config, const PreparedData& data, const CellCallback& on_cell) {
    std::vector<TableCell> cells;
    for (const double f : config.fractions) {
        const auto split_seed = fraction_seed(config.rng_seed, f);
        TableCell cell;
        try {
            const auto seeds = split_seeds(data.dataset.pairs, f, split_seed);
            cell = run_cell(config, data, seeds);
        } catch (const std::exception& e) {
            cell.variant = config.model.variant;
            cell.error = e.what();
        }
        cell.fraction = f;
        cell.split_seed = split_seed;
        if (on_cell) on_cell(cell);
        cells.push_back(std::move(cell));
    }
    return cells;
}

std::vector<TableCell> ablation(const RunConfig& config, const PreparedData& data, const CellCallback& on_cell) {
    std::vector<TableCell> cells;
    for (const auto v : config.variants) {
        auto cfg = config;
        cfg.model.variant = v;
        auto cell = run_cell(cfg, data, data.dataset.seeds);
        cell.fraction = static_cast<double>(data.dataset.seeds.train.size()) /
                        static_cast<double>(data.dataset.seeds.train.size() + data.dataset.seeds.test.size());
        cell.split_seed = config.rng_seed;
        if (on_cell) on_cell(cell);
        cells.push_back(std::move(cell));
    }
    return cells;
}

std::string table_text(const std::vector<TableCell>& cells) {
    std::ostringstream o;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-8s %8s %9s %9s %9s %9s  %s\n", "variant", "fraction", "hits@1", "hits@10",
                  "baseline", "seconds", "status");
    o << buf;
    for (const auto& c : cells) {
        const auto h1 = c.hits_at(1);
        const auto h10 = c.hits_at(10);
        std::snprintf(buf, sizeof buf, "%-8s %8.3f %9s %9s %9.4f %9.1f  %s\n", to_string(c.variant).c_str(),
                      c.fraction, h1 ? std::to_string(*h1).substr(0, 6).c_str() : "-",
                      h10 ? std::to_string(*h10).substr(0, 6).c_str() : "-", c.baseline_hits1, c.seconds,
                      c.ok() ? "ok" : ("FAILED: " + c.error).c_str());
        o << buf;
    }
    return o.str();
}

std::string table_json(const std::vector<TableCell>& cells, const RunConfig& config) {
    nlohmann::json j;
    j["schema"] = "rdgcn-table/1";
    j["config_hash"] = hex64(config.hash());
    j["config"] = config.to_text();
    j["rows"] = nlohmann::json::array();
    for (const auto& c : cells) {
        nlohmann::json row;
        row["variant"] = to_string(c.variant);
        row["fraction"] = c.fraction;
        row["split_seed"] = c.split_seed;
        row["ok"] = c.ok();
        if (c.ok()) {
            nlohmann::json hits = nlohmann::json::object();
            for (std::size_t i = 0; i < c.ks.size(); ++i) hits[std::to_string(c.ks[i])] = c.hits[i];
            row["hits"] = hits;
            row["baseline_hits1"] = c.baseline_hits1;
        } else {
            row["error"] = c.error;
        }
        row["seconds"] = c.seconds;
        j["rows"].push_back(row);
    }
    return j.dump(2) + '\n';
}

}  // namespace rdgcn
