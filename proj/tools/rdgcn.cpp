// rdgcn command-line entry point.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rdgcn/checkpoint.hpp"
#include "rdgcn/config.hpp"
#include "rdgcn/dual_graph.hpp"
#include "rdgcn/experiment.hpp"
#include "rdgcn/hash.hpp"
#include "rdgcn/report.hpp"

namespace fs = std::filesystem;
using namespace rdgcn;

namespace {

struct CommonFlags {
    std::string config_file;
    std::string dataset;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string variant;
    std::optional<std::size_t> epochs;
    std::string fractions;
    std::string ks;
    std::string direction;
    std::string pool;
    bool synth = false;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_file, "flat key = value config file");
    cmd->add_option("--dataset", f.dataset, "dataset directory (DBP15K layout)");
    cmd->add_option("--out", f.out, "output root (default: $RDGCN_OUT_ROOT or ./runs)");
    cmd->add_option("--seed", f.seed, "rng seed");
    cmd->add_option("--variant", f.variant, "rdgcn | hgcn-s | gcn-s | rd");
    cmd->add_option("--epochs", f.epochs, "training epochs");
    cmd->add_option("--fractions", f.fractions, "comma-separated seed fractions for sweep");
    cmd->add_option("--ks", f.ks, "comma-separated Hits@k cutoffs");
    cmd->add_option("--direction", f.direction, "kg1-kg2 | kg2-kg1 | both");
    cmd->add_option("--candidate-pool", f.pool, "test | all");
    cmd->add_flag("--synth", f.synth, "use the synthetic task (scaled-down defaults)");
    cmd->add_option("--set", f.overrides, "extra key=value overrides, repeatable");
}

RunConfig resolve_config(const CommonFlags& f, std::optional<RunConfig> base = std::nullopt) {
    RunConfig cfg = base ? *base : (f.synth ? synthetic_defaults() : RunConfig{});
    if (!f.config_file.empty()) cfg.apply_file(f.config_file);
    if (f.synth) cfg.use_synth = true;
    if (!f.dataset.empty()) {
        cfg.dataset = f.dataset;
        cfg.use_synth = false;
    }
    if (!f.out.empty()) cfg.output_dir = f.out;
    if (f.seed) cfg.rng_seed = *f.seed;
    if (!f.variant.empty()) cfg.set("variant", f.variant);
    if (f.epochs) cfg.training.epochs = *f.epochs;
    if (!f.fractions.empty()) cfg.set("fractions", f.fractions);
    if (!f.ks.empty()) cfg.set("ks", f.ks);
    if (!f.direction.empty()) cfg.set("direction", f.direction);
    if (!f.pool.empty()) cfg.set("candidate_pool", f.pool);
    for (const auto& kv : f.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        std::string key = kv.substr(0, eq);
        while (!key.empty() && key.back() == ' ') key.pop_back();
        cfg.set(key, kv.substr(eq + 1));
    }
    cfg.resolve();
    return cfg;
}

fs::path make_run_dir(const std::string& command, const RunConfig& cfg) {
    fs::path root = cfg.output_dir;
    if (root.empty()) {
        const char* env = std::getenv("RDGCN_OUT_ROOT");
        root = env && *env ? fs::path(env) : fs::path("runs");
    }
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    localtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &tm);
    const std::string base = command + "-" + stamp;
    fs::path dir = root / base;
    for (int i = 1; fs::exists(dir); ++i) dir = root / (base + "-" + std::to_string(i));
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + file.string());
    out << text;
}

void write_config(const fs::path& dir, const RunConfig& cfg) { write_text(dir / "config.txt", cfg.to_text()); }

void print_warnings(const PreparedData& data) {
    for (const auto& w : data.dataset.warnings) std::cerr << "warning: " << w << '\n';
}

void print_dual_stats(const DualGraphStats& s) {
    std::printf("dual graph: %zu vertices, %zu edges, %zu isolated, built in %.3f s\n", s.vertex_count, s.edge_count,
                s.isolated_count, s.build_seconds);
    std::printf("weight histogram (bins of 0.2 over [0,2]):");
    for (const auto c : s.weight_histogram) std::printf(" %zu", c);
    std::printf("\n");
}

int cmd_prepare(const CommonFlags& f) {
    const auto cfg = resolve_config(f);
    const auto dir = make_run_dir("prepare", cfg);
    write_config(dir, cfg);
    const auto data = prepare_data(cfg, dir);
    print_warnings(data);
    const auto& g = data.dataset.graph;
    std::printf("dataset: %s\n", data.dataset_dir.string().c_str());
    std::printf("entities: %zu + %zu\n", g.kg1_entity_count(), g.entity_count() - g.kg1_entity_count());
    std::printf("relations: %zu + %zu\n", g.kg1_relation_count(), g.relation_count() - g.kg1_relation_count());
    std::printf("triples: %zu + %zu\n", g.kg1_triple_count(), g.triples().size() - g.kg1_triple_count());
    std::printf("aligned pairs: %zu (train %zu, test %zu, %s split)\n", data.dataset.pairs.size(),
                data.dataset.seeds.train.size(), data.dataset.seeds.test.size(),
                data.dataset.fixed_split ? "fixed" : "random");
    std::printf("isolated pairs: %zu\n", data.dataset.isolated_pairs);
    std::printf("names: %s (%zu fallback rows)\n", data.names_source.c_str(), data.names.missing);
    std::printf("triangle entities: %zu\n", data.triangular.size());
    print_dual_stats(dual_graph_stats(data.dual, data.dual_build_seconds));
    std::printf("run dir: %s\n", dir.string().c_str());
    return 0;
}

int cmd_dualgraph_stats(const CommonFlags& f) {
    const auto cfg = resolve_config(f);
    const auto dir = make_run_dir("dualgraph-stats", cfg);
    write_config(dir, cfg);
    const auto data = prepare_data(cfg, dir);
    print_warnings(data);
    const auto stats = dual_graph_stats(data.dual, data.dual_build_seconds);
    print_dual_stats(stats);
    std::string text = "vertices " + std::to_string(stats.vertex_count) + "\nedges " + std::to_string(stats.edge_count) +
                       "\nisolated " + std::to_string(stats.isolated_count) + "\nhistogram";
    for (const auto c : stats.weight_histogram) text += " " + std::to_string(c);
    write_text(dir / "dualgraph_stats.txt", text + "\n");
    nlohmann::json j;
    j["vertices"] = stats.vertex_count;
    j["edges"] = stats.edge_count;
    j["isolated"] = stats.isolated_count;
    j["weight_histogram"] = stats.weight_histogram;
    j["build_seconds"] = stats.build_seconds;
    j["config_hash"] = hex64(cfg.hash());
    write_text(dir / "dualgraph_stats.json", j.dump(2) + "\n");
    std::printf("run dir: %s\n", dir.string().c_str());
    return 0;
}

int cmd_synth(CommonFlags f) {
    f.synth = true;
    const auto cfg = resolve_config(f);
    const auto dir = make_run_dir("synth", cfg);
    write_config(dir, cfg);
    const auto out = generate(cfg.synth, dir / "synthetic");
    std::printf("dataset: %s\n", out.dataset_dir.string().c_str());
    std::printf("triples: %zu + %zu, planted triangles: %zu, gold pairs: %zu\n", out.triple_counts[0],
                out.triple_counts[1], out.planted_triangles.size(), out.gold_pairs.size());
    return 0;
}

int cmd_train(const CommonFlags& f) {
    const auto cfg = resolve_config(f);
    const auto dir = make_run_dir("train", cfg);
    write_config(dir, cfg);
    const auto data = prepare_data(cfg, dir);
    print_warnings(data);

    std::ofstream log(dir / "train_log.jsonl");
    const auto on_epoch = [&](const EpochRecord& r) {
        write_log_line(log, r);
        log.flush();
        if (r.hits1) std::printf("epoch %4zu  loss %.6g  hits@1 %.4f\n", r.epoch, r.loss, *r.hits1);
    };
    try {
        const auto result = run_experiment(cfg, data, data.dataset.seeds, on_epoch);
        save_checkpoint(dir / "checkpoint.txt", result.params, data.dataset.graph, cfg);
        write_report(dir, result.report, cfg);
        std::fputs(format_report(result.report, cfg).c_str(), stdout);
        std::printf("name-init baseline Hits@1 %.4f\n", result.baseline.hits_at(1));
    } catch (const TrainingDiverged<double>& e) {
        save_checkpoint(dir / "checkpoint.last_good.txt", e.last_good(), data.dataset.graph, cfg);
        throw;
    } catch (const TrainingDiverged<float>& e) {
        save_checkpoint(dir / "checkpoint.last_good.txt", e.last_good(), data.dataset.graph, cfg);
        throw;
    }
    std::printf("run dir: %s\n", dir.string().c_str());
    return 0;
}

int cmd_eval(const CommonFlags& f, const std::string& checkpoint_file) {
    const auto ck = load_checkpoint(checkpoint_file);
    // The checkpoint's config is the base; flags may change the dataset and evaluation options.
    auto cfg = resolve_config(f, ck.config);
    const auto dir = make_run_dir("eval", cfg);
    write_config(dir, cfg);
    const auto data = prepare_data(cfg, dir);
    print_warnings(data);
    check_compatible(ck, data.dataset.graph);
    const auto report = evaluate_params(ck.params, cfg, data, data.dataset.seeds);
    write_report(dir, report, cfg);
    std::fputs(format_report(report, cfg).c_str(), stdout);
    std::printf("run dir: %s\n", dir.string().c_str());
    return 0;
}

int cmd_table(const CommonFlags& f, bool sweep) {
    const auto cfg = resolve_config(f);
    const auto dir = make_run_dir(sweep ? "sweep" : "ablate", cfg);
    write_config(dir, cfg);
    const auto data = prepare_data(cfg, dir);
    print_warnings(data);
    const auto on_cell = [](const TableCell& c) {
        if (c.ok()) {
            std::printf("%-7s fraction %.3f  hits@1 %.4f  (%.1f s)\n", to_string(c.variant).c_str(), c.fraction,
                        c.hits_at(1).value_or(0.0), c.seconds);
        } else {
            std::printf("%-7s fraction %.3f  FAILED: %s\n", to_string(c.variant).c_str(), c.fraction, c.error.c_str());
        }
        std::fflush(stdout);
    };
    const auto cells = sweep ? seed_sweep(cfg, data, on_cell) : ablation(cfg, data, on_cell);
    write_text(dir / "table.txt", table_text(cells));
    write_text(dir / "table.json", table_json(cells, cfg));
    std::fputs(table_text(cells).c_str(), stdout);
    std::printf("run dir: %s\n", dir.string().c_str());
    for (const auto& c : cells)
        if (!c.ok()) return 1;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Relation-aware dual-graph entity alignment"};
    app.require_subcommand(1);

    CommonFlags prepare, synth, train, eval, sweep, ablate, stats;
    std::string checkpoint_file;
    add_common(app.add_subcommand("prepare", "load and validate a dataset"), prepare);
    add_common(app.add_subcommand("synth", "generate a synthetic dataset"), synth);
    add_common(app.add_subcommand("train", "train a model; writes checkpoint, log and report"), train);
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    add_common(eval_cmd, eval);
    eval_cmd->add_option("--checkpoint", checkpoint_file, "checkpoint file written by train")->required();
    add_common(app.add_subcommand("sweep", "retrain per seed fraction"), sweep);
    add_common(app.add_subcommand("ablate", "retrain per model variant"), ablate);
    add_common(app.add_subcommand("dualgraph-stats", "dual relation graph statistics"), stats);

    CLI11_PARSE(app, argc, argv);

    try {
        const auto* cmd = app.get_subcommands().front();
        const std::string name = cmd->get_name();
        if (name == "prepare") return cmd_prepare(prepare);
        if (name == "synth") return cmd_synth(synth);
        if (name == "train") return cmd_train(train);
        if (name == "eval") return cmd_eval(eval, checkpoint_file);
        if (name == "sweep") return cmd_table(sweep, true);
        if (name == "ablate") return cmd_table(ablate, false);
        if (name == "dualgraph-stats") return cmd_dualgraph_stats(stats);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
