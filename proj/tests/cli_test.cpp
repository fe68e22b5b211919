#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include <json.hpp>

#include "rdgcn/checkpoint.hpp"
#include "rdgcn/experiment.hpp"
#include "test_util.hpp"

namespace rdgcn {
namespace {

namespace fs = std::filesystem;

struct CommandResult {
    int status = -1;
    std::string output;
};

CommandResult run_cli(const std::string& args) {
    const std::string cmd = std::string(RDGCN_CLI_PATH) + " " + args + " 2>&1";
    CommandResult r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (pipe == nullptr) return r;
    std::array<char, 4096> buf{};
    while (std::fgets(buf.data(), buf.size(), pipe) != nullptr) r.output += buf.data();
    const int raw = ::pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

/// The single run directory created under `root` by one command.
fs::path only_run_dir(const fs::path& root, const std::string& prefix) {
    fs::path found;
    for (const auto& e : fs::directory_iterator(root)) {
        if (e.path().filename().string().rfind(prefix + "-", 0) == 0) {
            EXPECT_TRUE(found.empty()) << "more than one run dir";
            found = e.path();
        }
    }
    EXPECT_FALSE(found.empty()) << "no run dir for " << prefix;
    return found;
}

const std::string kSmall =
    " --synth --set synth.entities=40 --set synth.relations=5 --set synth.triples=120 --set synth.triangles=4"
    " --set dim=8 --set negatives=3";

TEST(Cli, HelpAndUsageErrors) {
    EXPECT_EQ(run_cli("--help").status, 0);
    EXPECT_NE(run_cli("").status, 0);
    EXPECT_NE(run_cli("frobnicate").status, 0);
    testing::TempDir out;
    const auto bad = run_cli("train --synth --set nonsense=1 --out " + out.path().string());
    EXPECT_EQ(bad.status, 1);
    EXPECT_NE(bad.output.find("error: unknown config key 'nonsense'"), std::string::npos) << bad.output;
    const auto missing = run_cli("prepare --dataset /nonexistent/dataset --out " + out.path().string());
    EXPECT_EQ(missing.status, 1);
    EXPECT_NE(missing.output.find("error:"), std::string::npos);
}

TEST(Cli, SynthWritesDataset) {
    testing::TempDir out;
    const auto r = run_cli("synth" + kSmall + " --out " + out.path().string());
    ASSERT_EQ(r.status, 0) << r.output;
    const auto dir = only_run_dir(out.path(), "synth");
    for (const auto* f : {"config.txt", "synthetic/triples_1", "synthetic/name_vectors", "synthetic/gold_pairs"})
        EXPECT_TRUE(fs::exists(dir / f)) << f;
}

TEST(Cli, ZeroEpochTrainSavesInitialParameters) {
    testing::TempDir out;
    const auto r = run_cli("train" + kSmall + " --epochs 0 --seed 4 --out " + out.path().string());
    ASSERT_EQ(r.status, 0) << r.output;
    const auto dir = only_run_dir(out.path(), "train");
    for (const auto* f : {"config.txt", "checkpoint.txt", "report.txt", "report.json", "train_log.jsonl"})
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    EXPECT_TRUE(slurp(dir / "train_log.jsonl").empty());

    const auto ck = load_checkpoint(dir / "checkpoint.txt");
    EXPECT_EQ(ck.config.to_text(), slurp(dir / "config.txt"));
    testing::TempDir scratch;
    const auto data = prepare_data(ck.config, scratch.path());
    const auto init = init_params<double>(ck.config.model, data.names.values, 4);
    std::vector<std::vector<double>> a, b;
    init.tensors.for_each_tensor([&](const std::string&, const double* d, std::size_t n) { a.emplace_back(d, d + n); });
    ck.params.tensors.for_each_tensor(
        [&](const std::string&, const double* d, std::size_t n) { b.emplace_back(d, d + n); });
    EXPECT_EQ(a, b);
}

TEST(Cli, TrainThenEvalWithManyCutoffs) {
    testing::TempDir out;
    const auto train = run_cli("train" + kSmall + " --epochs 20 --out " + out.path().string());
    ASSERT_EQ(train.status, 0) << train.output;
    const auto train_dir = only_run_dir(out.path(), "train");
    std::size_t lines = 0;
    std::istringstream log(slurp(train_dir / "train_log.jsonl"));
    for (std::string line; std::getline(log, line); ++lines) EXPECT_TRUE(nlohmann::json::parse(line).contains("loss"));
    EXPECT_EQ(lines, 20u);

    const auto eval = run_cli("eval --checkpoint " + (train_dir / "checkpoint.txt").string() +
                              " --ks 1,5,10,50 --direction both --out " + out.path().string());
    ASSERT_EQ(eval.status, 0) << eval.output;
    const auto j = nlohmann::json::parse(slurp(only_run_dir(out.path(), "eval") / "report.json"));
    const double h1 = j["hits"]["1"], h5 = j["hits"]["5"], h10 = j["hits"]["10"], h50 = j["hits"]["50"];
    EXPECT_LE(h1, h5);
    EXPECT_LE(h5, h10);
    EXPECT_LE(h10, h50);
    EXPECT_LE(h50, 1.0);
    EXPECT_EQ(j["direction"], "both");

    // The eval of the training checkpoint under the training protocol reproduces the training report.
    const auto again = run_cli("eval --checkpoint " + (train_dir / "checkpoint.txt").string() + " --out " +
                               (out.path() / "same").string());
    ASSERT_EQ(again.status, 0) << again.output;
    const auto a = nlohmann::json::parse(slurp(train_dir / "report.json"));
    const auto b = nlohmann::json::parse(slurp(only_run_dir(out.path() / "same", "eval") / "report.json"));
    EXPECT_EQ(a["hits"], b["hits"]);
}

TEST(Cli, EvalRejectsIncompatibleDataset) {
    testing::TempDir out;
    ASSERT_EQ(run_cli("train" + kSmall + " --epochs 0 --out " + out.path().string()).status, 0);
    const auto ck = only_run_dir(out.path(), "train") / "checkpoint.txt";
    const auto r = run_cli("eval --checkpoint " + ck.string() + " --set synth.entities=41 --out " +
                           (out.path() / "e").string());
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.output.find("error:"), std::string::npos) << r.output;
}

TEST(Cli, SweepAndAblateTables) {
    testing::TempDir out;
    const auto sweep = run_cli("sweep" + kSmall + " --epochs 3 --fractions 0.1 --out " + out.path().string());
    ASSERT_EQ(sweep.status, 0) << sweep.output;
    const auto sj = nlohmann::json::parse(slurp(only_run_dir(out.path(), "sweep") / "table.json"));
    EXPECT_EQ(sj["rows"].size(), 1u);

    const auto ablate = run_cli("ablate" + kSmall + " --epochs 3 --out " + out.path().string());
    ASSERT_EQ(ablate.status, 0) << ablate.output;
    const auto dir = only_run_dir(out.path(), "ablate");
    const auto aj = nlohmann::json::parse(slurp(dir / "table.json"));
    EXPECT_EQ(aj["rows"].size(), 4u);
    const auto text = slurp(dir / "table.txt");
    for (const auto* v : {"gcn-s", "hgcn-s", "rd", "rdgcn"}) EXPECT_NE(text.find(v), std::string::npos) << v;

    const auto failing = run_cli("sweep" + kSmall + " --epochs 1 --fractions 0.01 --out " +
                                 (out.path() / "f").string());
    EXPECT_EQ(failing.status, 1);
    EXPECT_TRUE(fs::exists(only_run_dir(out.path() / "f", "sweep") / "table.json"));
}

TEST(Cli, PrepareAndDualGraphStats) {
    testing::TempDir out;
    const auto prep = run_cli("prepare" + kSmall + " --out " + out.path().string());
    ASSERT_EQ(prep.status, 0) << prep.output;
    EXPECT_NE(prep.output.find("aligned pairs: 40"), std::string::npos) << prep.output;

    const auto stats = run_cli("dualgraph-stats" + kSmall + " --out " + out.path().string());
    ASSERT_EQ(stats.status, 0) << stats.output;
    const auto j = nlohmann::json::parse(slurp(only_run_dir(out.path(), "dualgraph-stats") / "dualgraph_stats.json"));
    EXPECT_EQ(j["vertices"], 10);
    EXPECT_GE(j["edges"].get<std::size_t>(), 10u);
    EXPECT_EQ(j["weight_histogram"].size(), 10u);
}

TEST(Cli, ConfigFileAndFlagPrecedence) {
    testing::TempDir out;
    std::ofstream(out / "run.cfg") << "# small run\nsynth = true\nsynth.entities = 40\nsynth.relations = 5\n"
                                      "synth.triples = 120\nsynth.triangles = 4\ndim = 8\nnegatives = 3\n"
                                      "epochs = 7\nseed = 2\n";
    const auto r =
        run_cli("train --config " + (out / "run.cfg").string() + " --seed 5 --out " + (out / "runs").string());
    ASSERT_EQ(r.status, 0) << r.output;
    const auto cfg = RunConfig::load(only_run_dir(out / "runs", "train") / "config.txt");
    EXPECT_EQ(cfg.training.epochs, 7u);
    EXPECT_EQ(cfg.rng_seed, 5u);
    EXPECT_EQ(cfg.model.dim, 8u);
}

TEST(Cli, OutputRootFromEnvironment) {
    testing::TempDir out;
    const std::string cmd = "RDGCN_OUT_ROOT=" + out.path().string() + " " + std::string(RDGCN_CLI_PATH) + " synth" +
                            kSmall + " > /dev/null 2>&1";
    ASSERT_EQ(std::system(cmd.c_str()), 0);
    EXPECT_TRUE(fs::exists(only_run_dir(out.path(), "synth") / "config.txt"));
}

}  // namespace
}  // namespace rdgcn
