// End-to-end tests of the rinnlab binary: subcommand wiring, exit codes,
// file artifacts, and byte-identical reruns.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "rinnlab/dataset.hpp"
#include "rinnlab/graph.hpp"
#include "rinnlab/io.hpp"
#include "rinnlab/select.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code;
    std::string output;
};

CliResult run_cli(const std::string& args, const std::string& env = "") {
    const fs::path out = fs::temp_directory_path() / "rinnlab_cli_out.txt";
    const std::string cmd =
        env + " " + std::string(RINNLAB_CLI_PATH) + " " + args + " > " + out.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WEXITSTATUS(status);
    r.output = rinnlab::read_file(out);
    return r;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& sub) const { return (path / sub).string(); }
};

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text) n += c == '\n';
    return n;
}

}  // namespace

TEST(Cli, SimulateWritesDatasetSplitAndManifest) {
    TempDir dir("rinnlab_cli_sim");
    const CliResult r = run_cli("simulate --gen interventional --dag gt16 --n 200 --p 0.10 "
                                "--seed 7 --out " + (dir / ""));
    ASSERT_EQ(r.exit_code, 0) << r.output;
    const rinnlab::Dataset ds = rinnlab::load_dataset(dir.path / "data");
    EXPECT_EQ(ds.n_rows(), 200);
    EXPECT_EQ(ds.n_inputs(), 16);
    EXPECT_EQ(ds.n_outputs(), 16);
    ASSERT_TRUE(ds.meta.split.has_value());
    EXPECT_EQ(ds.meta.split->test.size(), 20u);

    const auto manifest = nlohmann::json::parse(rinnlab::read_file(dir.path / "manifest.json"));
    EXPECT_EQ(manifest.at("subcommand"), "simulate");
    EXPECT_EQ(manifest.at("master_seed"), 7);
    bool found_csv = false;
    for (const auto& out : manifest.at("outputs"))
        if (out.at("path").get<std::string>().find("data.csv") != std::string::npos) {
            found_csv = true;
            EXPECT_EQ(out.at("digest").get<std::string>(),
                      rinnlab::file_digest(dir.path / "data.csv"));
        }
    EXPECT_TRUE(found_csv);
}

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run_cli("simulate --n 10").exit_code, 2);          // missing --gen
    EXPECT_EQ(run_cli("simulate --gen warp --out /tmp/x").exit_code, 2);
    EXPECT_EQ(run_cli("").exit_code, 2);                         // no subcommand
    EXPECT_EQ(run_cli("train").exit_code, 2);                    // missing --dataset
    const CliResult help = run_cli("--help");
    EXPECT_EQ(help.exit_code, 0);
    EXPECT_NE(help.output.find("simulate"), std::string::npos);
}

TEST(Cli, RuntimeErrorsExitOne) {
    const CliResult r = run_cli("train --dataset /nonexistent/data --out /tmp/rinnlab_x");
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_NE(r.output.find("error"), std::string::npos);
}

TEST(Cli, ByteIdenticalReruns) {
    TempDir a("rinnlab_cli_det_a");
    TempDir b("rinnlab_cli_det_b");
    const std::string args = "simulate --gen logical --dag gt16 --n 120 --ops all-or --seed 11 ";
    ASSERT_EQ(run_cli(args + "--out " + (a / "")).exit_code, 0);
    ASSERT_EQ(run_cli(args + "--out " + (b / "")).exit_code, 0);
    EXPECT_EQ(rinnlab::read_file(a.path / "data.csv"), rinnlab::read_file(b.path / "data.csv"));
    EXPECT_EQ(rinnlab::read_file(a.path / "data.meta.json"),
              rinnlab::read_file(b.path / "data.meta.json"));
}

TEST(Cli, EnvSeedFallback) {
    TempDir a("rinnlab_cli_env_a");
    TempDir b("rinnlab_cli_env_b");
    ASSERT_EQ(run_cli("simulate --gen background --p-in 6 --q-out 4 --n 50 --seed 21 --out " +
                      (a / ""))
                  .exit_code,
              0);
    ASSERT_EQ(run_cli("simulate --gen background --p-in 6 --q-out 4 --n 50 --out " + (b / ""),
                      "RINNLAB_SEED=21")
                  .exit_code,
              0);
    EXPECT_EQ(rinnlab::read_file(a.path / "data.csv"), rinnlab::read_file(b.path / "data.csv"));
}

TEST(Cli, TrainSearchScorePipeline) {
    TempDir dir("rinnlab_cli_pipe");
    ASSERT_EQ(run_cli("simulate --gen interventional --dag gt16 --n 150 --seed 5 --out " +
                      (dir / "data"))
                  .exit_code,
              0);

    // Single training run.
    const CliResult tr = run_cli("train --arch rinn --dataset " + (dir / "data/data") +
                                 " --layers 2 --hidden 4 --lr 0.01 --l1 1e-3 --epochs 5 "
                                 "--seed 3 --out " + (dir / "model"));
    ASSERT_EQ(tr.exit_code, 0) << tr.output;
    EXPECT_TRUE(fs::exists(dir.path / "model" / "model.json"));

    // Search with a tiny budget over both folds.
    const CliResult se = run_cli("search --arch rinn --dataset " + (dir / "data/data") +
                                 " --budget 3 --epochs 5 --patience 5 --jobs 2 --seed 9 --out " +
                                 (dir / "search"));
    ASSERT_EQ(se.exit_code, 0) << se.output;
    const auto records = rinnlab::load_search_csv(dir.path / "search" / "search.csv");
    EXPECT_EQ(records.size(), 6u);

    // Score the top 2.
    const CliResult sc = run_cli("score --search " + (dir / "search") + " --dataset " +
                                 (dir / "data/data") + " --k 2 --emit-heatmaps --out " +
                                 (dir / "score"));
    ASSERT_EQ(sc.exit_code, 0) << sc.output;
    EXPECT_TRUE(fs::exists(dir.path / "score" / "aggregate.csv"));
    EXPECT_TRUE(fs::exists(dir.path / "score" / "score_report_0.json"));
    EXPECT_TRUE(fs::exists(dir.path / "score" / "score_report_1.json"));
    EXPECT_TRUE(fs::exists(dir.path / "score" / "ranked.csv"));
    EXPECT_TRUE(fs::exists(dir.path / "score" / "heatmaps" / "projections.csv"));
    const std::string agg = rinnlab::read_file(dir.path / "score" / "aggregate.csv");
    EXPECT_EQ(count_lines(agg), 2);  // header + one aggregate row

    // Asking for more models than survive ranking is a runtime failure.
    const CliResult overflow = run_cli("score --search " + (dir / "search") + " --dataset " +
                                       (dir / "data/data") + " --k 50 --out " + (dir / "s2"));
    EXPECT_EQ(overflow.exit_code, 1);
}

TEST(Cli, EvolveWritesModelAndTrace) {
    TempDir dir("rinnlab_cli_evolve");
    ASSERT_EQ(run_cli("simulate --gen interventional --dag gt16 --n 120 --seed 5 --out " +
                      (dir / "data"))
                  .exit_code,
              0);
    const CliResult ev = run_cli("evolve --dataset " + (dir / "data/data") +
                                 " --hidden 4 --layers 2 --pop 10 --generations 5 "
                                 "--mutation-rate 0.05 --seed 2 --out " + (dir / "es"));
    ASSERT_EQ(ev.exit_code, 0) << ev.output;
    EXPECT_TRUE(fs::exists(dir.path / "es" / "model.json"));
    const std::string trace = rinnlab::read_file(dir.path / "es" / "es_trace.csv");
    EXPECT_EQ(count_lines(trace), 6);  // header + 5 generations
}

TEST(Cli, EmbedPipeline) {
    TempDir dir("rinnlab_cli_embed");
    ASSERT_EQ(run_cli("simulate --gen logical --dag gt16 --n 80 --ops all-or --seed 3 --out " +
                      (dir / "core"))
                  .exit_code,
              0);
    ASSERT_EQ(run_cli("simulate --gen background --p-in 20 --q-out 10 --n 80 --density 0.2 "
                      "--seed 4 --out " + (dir / "bg"))
                  .exit_code,
              0);
    const CliResult em = run_cli("simulate --gen embed --core " + (dir / "core/data") +
                                 " --background " + (dir / "bg/data") + " --seed 5 --out " +
                                 (dir / "combined"));
    ASSERT_EQ(em.exit_code, 0) << em.output;
    const rinnlab::Dataset ds = rinnlab::load_dataset(dir.path / "combined" / "data");
    EXPECT_EQ(ds.n_inputs(), 36);
    EXPECT_EQ(ds.n_outputs(), 26);
    EXPECT_EQ(ds.meta.core_inputs, 16);
    EXPECT_EQ(ds.meta.dag, "gt16");
}

TEST(Cli, GraphSubcommands) {
    TempDir dir("rinnlab_cli_graph");
    const CliResult dump = run_cli("graph dump --dag gt16 --out " + (dir / "gt.dag"));
    ASSERT_EQ(dump.exit_code, 0);
    const rinnlab::CausalDag dag = rinnlab::load_dag_file(dir / "gt.dag");
    EXPECT_EQ(dag.node_count(), 39);

    const CliResult mod = run_cli("graph modify --dag " + (dir / "gt.dag") + " --out " +
                                  (dir / "mod.dag"));
    ASSERT_EQ(mod.exit_code, 0);
    EXPECT_EQ(rinnlab::read_file(dir.path / "gt.dag"), rinnlab::read_file(dir.path / "mod.dag"));

    const CliResult pat = run_cli("graph patterns --dag gt16");
    ASSERT_EQ(pat.exit_code, 0);
    EXPECT_EQ(count_lines(pat.output), 1 + 16 + 7);
    EXPECT_NE(pat.output.find("E,LATENT,1,1,0,0,1,1"), std::string::npos);

    EXPECT_EQ(run_cli("graph fold --dag gt16").exit_code, 2);
}
