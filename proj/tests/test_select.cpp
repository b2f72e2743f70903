#include "rinnlab/select.hpp"

#include <gtest/gtest.h>

#include <filesystem>

#include "rinnlab/graph.hpp"
#include "rinnlab/simulate.hpp"

using namespace rinnlab;

namespace {

CandidateRecord rec(int id, double weight_sum, double val_loss) {
    CandidateRecord r;
    r.id = id;
    r.set_index = id / 2;
    r.fold = id % 2;
    r.weight_sum = weight_sum;
    r.val_loss = val_loss;
    return r;
}

std::vector<int> order_of(const std::vector<CandidateRecord>& ranked) {
    std::vector<int> ids;
    for (const auto& r : ranked) ids.push_back(r.id);
    return ids;
}

}  // namespace

// ---------------------------------------------------------------------------
// Ranking

TEST(Rank, MinimumOnBothAxesRanksFirstWithZeroDistance) {
    std::vector<CandidateRecord> records{rec(0, 5.0, 0.5), rec(1, 1.0, 0.1), rec(2, 9.0, 0.9)};
    const auto ranked = rank(records);
    EXPECT_EQ(ranked.front().id, 1);
    EXPECT_DOUBLE_EQ(ranked.front().d_x, 0.0);
}

TEST(Rank, SymmetricPairTiesBreakTowardLowerLoss) {
    // (sum|w|, loss) = (0,1) and (1,0): both scale to distance 1; the
    // lower-loss record wins the tie.
    std::vector<CandidateRecord> records{rec(0, 0.0, 1.0), rec(1, 1.0, 0.0)};
    const auto ranked = rank(records);
    ASSERT_EQ(ranked.size(), 2u);
    EXPECT_DOUBLE_EQ(ranked[0].d_x, 1.0);
    EXPECT_DOUBLE_EQ(ranked[1].d_x, 1.0);
    EXPECT_EQ(ranked[0].id, 1);  // loss 0 first
}

TEST(Rank, TenRecordHandComputedOrder) {
    std::vector<CandidateRecord> records{
        rec(0, 12.0, 0.30), rec(1, 45.0, 0.02), rec(2, 8.0, 0.90),  rec(3, 30.0, 0.10),
        rec(4, 300.0, 0.01), rec(5, 22.0, 0.05), rec(6, 5.0, 2.50), rec(7, 60.0, 0.04),
        rec(8, 17.0, 0.20), rec(9, 40.0, 0.08)};
    const auto ranked = rank(records);
    // Frozen from a spreadsheet-style hand computation of the quantile
    // filter, min-max scaling and Euclidean distances.
    EXPECT_EQ(order_of(ranked), (std::vector<int>{5, 8, 3, 0, 9, 1, 7, 2, 4, 6}));
    EXPECT_NEAR(ranked[0].d_x, 0.059824, 1e-5);
    EXPECT_NEAR(ranked[1].d_x, 0.086471, 1e-5);
}

TEST(Rank, QuantileFilterDropsExtremes) {
    // 21 records: with n > 19 the 95% quantile sits below the maximum, so
    // the single extreme on each axis is dropped.
    std::vector<CandidateRecord> records;
    for (int i = 0; i < 19; ++i)
        records.push_back(rec(i, 10.0 + i, 0.10 + 0.01 * i));
    records.push_back(rec(19, 1e5, 0.10));  // weight outlier
    records.push_back(rec(20, 15.0, 1e4));  // loss outlier
    const auto ranked = rank(records);
    EXPECT_EQ(ranked.size(), 19u);
    for (const auto& r : ranked) {
        EXPECT_NE(r.id, 19);
        EXPECT_NE(r.id, 20);
    }
    // At most 10% dropped (5% per axis).
    EXPECT_GE(ranked.size(), records.size() - records.size() / 10);
}

TEST(Rank, InvariantToAffineRescaling) {
    Rng rng(4);
    std::vector<CandidateRecord> records;
    for (int i = 0; i < 30; ++i) records.push_back(rec(i, rng.uniform(1, 50), rng.uniform(0, 2)));
    const auto base = order_of(rank(records));
    auto scaled = records;
    for (auto& r : scaled) {
        r.weight_sum = 7.5 * r.weight_sum + 100.0;
        r.val_loss = 0.02 * r.val_loss + 3.0;
    }
    EXPECT_EQ(order_of(rank(scaled)), base);
}

TEST(Rank, RejectsTooFewOrFailedRecords) {
    EXPECT_THROW(rank({}), std::invalid_argument);
    EXPECT_THROW(rank({rec(0, 1.0, 1.0)}), std::invalid_argument);
    CandidateRecord failed = rec(1, 1.0, 1.0);
    failed.status = "failed: diverged";
    EXPECT_THROW(rank({rec(0, 1.0, 1.0), failed}), std::invalid_argument);
}

TEST(TopK, BoundsAndOrdering) {
    std::vector<CandidateRecord> records;
    for (int i = 0; i < 12; ++i)
        records.push_back(rec(i, 1.0 + i, 0.5 - 0.03 * i));
    const auto ranked = rank(records);
    const auto best = top_k(ranked, 10);
    EXPECT_EQ(best.size(), 10u);
    for (std::size_t i = 1; i < best.size(); ++i)
        EXPECT_GE(best[i].d_x, best[i - 1].d_x);
    EXPECT_EQ(top_k(ranked, static_cast<int>(ranked.size())).size(), ranked.size());
    EXPECT_THROW(top_k(ranked, static_cast<int>(ranked.size()) + 1), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Hyperparameter sampling

TEST(SampleHyperparams, DeterministicAndWithinDomains) {
    SearchSpace space;
    for (int set = 0; set < 40; ++set) {
        const HyperParams a = sample_hyperparams(space, Strategy::RINN, set, 99);
        const HyperParams b = sample_hyperparams(space, Strategy::RINN, set, 99);
        ASSERT_EQ(a.learning_rate, b.learning_rate);
        ASSERT_EQ(a.hidden, b.hidden);
        ASSERT_GE(a.learning_rate, space.lr_lo);
        ASSERT_LE(a.learning_rate, space.lr_hi);
        ASSERT_GE(a.l1_rate, space.l1_lo);
        ASSERT_LE(a.l1_rate, space.l1_hi);
        ASSERT_EQ(a.depth, space.rinn_layers);
        ASSERT_TRUE(std::find(space.hidden_sizes.begin(), space.hidden_sizes.end(), a.hidden) !=
                    space.hidden_sizes.end());
    }
    const HyperParams dnn = sample_hyperparams(space, Strategy::DNN, 3, 99);
    EXPECT_GE(dnn.depth, 2);
    EXPECT_LE(dnn.depth, 8);
    const HyperParams esc = sample_hyperparams(space, Strategy::ESC, 3, 99);
    EXPECT_GE(esc.mutation_rate, space.mutation_lo);
    EXPECT_LE(esc.mutation_rate, space.mutation_hi);
    EXPECT_FALSE(esc.legal_weights.empty());
}

TEST(SampleHyperparams, GridModeCyclesDomains) {
    SearchSpace space;
    space.mode = SamplingMode::GRID;
    std::set<int> hiddens;
    for (int set = 0; set < 200; ++set)
        hiddens.insert(sample_hyperparams(space, Strategy::RINN, set, 1).hidden);
    EXPECT_EQ(hiddens.size(), space.hidden_sizes.size());
}

TEST(AutoencoderSizes, StrictlyDecreasing) {
    const auto sizes = autoencoder_sizes(32, 3);
    ASSERT_EQ(sizes.size(), 3u);
    EXPECT_GT(sizes[0], sizes[1]);
    EXPECT_GT(sizes[1], sizes[2]);
}

// ---------------------------------------------------------------------------
// search.csv round trip

TEST(SearchCsv, RecordRoundTrip) {
    CandidateRecord r;
    r.id = 7;
    r.set_index = 3;
    r.fold = 1;
    r.strategy = Strategy::ESC;
    r.hp.learning_rate = 0.012345678901234567;
    r.hp.l1_rate = 1.25e-4;
    r.hp.hidden = 24;
    r.hp.depth = 8;
    r.hp.activation = Activation::TANH;
    r.hp.elite_ratio = 0.3;
    r.hp.mutation_rate = 0.0075;
    r.hp.legal_weights = {-1.0, 0.0, 1.0};
    r.seed = 1234567890123456789ULL;
    r.status = "ok";
    r.val_loss = 0.125;
    r.weight_sum = 42.5;
    r.model_path = "models/7.json";
    const CandidateRecord back = record_from_csv_line(record_csv_line(r));
    EXPECT_EQ(back.id, r.id);
    EXPECT_EQ(back.fold, r.fold);
    EXPECT_EQ(back.strategy, Strategy::ESC);
    EXPECT_EQ(back.hp.learning_rate, r.hp.learning_rate);  // 17 digits: bit-exact
    EXPECT_EQ(back.hp.legal_weights, r.hp.legal_weights);
    EXPECT_EQ(back.seed, r.seed);
    EXPECT_EQ(back.model_path, r.model_path);
}

// ---------------------------------------------------------------------------
// run_search end to end (small budgets)

namespace {

struct SearchEnv {
    std::filesystem::path dir;
    Dataset dataset;
    SplitPlan plan;

    explicit SearchEnv(const std::string& name) {
        dir = std::filesystem::temp_directory_path() / name;
        std::filesystem::remove_all(dir);
        const CausalDag dag = canonical_dag();
        dataset = gen_interventional(dag, 120, 0.1, 5);
        plan = make_splits(120, 5);
    }
    ~SearchEnv() { std::filesystem::remove_all(dir); }
};

SearchSpace tiny_space(int budget) {
    SearchSpace space;
    space.budget = budget;
    space.max_epochs = 5;
    space.patience = 5;
    space.hidden_sizes = {4, 8};
    space.rinn_layers = 2;
    return space;
}

}  // namespace

TEST(RunSearch, ProducesTwoRecordsPerSet) {
    SearchEnv env("rinnlab_search_a");
    const auto records =
        run_search(tiny_space(3), Strategy::RINN, env.dataset, env.plan, env.dir, 42, 2);
    EXPECT_EQ(records.size(), 6u);
    for (const auto& r : records) {
        EXPECT_TRUE(r.ok()) << r.status;
        EXPECT_TRUE(std::filesystem::exists(env.dir / r.model_path));
        const NetworkModel m = load_model((env.dir / r.model_path).string());
        EXPECT_EQ(m.record.best_val_loss, r.val_loss);
    }
    EXPECT_TRUE(std::filesystem::exists(env.dir / "search_config.json"));
}

TEST(RunSearch, DeterministicAcrossRunsAndWorkerCounts) {
    SearchEnv a("rinnlab_search_b1");
    SearchEnv b("rinnlab_search_b2");
    run_search(tiny_space(2), Strategy::RINN, a.dataset, a.plan, a.dir, 7, 1);
    run_search(tiny_space(2), Strategy::RINN, b.dataset, b.plan, b.dir, 7, 2);
    EXPECT_EQ(read_file(a.dir / "search.csv"), read_file(b.dir / "search.csv"));
}

TEST(RunSearch, ResumeSkipsCompletedJobs) {
    SearchEnv env("rinnlab_search_c");
    run_search(tiny_space(2), Strategy::RINN, env.dataset, env.plan, env.dir, 7, 1);
    const std::string first = read_file(env.dir / "search.csv");
    const auto t0 = std::filesystem::last_write_time(env.dir / "models" / "0.json");
    // Re-running leaves the records and the models untouched.
    const auto records =
        run_search(tiny_space(2), Strategy::RINN, env.dataset, env.plan, env.dir, 7, 1);
    EXPECT_EQ(read_file(env.dir / "search.csv"), first);
    EXPECT_EQ(std::filesystem::last_write_time(env.dir / "models" / "0.json"), t0);
    EXPECT_EQ(records.size(), 4u);
}

TEST(RunSearch, FailuresRecordedNotFatal) {
    SearchEnv env("rinnlab_search_d");
    SearchSpace space = tiny_space(2);
    space.lr_lo = 1e6;  // with ReLU the loss overflows within a few batches
    space.lr_hi = 1e7;
    space.activations = {Activation::TANH};  // bounded hidden, unbounded output
    space.max_epochs = 60;
    space.patience = 60;  // keep stepping until the overflow hits
    const auto records =
        run_search(space, Strategy::RINN, env.dataset, env.plan, env.dir, 11, 2);
    EXPECT_EQ(records.size(), 4u);
    for (const auto& r : records) {
        EXPECT_FALSE(r.ok());
        EXPECT_NE(r.status.find("failed"), std::string::npos);
    }
    // The failures persist to the log.
    const auto reloaded = load_search_csv(env.dir / "search.csv");
    EXPECT_EQ(reloaded.size(), 4u);
    EXPECT_FALSE(reloaded.front().ok());
}

TEST(RunSearch, AutoencoderStrategyTrainsOnOutputs) {
    SearchEnv env("rinnlab_search_e");
    SearchSpace space = tiny_space(1);
    space.autoencoder_depths = {1};
    const auto records =
        run_search(space, Strategy::AUTOENCODER, env.dataset, env.plan, env.dir, 13, 1);
    ASSERT_EQ(records.size(), 2u);
    EXPECT_TRUE(records[0].ok()) << records[0].status;
    const NetworkModel m = load_model((env.dir / records[0].model_path).string());
    EXPECT_EQ(m.arch.kind, ArchKind::AUTOENCODER);
    EXPECT_EQ(m.arch.input_dim, env.dataset.n_outputs());
}
