#include "rinnlab/network.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "rinnlab/graph.hpp"
#include "rinnlab/simulate.hpp"
#include "rinnlab/splits.hpp"

using namespace rinnlab;

namespace {

Matrix random_matrix(int rows, int cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (auto& v : m.v) v = rng.uniform(lo, hi);
    return m;
}

double fd_relative_error(const NetworkModel& model, const Matrix& x, const Matrix& y,
                         LossKind loss, double l1) {
    NetworkModel m = model;
    ForwardCache cache;
    forward(m, x, cache);
    Gradients g;
    backward(m, x, y, loss, l1, cache, g);

    std::vector<double> analytic;
    for (const auto& w : g.w)
        for (double v : w.v) analytic.push_back(v);
    for (const auto& b : g.b)
        for (double v : b) analytic.push_back(v);

    auto objective_fn = [&](const NetworkModel& mm) {
        return prediction_loss(mm, x, y, loss) + l1 * weight_l1(mm);
    };
    const auto numeric = oracles::ref_fd_gradient(m, objective_fn);

    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double denom = std::max({1.0, std::fabs(analytic[i]), std::fabs(numeric[i])});
        worst = std::max(worst, std::fabs(analytic[i] - numeric[i]) / denom);
    }
    return worst;
}

// Smallest |pre-activation| across hidden layers; used to stay away from
// ReLU kinks in finite-difference checks.
double min_preactivation(const NetworkModel& m, const Matrix& x) {
    ForwardCache cache;
    forward(m, x, cache);
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& z : cache.z)
        for (double v : z.v) lo = std::min(lo, std::fabs(v));
    return lo;
}

}  // namespace

// ---------------------------------------------------------------------------
// Forward

TEST(Forward, ZeroWeightsSigmoidOutputsHalf) {
    Architecture arch = rinn_architecture(4, 3, 5, 3, Activation::RELU,
                                          OutputActivation::SIGMOID);
    NetworkModel m = init_model(arch, 1);
    for (auto& w : m.weights) w.fill(0.0);
    Rng rng(2);
    const Matrix x = random_matrix(6, 4, rng);
    const Matrix y = predict(m, x);
    for (double v : y.v) EXPECT_DOUBLE_EQ(v, 0.5);
}

TEST(Forward, OnlyLastRedundantBlockCarriesSignal) {
    // Zero everything except the last hidden layer's input block and the
    // output matrix: the prediction must equal the two-matrix closed form.
    Architecture arch = rinn_architecture(3, 2, 4, 4, Activation::RELU,
                                          OutputActivation::IDENTITY);
    NetworkModel m = init_model(arch, 3);
    for (auto& w : m.weights) w.fill(0.0);
    for (auto& b : m.biases) std::fill(b.begin(), b.end(), 0.0);
    Rng rng(4);
    Matrix& last_hidden = m.weights[3];  // (4 + 3) x 4, rows 4..6 are the input block
    for (int r = 4; r < 7; ++r)
        for (int c = 0; c < 4; ++c) last_hidden(r, c) = rng.uniform(-1, 1);
    Matrix& out = m.weights[4];
    for (auto& v : out.v) v = rng.uniform(-1, 1);

    const Matrix x = random_matrix(5, 3, rng, 0.0, 1.0);
    const Matrix y = predict(m, x);
    for (int row = 0; row < x.rows; ++row) {
        for (int c = 0; c < 2; ++c) {
            double expect = 0.0;
            for (int h = 0; h < 4; ++h) {
                double z = 0.0;
                for (int i = 0; i < 3; ++i) z += x(row, i) * last_hidden(4 + i, h);
                expect += std::max(0.0, z) * out(h, c);
            }
            EXPECT_NEAR(y(row, c), expect, 1e-12);
        }
    }
}

TEST(Forward, MatchesScalarOracle) {
    Rng rng(7);
    for (auto kind : {ArchKind::DNN, ArchKind::RINN}) {
        Architecture arch;
        arch.kind = kind;
        arch.input_dim = 5;
        arch.output_dim = 4;
        arch.hidden_sizes = {6, 3, 4};
        arch.activation = Activation::TANH;
        arch.output_activation = OutputActivation::SIGMOID;
        NetworkModel m = init_model(arch, rng.next_u64());
        const Matrix x = random_matrix(8, 5, rng);
        const Matrix y = predict(m, x);
        for (int r = 0; r < x.rows; ++r) {
            const auto row = oracles::ref_forward_row(
                m, std::vector<double>(x.row(r), x.row(r) + x.cols));
            for (int c = 0; c < 4; ++c)
                ASSERT_NEAR(y(r, c), row[static_cast<std::size_t>(c)], 1e-12);
        }
    }
}

TEST(Forward, RejectsShapeMismatch) {
    NetworkModel m = init_model(rinn_architecture(4, 3, 5), 1);
    Matrix x(2, 7);
    ForwardCache cache;
    EXPECT_THROW(forward(m, x, cache), std::invalid_argument);
}

TEST(Forward, RinnWithZeroInputBlocksEqualsDnn) {
    // A RINN whose redundant blocks are zero computes the DNN of its hidden
    // blocks.
    Rng rng(11);
    Architecture rinn = rinn_architecture(4, 3, 5, 4, Activation::SIGMOID,
                                          OutputActivation::IDENTITY);
    NetworkModel mr = init_model(rinn, 5);
    Architecture dnn = dnn_architecture(4, 3, 5, 4, Activation::SIGMOID,
                                        OutputActivation::IDENTITY);
    NetworkModel md = init_model(dnn, 6);
    for (int i = 0; i < 5; ++i) {
        for (int r = 0; r < md.weights[static_cast<std::size_t>(i)].rows; ++r)
            for (int c = 0; c < md.weights[static_cast<std::size_t>(i)].cols; ++c)
                mr.weights[static_cast<std::size_t>(i)](r, c) =
                    md.weights[static_cast<std::size_t>(i)](r, c);
        if (i >= 1 && i < 4)
            for (int r = 5; r < 5 + 4; ++r)
                for (int c = 0; c < 5; ++c) mr.weights[static_cast<std::size_t>(i)](r, c) = 0.0;
        mr.biases[static_cast<std::size_t>(i)] = md.biases[static_cast<std::size_t>(i)];
    }
    const Matrix x = random_matrix(10, 4, rng);
    const Matrix yr = predict(mr, x);
    const Matrix yd = predict(md, x);
    for (std::size_t i = 0; i < yr.v.size(); ++i) ASSERT_NEAR(yr.v[i], yd.v[i], 1e-12);
}

// ---------------------------------------------------------------------------
// Loss

TEST(Loss, PerfectPredictionIsZero) {
    Architecture arch = dnn_architecture(2, 2, 3, 1);
    NetworkModel m = init_model(arch, 1);
    for (auto& w : m.weights) w.fill(0.0);
    m.biases[1] = {0.7, -0.3};
    Matrix x(4, 2);
    Matrix y(4, 2);
    for (int r = 0; r < 4; ++r) {
        y(r, 0) = 0.7;
        y(r, 1) = -0.3;
    }
    EXPECT_NEAR(prediction_loss(m, x, y, LossKind::MSE), 0.0, 1e-15);
}

TEST(Loss, ZeroNetBalancedTargetsGiveLnTwo) {
    Architecture arch = dnn_architecture(3, 2, 4, 2, Activation::RELU,
                                         OutputActivation::SIGMOID);
    NetworkModel m = init_model(arch, 1);
    for (auto& w : m.weights) w.fill(0.0);
    Matrix x(4, 3);
    Matrix y(4, 2);
    y(0, 0) = 1;
    y(1, 1) = 1;
    y(2, 0) = 1;
    y(3, 1) = 1;  // half the entries are 1
    EXPECT_NEAR(prediction_loss(m, x, y, LossKind::BCE), std::log(2.0), 1e-12);
}

TEST(Loss, L1PenaltyByHand) {
    Architecture arch = dnn_architecture(2, 2, 2, 1, Activation::RELU,
                                         OutputActivation::IDENTITY);
    NetworkModel m = init_model(arch, 1);
    m.weights[0].v = {0.5, -1.5, 2.0, -0.25};
    m.weights[1].v = {1.0, 0.0, -3.0, 0.75};
    const double sum = 0.5 + 1.5 + 2.0 + 0.25 + 1.0 + 0.0 + 3.0 + 0.75;
    Matrix x(1, 2);
    Matrix y(1, 2);
    const double base = prediction_loss(m, x, y, LossKind::MSE);
    EXPECT_NEAR(objective(m, x, y, LossKind::MSE, 0.1) - base, 0.1 * sum, 1e-12);
    EXPECT_NEAR(weight_l1(m), sum, 1e-12);
}

TEST(Loss, BceRejectsNonBinaryTargets) {
    Architecture arch = dnn_architecture(2, 1, 2, 1, Activation::RELU,
                                         OutputActivation::SIGMOID);
    NetworkModel m = init_model(arch, 1);
    Matrix x(1, 2);
    Matrix y(1, 1);
    y(0, 0) = 0.5;
    EXPECT_THROW(prediction_loss(m, x, y, LossKind::BCE), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Backward

TEST(Backward, LinearLayerClosedForm) {
    // Identity first layer (ReLU over positive inputs), so the output
    // matrix gradient is the linear-regression form 2/n X^T (yhat - y).
    Architecture arch = dnn_architecture(3, 1, 3, 1, Activation::RELU,
                                         OutputActivation::IDENTITY);
    NetworkModel m = init_model(arch, 1);
    m.weights[0].fill(0.0);
    for (int i = 0; i < 3; ++i) m.weights[0](i, i) = 1.0;
    Rng rng(3);
    Matrix x = random_matrix(8, 3, rng, 0.1, 1.0);
    Matrix y = random_matrix(8, 1, rng);

    ForwardCache cache;
    forward(m, x, cache);
    Gradients g;
    backward(m, x, y, LossKind::MSE, 0.0, cache, g);

    for (int i = 0; i < 3; ++i) {
        double expect = 0.0;
        for (int r = 0; r < 8; ++r) expect += x(r, i) * (cache.y_hat(r, 0) - y(r, 0));
        expect *= 2.0 / 8.0;
        EXPECT_NEAR(g.w[1](i, 0), expect, 1e-12);
    }
}

TEST(Backward, MatchesFiniteDifferences) {
    // Sweep architecture kinds, losses, and activations on small random
    // nets; exhaustive coverage runs in the acceptance suite.
    struct Case {
        ArchKind kind;
        Activation act;
        LossKind loss;
        OutputActivation out;
    };
    const std::vector<Case> cases{
        {ArchKind::DNN, Activation::RELU, LossKind::MSE, OutputActivation::IDENTITY},
        {ArchKind::DNN, Activation::SIGMOID, LossKind::BCE, OutputActivation::SIGMOID},
        {ArchKind::DNN, Activation::TANH, LossKind::MSE, OutputActivation::SIGMOID},
        {ArchKind::RINN, Activation::RELU, LossKind::MSE, OutputActivation::IDENTITY},
        {ArchKind::RINN, Activation::SIGMOID, LossKind::MSE, OutputActivation::IDENTITY},
        {ArchKind::RINN, Activation::TANH, LossKind::BCE, OutputActivation::SIGMOID},
        {ArchKind::AUTOENCODER, Activation::SIGMOID, LossKind::MSE, OutputActivation::IDENTITY},
        {ArchKind::AUTOENCODER, Activation::TANH, LossKind::BCE, OutputActivation::SIGMOID},
    };
    int case_index = 0;
    for (const auto& c : cases) {
        Architecture arch;
        arch.kind = c.kind;
        arch.input_dim = c.kind == ArchKind::AUTOENCODER ? 4 : 3;
        arch.output_dim = 4;
        arch.hidden_sizes = c.kind == ArchKind::AUTOENCODER ? std::vector<int>{3, 2, 3}
                                                            : std::vector<int>{4, 3};
        arch.activation = c.act;
        arch.output_activation = c.out;

        Rng rng(1000 + static_cast<std::uint64_t>(case_index));
        Matrix x = random_matrix(5, arch.input_dim, rng, 0.1, 1.0);
        Matrix y(5, 4);
        for (auto& v : y.v)
            v = c.loss == LossKind::BCE ? (rng.bernoulli(0.5) ? 1.0 : 0.0) : rng.uniform(-1, 1);

        // Avoid ReLU kinks: redraw the model until pre-activations have a
        // comfortable margin.
        NetworkModel m;
        std::uint64_t seed = 50;
        do {
            m = init_model(arch, seed++);
        } while (c.act == Activation::RELU && min_preactivation(m, x) < 1e-3);

        const double err = fd_relative_error(m, x, y, c.loss, 1e-3);
        EXPECT_LT(err, 1e-4) << "case " << case_index;
        ++case_index;
    }
}

TEST(Backward, ZeroWeightHasZeroL1Subgradient) {
    Architecture arch = dnn_architecture(2, 2, 3, 1);
    NetworkModel m = init_model(arch, 9);
    m.weights[0](1, 1) = 0.0;
    Rng rng(10);
    Matrix x = random_matrix(4, 2, rng, 0.1, 1.0);
    Matrix y = random_matrix(4, 2, rng);

    ForwardCache cache;
    forward(m, x, cache);
    Gradients with_l1;
    Gradients without_l1;
    backward(m, x, y, LossKind::MSE, 0.5, cache, with_l1);
    backward(m, x, y, LossKind::MSE, 0.0, cache, without_l1);
    // The L1 term contributes nothing at the zero weight...
    EXPECT_DOUBLE_EQ(with_l1.w[0](1, 1), without_l1.w[0](1, 1));
    // ...and +/- 0.5 elsewhere.
    EXPECT_NEAR(std::fabs(with_l1.w[0](0, 0) - without_l1.w[0](0, 0)), 0.5, 1e-12);
}

// ---------------------------------------------------------------------------
// Training

TEST(Train, SingleStepMatchesHandUpdate) {
    Architecture arch = dnn_architecture(3, 2, 3, 1);
    Rng rng(21);
    Matrix x = random_matrix(6, 3, rng, 0.1, 1.0);
    Matrix y = random_matrix(6, 2, rng);

    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.l1_rate = 0.01;
    cfg.batch_size = 6;  // one batch
    cfg.max_epochs = 1;
    cfg.patience = 5;
    cfg.loss = LossKind::MSE;
    cfg.seed = 33;

    const std::vector<int> train_idx{0, 1, 2, 3};
    const std::vector<int> val_idx{4, 5};
    const NetworkModel trained = train(arch, x, y, train_idx, val_idx, cfg);

    // Recompute the single step by hand from the same initialization.
    NetworkModel m = init_model(arch, cfg.seed);
    Matrix xb(4, 3);
    Matrix yb(4, 2);
    Rng shuffle_rng(substream(cfg.seed, "epochs"));
    std::vector<int> order = train_idx;
    shuffle_rng.shuffle(order);
    for (int r = 0; r < 4; ++r) {
        std::copy(x.row(order[static_cast<std::size_t>(r)]),
                  x.row(order[static_cast<std::size_t>(r)]) + 3, xb.row(r));
        std::copy(y.row(order[static_cast<std::size_t>(r)]),
                  y.row(order[static_cast<std::size_t>(r)]) + 2, yb.row(r));
    }
    ForwardCache cache;
    forward(m, xb, cache);
    Gradients g;
    backward(m, xb, yb, cfg.loss, cfg.l1_rate, cache, g);
    for (std::size_t i = 0; i < m.weights.size(); ++i)
        for (std::size_t k = 0; k < m.weights[i].v.size(); ++k)
            ASSERT_NEAR(trained.weights[i].v[k],
                        m.weights[i].v[k] - cfg.learning_rate * g.w[i].v[k], 1e-12);
}

TEST(Train, HugeL1DrivesWeightsToZero) {
    const CausalDag dag = canonical_dag();
    const Dataset ds = gen_interventional(dag, 200, 0.1, 5);
    const SplitPlan plan = make_splits(200, 5);

    Architecture arch = rinn_architecture(16, 16, 4, 2);
    TrainConfig cfg;
    cfg.learning_rate = 2e-4;
    cfg.l1_rate = 10.0;
    cfg.max_epochs = 600;
    cfg.patience = 600;
    cfg.loss = LossKind::MSE;
    cfg.seed = 3;
    const NetworkModel m = train(arch, ds.X, ds.Y, plan.folds[0].train, plan.folds[0].val, cfg);
    EXPECT_LT(weight_l1(m), 1.0);
}

TEST(Train, DivergenceThrows) {
    const CausalDag dag = canonical_dag();
    const Dataset ds = gen_interventional(dag, 100, 0.1, 5);
    const SplitPlan plan = make_splits(100, 5);
    Architecture arch = rinn_architecture(16, 16, 16, 4);
    TrainConfig cfg;
    cfg.learning_rate = 1e4;  // blows up immediately
    cfg.max_epochs = 50;
    cfg.loss = LossKind::MSE;
    cfg.seed = 3;
    EXPECT_THROW(train(arch, ds.X, ds.Y, plan.folds[0].train, plan.folds[0].val, cfg),
                 TrainingDiverged);
}

TEST(Train, DeterministicGivenSeed) {
    const CausalDag dag = canonical_dag();
    const Dataset ds = gen_interventional(dag, 300, 0.1, 5);
    const SplitPlan plan = make_splits(300, 5);
    Architecture arch = rinn_architecture(16, 16, 8, 4);
    TrainConfig cfg;
    cfg.learning_rate = 0.02;
    cfg.l1_rate = 1e-3;
    cfg.max_epochs = 20;
    cfg.patience = 20;
    cfg.loss = LossKind::MSE;
    cfg.seed = 8;
    const NetworkModel a = train(arch, ds.X, ds.Y, plan.folds[0].train, plan.folds[0].val, cfg);
    const NetworkModel b = train(arch, ds.X, ds.Y, plan.folds[0].train, plan.folds[0].val, cfg);
    for (std::size_t i = 0; i < a.weights.size(); ++i) ASSERT_EQ(a.weights[i], b.weights[i]);
    EXPECT_EQ(a.record.best_epoch, b.record.best_epoch);
}

TEST(Train, MonotoneL1Sweep) {
    const CausalDag dag = canonical_dag();
    const Dataset ds = gen_interventional(dag, 500, 0.1, 5);
    const SplitPlan plan = make_splits(500, 5);
    Architecture arch = rinn_architecture(16, 16, 8, 4);
    double prev = std::numeric_limits<double>::infinity();
    for (double l1 : {1e-4, 1e-2, 1.0}) {
        TrainConfig cfg;
        cfg.learning_rate = 0.02;
        cfg.l1_rate = l1;
        cfg.max_epochs = 80;
        cfg.patience = 80;
        cfg.loss = LossKind::MSE;
        cfg.seed = 8;
        const NetworkModel m =
            train(arch, ds.X, ds.Y, plan.folds[0].train, plan.folds[0].val, cfg);
        const double sum = weight_l1(m);
        EXPECT_LE(sum, prev + 1e-9) << "l1 " << l1;
        prev = sum;
    }
}

TEST(Train, TunedRinnFitsInterventionalData) {
    // Dataset-1-style check at reduced scale: a tuned RINN drives
    // validation MSE to near zero on noise-free interventional data.
    const CausalDag dag = canonical_dag();
    const Dataset ds = gen_interventional(dag, 2000, 0.1, 5);
    const SplitPlan plan = make_splits(2000, 5);
    Architecture arch = rinn_architecture(16, 16, 16, 8);
    TrainConfig cfg;
    cfg.learning_rate = 0.03;
    cfg.l1_rate = 3e-5;
    cfg.max_epochs = 800;
    cfg.patience = 120;
    cfg.loss = LossKind::MSE;
    cfg.seed = 4;
    const NetworkModel m = train(arch, ds.X, ds.Y, plan.folds[0].train, plan.folds[0].val, cfg);
    EXPECT_LE(m.record.best_val_loss, 0.01);
}

// ---------------------------------------------------------------------------
// Autoencoder

TEST(Autoencoder, ValidatesMirroredSizes) {
    Architecture bad;
    bad.kind = ArchKind::AUTOENCODER;
    bad.input_dim = 8;
    bad.output_dim = 8;
    bad.hidden_sizes = {6, 4};  // even count: no bottleneck
    EXPECT_THROW(bad.validate(), std::invalid_argument);

    bad.hidden_sizes = {4, 6, 4};  // increases into the middle
    EXPECT_THROW(bad.validate(), std::invalid_argument);

    const Architecture good = autoencoder_architecture(8, {6, 3});
    EXPECT_EQ(good.hidden_sizes, (std::vector<int>{6, 3, 6}));
    good.validate();
}

TEST(Autoencoder, DecoderTagAndMirrorCounts) {
    const Architecture arch = autoencoder_architecture(8, {6, 3}, Activation::RELU,
                                                       OutputActivation::IDENTITY);
    const NetworkModel m = init_model(arch, 1);
    EXPECT_EQ(m.decoder_start, 1);  // bottleneck layer index
    // Encoder layer count equals decoder layer count (weights 0,1 vs 2,3).
    EXPECT_EQ(m.weights.size(), 4u);
    EXPECT_EQ(m.weights[1].cols, 3);
    EXPECT_EQ(m.weights[2].rows, 3);
}

TEST(Autoencoder, BottleneckReconstructsLinearData) {
    // Rank-3 nonnegative data is exactly representable through a width-3
    // ReLU bottleneck, so the reconstruction error collapses.
    Rng rng(31);
    const Matrix z = random_matrix(300, 3, rng, 0.0, 1.0);
    const Matrix basis = random_matrix(3, 6, rng, 0.2, 1.0);
    Matrix y;
    matmul(z, basis, y);
    // tanh rather than ReLU: at this tiny width a ReLU bottleneck can die
    // outright and stall at the mean predictor.
    const Architecture arch = autoencoder_architecture(6, {3}, Activation::TANH,
                                                       OutputActivation::IDENTITY);
    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.l1_rate = 0.0;
    cfg.max_epochs = 3000;
    cfg.patience = 600;
    cfg.loss = LossKind::MSE;
    cfg.seed = 11;
    std::vector<int> train_idx;
    std::vector<int> val_idx;
    for (int i = 0; i < 250; ++i) train_idx.push_back(i);
    for (int i = 250; i < 300; ++i) val_idx.push_back(i);
    const NetworkModel m = train_autoencoder(arch, y, train_idx, val_idx, cfg);
    EXPECT_LT(m.record.best_val_loss, 0.01);
}

TEST(Autoencoder, PretrainingPathRuns) {
    Rng rng(32);
    Matrix y = random_matrix(200, 8, rng, 0.0, 1.0);
    const Architecture arch = autoencoder_architecture(8, {6, 3}, Activation::SIGMOID,
                                                       OutputActivation::IDENTITY);
    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.l1_rate = 1e-4;
    cfg.max_epochs = 30;
    cfg.patience = 30;
    cfg.loss = LossKind::MSE;
    cfg.seed = 12;
    std::vector<int> train_idx;
    std::vector<int> val_idx;
    for (int i = 0; i < 160; ++i) train_idx.push_back(i);
    for (int i = 160; i < 200; ++i) val_idx.push_back(i);
    const NetworkModel m = train_autoencoder(arch, y, train_idx, val_idx, cfg, true);
    EXPECT_TRUE(std::isfinite(m.record.best_val_loss));
    EXPECT_EQ(m.decoder_start, 1);
}

// ---------------------------------------------------------------------------
// Serialization

TEST(ModelIo, RoundTripBitExact) {
    const Architecture arch = rinn_architecture(5, 4, 6, 3, Activation::TANH,
                                                OutputActivation::SIGMOID);
    NetworkModel m = init_model(arch, 77);
    m.record.epochs_run = 12;
    m.record.best_epoch = 9;
    m.record.best_val_loss = 0.123456789012345678;
    m.record.weight_l1 = weight_l1(m);
    const auto path = std::filesystem::temp_directory_path() / "rinnlab_model_test.json";
    save_model(m, path.string());
    const NetworkModel back = load_model(path.string());
    EXPECT_EQ(back.arch.kind, ArchKind::RINN);
    EXPECT_EQ(back.arch.hidden_sizes, m.arch.hidden_sizes);
    for (std::size_t i = 0; i < m.weights.size(); ++i) {
        ASSERT_EQ(back.weights[i].rows, m.weights[i].rows);
        ASSERT_EQ(back.weights[i].v, m.weights[i].v);  // bit-exact doubles
        ASSERT_EQ(back.biases[i], m.biases[i]);
    }
    EXPECT_EQ(back.record.best_epoch, 9);
    std::filesystem::remove(path);
}

TEST(ModelIo, RejectsForeignJson) {
    EXPECT_THROW(model_from_json(nlohmann::json{{"format", "something-else"}}),
                 std::invalid_argument);
}
