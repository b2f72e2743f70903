#pragma once

// Dense feedforward models with manual backpropagation and an L1-regularized
// objective. Three architectures share the machinery:
//
//   DNN          h_i = phi(h_{i-1} W_i + b_i)
//   RINN         h_i = phi([h_{i-1}, x] W_i + b_i)  for i > 1; the raw input
//                is concatenated onto every hidden activation, so each W_i
//                after the first stacks a hidden block on top of a
//                redundant-input block. The output layer reads the last
//                hidden activation only.
//   AUTOENCODER  a DNN with mirrored hidden sizes trained to reconstruct its
//                input; the decoder half (bottleneck onward) is tagged for
//                structure evaluation.
//
// Training is plain mini-batch SGD with per-epoch seeded shuffling, early
// stopping on validation loss, and the model returned at the best epoch.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rinnlab/io.hpp"
#include "rinnlab/matrix.hpp"
#include "rinnlab/rng.hpp"

namespace rinnlab {

enum class ArchKind { DNN, RINN, AUTOENCODER };
enum class Activation { RELU, SIGMOID, TANH };
enum class OutputActivation { SIGMOID, IDENTITY };
enum class LossKind { BCE, MSE };

inline const char* arch_kind_name(ArchKind k) {
    switch (k) {
        case ArchKind::DNN: return "DNN";
        case ArchKind::RINN: return "RINN";
        default: return "AUTOENCODER";
    }
}
inline ArchKind parse_arch_kind(const std::string& s) {
    if (s == "DNN") return ArchKind::DNN;
    if (s == "RINN") return ArchKind::RINN;
    if (s == "AUTOENCODER") return ArchKind::AUTOENCODER;
    throw std::invalid_argument("unknown architecture kind " + s);
}
inline const char* activation_name(Activation a) {
    switch (a) {
        case Activation::RELU: return "RELU";
        case Activation::SIGMOID: return "SIGMOID";
        default: return "TANH";
    }
}
inline Activation parse_activation(const std::string& s) {
    if (s == "RELU") return Activation::RELU;
    if (s == "SIGMOID") return Activation::SIGMOID;
    if (s == "TANH") return Activation::TANH;
    throw std::invalid_argument("unknown activation " + s);
}
inline const char* output_activation_name(OutputActivation a) {
    return a == OutputActivation::SIGMOID ? "SIGMOID" : "IDENTITY";
}
inline OutputActivation parse_output_activation(const std::string& s) {
    if (s == "SIGMOID") return OutputActivation::SIGMOID;
    if (s == "IDENTITY") return OutputActivation::IDENTITY;
    throw std::invalid_argument("unknown output activation " + s);
}
inline const char* loss_kind_name(LossKind k) { return k == LossKind::BCE ? "BCE" : "MSE"; }
inline LossKind parse_loss_kind(const std::string& s) {
    if (s == "BCE") return LossKind::BCE;
    if (s == "MSE") return LossKind::MSE;
    throw std::invalid_argument("unknown loss kind " + s);
}

struct Architecture {
    ArchKind kind = ArchKind::DNN;
    int input_dim = 0;
    int output_dim = 0;
    std::vector<int> hidden_sizes;
    Activation activation = Activation::RELU;
    OutputActivation output_activation = OutputActivation::IDENTITY;

    int depth() const { return static_cast<int>(hidden_sizes.size()); }

    void validate() const {
        if (input_dim <= 0 || output_dim <= 0)
            throw std::invalid_argument("architecture: dimensions must be positive");
        if (hidden_sizes.empty())
            throw std::invalid_argument("architecture: at least one hidden layer required");
        for (int h : hidden_sizes)
            if (h <= 0) throw std::invalid_argument("architecture: hidden sizes must be positive");
        if (kind == ArchKind::AUTOENCODER) {
            if (input_dim != output_dim)
                throw std::invalid_argument("autoencoder: input and output dimensions must match");
            if (depth() % 2 == 0)
                throw std::invalid_argument(
                    "autoencoder: hidden sizes must decrease to a bottleneck then mirror");
            const int mid = depth() / 2;
            for (int i = 0; i < mid; ++i) {
                if (hidden_sizes[static_cast<std::size_t>(i)] <=
                    hidden_sizes[static_cast<std::size_t>(i + 1)])
                    throw std::invalid_argument("autoencoder: sizes must strictly decrease");
                if (hidden_sizes[static_cast<std::size_t>(i)] !=
                    hidden_sizes[static_cast<std::size_t>(depth() - 1 - i)])
                    throw std::invalid_argument("autoencoder: sizes must mirror");
            }
        }
    }

    // Rows of weight matrix i (hidden block plus redundant-input block for
    // RINN layers past the first; the output matrix has no input block).
    int weight_rows(int i) const {
        if (i == 0) return input_dim;
        const int prev = hidden_sizes[static_cast<std::size_t>(i - 1)];
        if (kind == ArchKind::RINN && i < depth()) return prev + input_dim;
        return prev;
    }
    int weight_cols(int i) const {
        return i < depth() ? hidden_sizes[static_cast<std::size_t>(i)] : output_dim;
    }
    int weight_count() const { return depth() + 1; }
};

// RINN with the default eight hidden layers of equal width.
inline Architecture rinn_architecture(int input_dim, int output_dim, int hidden, int layers = 8,
                                      Activation act = Activation::RELU,
                                      OutputActivation out = OutputActivation::IDENTITY) {
    Architecture a;
    a.kind = ArchKind::RINN;
    a.input_dim = input_dim;
    a.output_dim = output_dim;
    a.hidden_sizes.assign(static_cast<std::size_t>(layers), hidden);
    a.activation = act;
    a.output_activation = out;
    return a;
}

inline Architecture dnn_architecture(int input_dim, int output_dim, int hidden, int layers,
                                     Activation act = Activation::RELU,
                                     OutputActivation out = OutputActivation::IDENTITY) {
    Architecture a;
    a.kind = ArchKind::DNN;
    a.input_dim = input_dim;
    a.output_dim = output_dim;
    a.hidden_sizes.assign(static_cast<std::size_t>(layers), hidden);
    a.activation = act;
    a.output_activation = out;
    return a;
}

// Mirrors the encoder sizes (bottleneck last) into a full autoencoder.
inline Architecture autoencoder_architecture(int dim, const std::vector<int>& encoder_sizes,
                                             Activation act = Activation::RELU,
                                             OutputActivation out = OutputActivation::SIGMOID) {
    Architecture a;
    a.kind = ArchKind::AUTOENCODER;
    a.input_dim = dim;
    a.output_dim = dim;
    a.hidden_sizes = encoder_sizes;
    for (int i = static_cast<int>(encoder_sizes.size()) - 2; i >= 0; --i)
        a.hidden_sizes.push_back(encoder_sizes[static_cast<std::size_t>(i)]);
    a.activation = act;
    a.output_activation = out;
    return a;
}

struct TrainRecord {
    int epochs_run = 0;
    int best_epoch = -1;
    double best_val_loss = 0.0;
    double final_train_loss = 0.0;
    double weight_l1 = 0.0;
};

struct NetworkModel {
    Architecture arch;
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
    std::uint64_t seed = 0;
    int decoder_start = -1;  // bottleneck hidden-layer index; autoencoders only
    TrainRecord record;

    void validate_shapes() const {
        arch.validate();
        if (static_cast<int>(weights.size()) != arch.weight_count() ||
            weights.size() != biases.size())
            throw std::invalid_argument("model: weight/bias count mismatch");
        for (int i = 0; i < arch.weight_count(); ++i) {
            if (weights[static_cast<std::size_t>(i)].rows != arch.weight_rows(i) ||
                weights[static_cast<std::size_t>(i)].cols != arch.weight_cols(i))
                throw std::invalid_argument("model: weight matrix " + std::to_string(i) +
                                            " has wrong shape");
            if (static_cast<int>(biases[static_cast<std::size_t>(i)].size()) !=
                arch.weight_cols(i))
                throw std::invalid_argument("model: bias vector " + std::to_string(i) +
                                            " has wrong length");
        }
    }
};

inline double weight_l1(const NetworkModel& m) {
    double s = 0.0;
    for (const auto& w : m.weights) s += sum_abs(w);
    return s;
}

struct TrainConfig {
    double learning_rate = 0.01;
    double l1_rate = 0.0;
    int batch_size = 64;
    int max_epochs = 2000;
    int patience = 50;
    LossKind loss = LossKind::MSE;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(learning_rate > 0)) throw std::invalid_argument("learning_rate must be positive");
        if (l1_rate < 0) throw std::invalid_argument("l1_rate must be nonnegative");
        if (batch_size <= 0 || max_epochs <= 0 || patience <= 0)
            throw std::invalid_argument("batch_size, max_epochs, patience must be positive");
    }
};

class TrainingDiverged : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Forward / loss / backward

namespace detail {

inline void apply_activation(Activation act, const Matrix& z, Matrix& h) {
    h.rows = z.rows;
    h.cols = z.cols;
    h.v.resize(z.v.size());
    switch (act) {
        case Activation::RELU:
            for (std::size_t i = 0; i < z.v.size(); ++i) h.v[i] = z.v[i] > 0 ? z.v[i] : 0.0;
            break;
        case Activation::SIGMOID:
            for (std::size_t i = 0; i < z.v.size(); ++i) h.v[i] = 1.0 / (1.0 + std::exp(-z.v[i]));
            break;
        case Activation::TANH:
            for (std::size_t i = 0; i < z.v.size(); ++i) h.v[i] = std::tanh(z.v[i]);
            break;
    }
}

// d ⊙= phi'(z) expressed through z and h = phi(z).
inline void apply_activation_grad(Activation act, const Matrix& z, const Matrix& h, Matrix& d) {
    switch (act) {
        case Activation::RELU:
            for (std::size_t i = 0; i < d.v.size(); ++i)
                if (z.v[i] <= 0) d.v[i] = 0.0;
            break;
        case Activation::SIGMOID:
            for (std::size_t i = 0; i < d.v.size(); ++i) d.v[i] *= h.v[i] * (1.0 - h.v[i]);
            break;
        case Activation::TANH:
            for (std::size_t i = 0; i < d.v.size(); ++i) d.v[i] *= 1.0 - h.v[i] * h.v[i];
            break;
    }
}

inline void add_bias_rows(Matrix& z, const std::vector<double>& b) {
    for (int r = 0; r < z.rows; ++r) {
        double* zr = z.row(r);
        for (int c = 0; c < z.cols; ++c) zr[c] += b[static_cast<std::size_t>(c)];
    }
}

inline double softplus(double x) {
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace detail

// Per-layer activations kept for the backward pass.
struct ForwardCache {
    std::vector<Matrix> z;  // pre-activations per hidden layer
    std::vector<Matrix> h;  // activations per hidden layer
    Matrix z_out;
    Matrix y_hat;
};

inline void forward(const NetworkModel& m, const Matrix& x, ForwardCache& cache) {
    const Architecture& a = m.arch;
    if (x.cols != a.input_dim)
        throw std::invalid_argument("forward: input has " + std::to_string(x.cols) +
                                    " columns, architecture expects " +
                                    std::to_string(a.input_dim));
    const int L = a.depth();
    cache.z.resize(static_cast<std::size_t>(L));
    cache.h.resize(static_cast<std::size_t>(L));

    for (int i = 0; i < L; ++i) {
        Matrix& z = cache.z[static_cast<std::size_t>(i)];
        z.rows = x.rows;
        z.cols = a.hidden_sizes[static_cast<std::size_t>(i)];
        z.v.assign(static_cast<std::size_t>(z.rows) * z.cols, 0.0);
        const Matrix& w = m.weights[static_cast<std::size_t>(i)];
        if (i == 0) {
            matmul_acc_rows(x, w, 0, z);
        } else {
            const Matrix& prev = cache.h[static_cast<std::size_t>(i - 1)];
            matmul_acc_rows(prev, w, 0, z);
            if (a.kind == ArchKind::RINN) matmul_acc_rows(x, w, prev.cols, z);
        }
        detail::add_bias_rows(z, m.biases[static_cast<std::size_t>(i)]);
        detail::apply_activation(a.activation, z, cache.h[static_cast<std::size_t>(i)]);
    }

    Matrix& zo = cache.z_out;
    zo.rows = x.rows;
    zo.cols = a.output_dim;
    zo.v.assign(static_cast<std::size_t>(zo.rows) * zo.cols, 0.0);
    matmul_acc_rows(cache.h[static_cast<std::size_t>(L - 1)], m.weights[static_cast<std::size_t>(L)],
                    0, zo);
    detail::add_bias_rows(zo, m.biases[static_cast<std::size_t>(L)]);
    if (a.output_activation == OutputActivation::SIGMOID) {
        detail::apply_activation(Activation::SIGMOID, zo, cache.y_hat);
    } else {
        cache.y_hat = zo;
    }
}

inline Matrix predict(const NetworkModel& m, const Matrix& x) {
    ForwardCache cache;
    forward(m, x, cache);
    return cache.y_hat;
}

// Prediction loss only (no regularization): BCE or MSE averaged over every
// (sample, output) entry. BCE is evaluated from logits for stability and
// requires binary targets and a sigmoid output.
inline double prediction_loss_from_cache(const NetworkModel& m, const ForwardCache& cache,
                                         const Matrix& y, LossKind kind) {
    const std::size_t count = y.v.size();
    if (count == 0) return 0.0;
    double acc = 0.0;
    if (kind == LossKind::MSE) {
        for (std::size_t i = 0; i < count; ++i) {
            const double r = cache.y_hat.v[i] - y.v[i];
            acc += r * r;
        }
    } else {
        if (m.arch.output_activation != OutputActivation::SIGMOID)
            throw std::invalid_argument("BCE loss requires a sigmoid output");
        for (std::size_t i = 0; i < count; ++i) {
            const double t = y.v[i];
            if (t != 0.0 && t != 1.0)
                throw std::invalid_argument("BCE loss requires binary targets");
            acc += detail::softplus(cache.z_out.v[i]) - t * cache.z_out.v[i];
        }
    }
    return acc / static_cast<double>(count);
}

inline double prediction_loss(const NetworkModel& m, const Matrix& x, const Matrix& y,
                              LossKind kind) {
    ForwardCache cache;
    forward(m, x, cache);
    return prediction_loss_from_cache(m, cache, y, kind);
}

// Full training objective: prediction loss plus l1_rate * sum |w|.
inline double objective(const NetworkModel& m, const Matrix& x, const Matrix& y,
                        LossKind kind, double l1_rate) {
    return prediction_loss(m, x, y, kind) + l1_rate * weight_l1(m);
}

struct Gradients {
    std::vector<Matrix> w;
    std::vector<std::vector<double>> b;

    void reset(const Architecture& a) {
        w.resize(static_cast<std::size_t>(a.weight_count()));
        b.resize(static_cast<std::size_t>(a.weight_count()));
        for (int i = 0; i < a.weight_count(); ++i) {
            auto& wi = w[static_cast<std::size_t>(i)];
            wi.rows = a.weight_rows(i);
            wi.cols = a.weight_cols(i);
            wi.v.assign(static_cast<std::size_t>(wi.rows) * wi.cols, 0.0);
            b[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(a.weight_cols(i)), 0.0);
        }
    }
};

// Exact reverse-mode gradients of the batch objective, including the L1
// subgradient (sign(w), zero at w = 0). Requires the cache from forward().
inline void backward(const NetworkModel& m, const Matrix& x, const Matrix& y,
                     LossKind kind, double l1_rate, const ForwardCache& cache, Gradients& g) {
    const Architecture& a = m.arch;
    const int L = a.depth();
    const double scale = 1.0 / static_cast<double>(y.v.size());
    g.reset(a);

    // Delta at the output pre-activation.
    Matrix d(y.rows, y.cols);
    if (kind == LossKind::MSE) {
        if (a.output_activation == OutputActivation::SIGMOID) {
            for (std::size_t i = 0; i < y.v.size(); ++i) {
                const double yh = cache.y_hat.v[i];
                d.v[i] = 2.0 * (yh - y.v[i]) * yh * (1.0 - yh) * scale;
            }
        } else {
            for (std::size_t i = 0; i < y.v.size(); ++i)
                d.v[i] = 2.0 * (cache.y_hat.v[i] - y.v[i]) * scale;
        }
    } else {
        if (a.output_activation != OutputActivation::SIGMOID)
            throw std::invalid_argument("BCE loss requires a sigmoid output");
        for (std::size_t i = 0; i < y.v.size(); ++i)
            d.v[i] = (cache.y_hat.v[i] - y.v[i]) * scale;
    }

    matmul_at_b_acc_rows(cache.h[static_cast<std::size_t>(L - 1)], d,
                         g.w[static_cast<std::size_t>(L)], 0);
    colsum_acc(d, g.b[static_cast<std::size_t>(L)]);

    Matrix dprev;
    for (int i = L - 1; i >= 0; --i) {
        const int width = a.hidden_sizes[static_cast<std::size_t>(i)];
        dprev.rows = x.rows;
        dprev.cols = width;
        dprev.v.resize(static_cast<std::size_t>(x.rows) * width);
        matmul_a_bt_rows(d, m.weights[static_cast<std::size_t>(i + 1)], 0, width, dprev);
        std::swap(d, dprev);
        detail::apply_activation_grad(a.activation, cache.z[static_cast<std::size_t>(i)],
                                      cache.h[static_cast<std::size_t>(i)], d);
        if (i == 0) {
            matmul_at_b_acc_rows(x, d, g.w[0], 0);
        } else {
            const Matrix& prev = cache.h[static_cast<std::size_t>(i - 1)];
            matmul_at_b_acc_rows(prev, d, g.w[static_cast<std::size_t>(i)], 0);
            if (a.kind == ArchKind::RINN)
                matmul_at_b_acc_rows(x, d, g.w[static_cast<std::size_t>(i)], prev.cols);
        }
        colsum_acc(d, g.b[static_cast<std::size_t>(i)]);
    }

    if (l1_rate > 0) {
        for (int i = 0; i <= L; ++i) {
            const auto& w = m.weights[static_cast<std::size_t>(i)];
            auto& gw = g.w[static_cast<std::size_t>(i)];
            for (std::size_t k = 0; k < w.v.size(); ++k) {
                if (w.v[k] > 0)
                    gw.v[k] += l1_rate;
                else if (w.v[k] < 0)
                    gw.v[k] -= l1_rate;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Initialization and training

inline NetworkModel init_model(const Architecture& arch, std::uint64_t seed) {
    arch.validate();
    NetworkModel m;
    m.arch = arch;
    m.seed = seed;
    if (arch.kind == ArchKind::AUTOENCODER) m.decoder_start = arch.depth() / 2;
    Rng rng(substream(seed, "init"));
    for (int i = 0; i < arch.weight_count(); ++i) {
        const int rows = arch.weight_rows(i);
        const int cols = arch.weight_cols(i);
        Matrix w(rows, cols);
        const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
        for (auto& x : w.v) x = rng.uniform(-limit, limit);
        m.weights.push_back(std::move(w));
        m.biases.emplace_back(static_cast<std::size_t>(cols), 0.0);
    }
    return m;
}

namespace detail {

inline void gather_rows(const Matrix& src, const std::vector<int>& idx, int first, int count,
                        Matrix& dst) {
    dst.rows = count;
    dst.cols = src.cols;
    dst.v.resize(static_cast<std::size_t>(count) * src.cols);
    for (int r = 0; r < count; ++r) {
        const double* s = src.row(idx[static_cast<std::size_t>(first + r)]);
        std::copy(s, s + src.cols, dst.row(r));
    }
}

// Prediction loss over the given rows, evaluated in chunks.
inline double eval_loss(const NetworkModel& m, const Matrix& x, const Matrix& y,
                        const std::vector<int>& idx, LossKind kind) {
    if (idx.empty()) return 0.0;
    constexpr int kChunk = 512;
    ForwardCache cache;
    Matrix xb;
    Matrix yb;
    double acc = 0.0;
    for (int first = 0; first < static_cast<int>(idx.size()); first += kChunk) {
        const int count = std::min(kChunk, static_cast<int>(idx.size()) - first);
        gather_rows(x, idx, first, count, xb);
        gather_rows(y, idx, first, count, yb);
        forward(m, xb, cache);
        acc += prediction_loss_from_cache(m, cache, yb, kind) *
               static_cast<double>(yb.v.size());
    }
    return acc / (static_cast<double>(idx.size()) * static_cast<double>(y.cols));
}

inline void sgd_step(NetworkModel& m, const Gradients& g, double lr) {
    for (std::size_t i = 0; i < m.weights.size(); ++i) {
        auto& w = m.weights[i].v;
        const auto& gw = g.w[i].v;
        for (std::size_t k = 0; k < w.size(); ++k) w[k] -= lr * gw[k];
        auto& b = m.biases[i];
        const auto& gb = g.b[i];
        for (std::size_t k = 0; k < b.size(); ++k) b[k] -= lr * gb[k];
    }
}

inline NetworkModel train_from(NetworkModel model, const Matrix& x, const Matrix& y,
                               const std::vector<int>& train_idx,
                               const std::vector<int>& val_idx, const TrainConfig& config) {
    config.validate();
    if (train_idx.empty() || val_idx.empty())
        throw std::invalid_argument("train: empty train or validation split");

    NetworkModel best = model;
    TrainRecord rec;
    double best_val = std::numeric_limits<double>::infinity();

    Rng shuffle_rng(substream(config.seed, "epochs"));
    std::vector<int> order = train_idx;
    ForwardCache cache;
    Gradients grads;
    Matrix xb;
    Matrix yb;

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double train_acc = 0.0;
        for (int first = 0; first < static_cast<int>(order.size()); first += config.batch_size) {
            const int count =
                std::min(config.batch_size, static_cast<int>(order.size()) - first);
            gather_rows(x, order, first, count, xb);
            gather_rows(y, order, first, count, yb);
            forward(model, xb, cache);
            const double batch_loss = prediction_loss_from_cache(model, cache, yb, config.loss);
            if (!std::isfinite(batch_loss))
                throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch) +
                                       ": non-finite batch loss");
            train_acc += batch_loss * static_cast<double>(yb.v.size());
            backward(model, xb, yb, config.loss, config.l1_rate, cache, grads);
            sgd_step(model, grads, config.learning_rate);
        }
        rec.final_train_loss = train_acc / (static_cast<double>(order.size()) *
                                            static_cast<double>(y.cols));
        rec.epochs_run = epoch + 1;

        const double val_loss = eval_loss(model, x, y, val_idx, config.loss);
        if (!std::isfinite(val_loss))
            throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch) +
                                   ": non-finite validation loss");
        if (val_loss < best_val) {
            best_val = val_loss;
            rec.best_val_loss = val_loss;
            rec.best_epoch = epoch;
            best = model;
        } else if (epoch - rec.best_epoch >= config.patience) {
            break;
        }
    }

    best.seed = config.seed;
    rec.weight_l1 = weight_l1(best);
    best.record = rec;
    return best;
}

inline NetworkModel train_matrices(const Architecture& arch, const Matrix& x, const Matrix& y,
                                   const std::vector<int>& train_idx,
                                   const std::vector<int>& val_idx, const TrainConfig& config) {
    return train_from(init_model(arch, config.seed), x, y, train_idx, val_idx, config);
}

}  // namespace detail

// Supervised training on a dataset split. The returned model is the one with
// the lowest validation prediction loss (the L1 term enters the gradients
// but not the validation metric).
inline NetworkModel train(const Architecture& arch, const Matrix& x, const Matrix& y,
                          const std::vector<int>& train_idx, const std::vector<int>& val_idx,
                          const TrainConfig& config) {
    if (arch.kind == ArchKind::AUTOENCODER)
        throw std::invalid_argument("train: use train_autoencoder for AUTOENCODER models");
    return detail::train_matrices(arch, x, y, train_idx, val_idx, config);
}

// Unsupervised reconstruction training on the output matrix only (y -> y).
// Optional greedy layerwise pretraining initializes each encoder/decoder
// pair from a one-hidden-layer denoising autoencoder before finetuning
// end-to-end with the L1 objective.
inline NetworkModel train_autoencoder(const Architecture& arch, const Matrix& y,
                                      const std::vector<int>& train_idx,
                                      const std::vector<int>& val_idx, const TrainConfig& config,
                                      bool pretrain = false) {
    if (arch.kind != ArchKind::AUTOENCODER)
        throw std::invalid_argument("train_autoencoder: architecture must be AUTOENCODER");
    arch.validate();
    if (!pretrain) return detail::train_matrices(arch, y, y, train_idx, val_idx, config);

    // Greedy pretraining: learn level-by-level reconstructions.
    const int bottleneck = arch.depth() / 2;
    NetworkModel model = init_model(arch, config.seed);
    Matrix rep;  // current representation of the training rows
    detail::gather_rows(y, train_idx, 0, static_cast<int>(train_idx.size()), rep);
    Rng noise_rng(substream(config.seed, "pretrain-noise"));

    for (int level = 0; level <= bottleneck; ++level) {
        Architecture sub;
        sub.kind = ArchKind::AUTOENCODER;
        sub.input_dim = rep.cols;
        sub.output_dim = rep.cols;
        sub.hidden_sizes = {arch.hidden_sizes[static_cast<std::size_t>(level)]};
        sub.activation = arch.activation;
        sub.output_activation = OutputActivation::IDENTITY;

        // Masking noise on the inputs; clean targets.
        Matrix corrupted = rep;
        for (auto& v : corrupted.v)
            if (noise_rng.bernoulli(0.1)) v = 0.0;

        TrainConfig sub_cfg = config;
        sub_cfg.loss = LossKind::MSE;
        sub_cfg.l1_rate = 0.0;
        sub_cfg.max_epochs = std::min(config.max_epochs, 50);
        sub_cfg.patience = 10;
        sub_cfg.seed = substream(config.seed, static_cast<std::uint64_t>(7000 + level));
        std::vector<int> all(static_cast<std::size_t>(rep.rows));
        for (int i = 0; i < rep.rows; ++i) all[static_cast<std::size_t>(i)] = i;
        const std::vector<int> sub_val(all.end() - std::max(1, rep.rows / 10), all.end());
        const std::vector<int> sub_train(all.begin(), all.end() - std::max(1, rep.rows / 10));
        NetworkModel sub_model;
        {
            // Train the one-level autoencoder on (corrupted -> clean).
            Architecture plain = sub;
            sub_model = detail::train_matrices(plain, corrupted, rep, sub_train, sub_val, sub_cfg);
        }

        model.weights[static_cast<std::size_t>(level)] = sub_model.weights[0];
        model.biases[static_cast<std::size_t>(level)] = sub_model.biases[0];
        const int mirror = arch.depth() - level;  // weight feeding the mirrored layer
        model.weights[static_cast<std::size_t>(mirror)] = sub_model.weights[1];
        model.biases[static_cast<std::size_t>(mirror)] = sub_model.biases[1];

        // Advance the representation through the freshly trained encoder.
        ForwardCache cache;
        forward(sub_model, rep, cache);
        rep = cache.h[0];
    }

    // Finetune end-to-end with L1 from the pretrained weights.
    return detail::train_from(std::move(model), y, y, train_idx, val_idx, config);
}

// ---------------------------------------------------------------------------
// Serialization: versioned JSON, bit-exact round trip for doubles.

inline nlohmann::json model_to_json(const NetworkModel& m) {
    nlohmann::json arch{{"kind", arch_kind_name(m.arch.kind)},
                        {"input_dim", m.arch.input_dim},
                        {"output_dim", m.arch.output_dim},
                        {"hidden_sizes", m.arch.hidden_sizes},
                        {"activation", activation_name(m.arch.activation)},
                        {"output_activation", output_activation_name(m.arch.output_activation)}};
    nlohmann::json weights = nlohmann::json::array();
    for (const auto& w : m.weights)
        weights.push_back({{"rows", w.rows}, {"cols", w.cols}, {"v", w.v}});
    nlohmann::json record{{"epochs_run", m.record.epochs_run},
                          {"best_epoch", m.record.best_epoch},
                          {"best_val_loss", m.record.best_val_loss},
                          {"final_train_loss", m.record.final_train_loss},
                          {"weight_l1", m.record.weight_l1}};
    return {{"format", "rinnlab-model"},
            {"version", 1},
            {"arch", arch},
            {"seed", m.seed},
            {"decoder_start", m.decoder_start},
            {"weights", weights},
            {"biases", m.biases},
            {"record", record}};
}

inline NetworkModel model_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "rinnlab-model")
        throw std::invalid_argument("not a model file");
    NetworkModel m;
    const auto& a = j.at("arch");
    m.arch.kind = parse_arch_kind(a.at("kind").get<std::string>());
    m.arch.input_dim = a.at("input_dim").get<int>();
    m.arch.output_dim = a.at("output_dim").get<int>();
    m.arch.hidden_sizes = a.at("hidden_sizes").get<std::vector<int>>();
    m.arch.activation = parse_activation(a.at("activation").get<std::string>());
    m.arch.output_activation =
        parse_output_activation(a.at("output_activation").get<std::string>());
    m.seed = j.at("seed").get<std::uint64_t>();
    m.decoder_start = j.at("decoder_start").get<int>();
    for (const auto& wj : j.at("weights")) {
        Matrix w(wj.at("rows").get<int>(), wj.at("cols").get<int>());
        w.v = wj.at("v").get<std::vector<double>>();
        if (w.v.size() != static_cast<std::size_t>(w.rows) * static_cast<std::size_t>(w.cols))
            throw std::invalid_argument("model: weight value count mismatch");
        m.weights.push_back(std::move(w));
    }
    m.biases = j.at("biases").get<std::vector<std::vector<double>>>();
    const auto& r = j.at("record");
    m.record.epochs_run = r.at("epochs_run").get<int>();
    m.record.best_epoch = r.at("best_epoch").get<int>();
    m.record.best_val_loss = r.at("best_val_loss").get<double>();
    m.record.final_train_loss = r.at("final_train_loss").get<double>();
    m.record.weight_l1 = r.at("weight_l1").get<double>();
    m.validate_shapes();
    return m;
}

inline void save_model(const NetworkModel& m, const std::string& path) {
    atomic_write_file(path, model_to_json(m).dump() + "\n");
}

inline NetworkModel load_model(const std::string& path) {
    return model_from_json(nlohmann::json::parse(read_file(path)));
}

}  // namespace rinnlab
