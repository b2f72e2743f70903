#pragma once

// Data generators driven by a CausalDag: interventional matrix
// multiplication (binary inputs knock adjacent latents to zero), a linear
// Gaussian structural equation model, Beta-parameterized logical operators
// (OR/AND/XOR), plus an independent Bernoulli background generator and the
// column-shuffled embedding that hides a simulated core inside it.
//
// Every generator derives one RNG substream per row from the master seed,
// so datasets are bit-identical however rows are scheduled.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "rinnlab/dataset.hpp"
#include "rinnlab/graph.hpp"
#include "rinnlab/rng.hpp"

namespace rinnlab {

// ---------------------------------------------------------------------------
// Interventional matrix multiplication

namespace detail {

struct LatentLayering {
    std::vector<std::vector<int>> layers;   // latent node indices per layer
    std::vector<int> latent_pos;            // node -> position within its layer
    std::vector<int> latent_layer;          // node -> layer rank, -1 if not latent
};

// Requires strict layering: latent edges go to the next latent layer only,
// outputs hang off the last latent layer, and inputs may target any latent.
inline LatentLayering layered_latents(const CausalDag& dag) {
    LatentLayering lay;
    lay.latent_pos.assign(static_cast<std::size_t>(dag.node_count()), -1);
    lay.latent_layer.assign(static_cast<std::size_t>(dag.node_count()), -1);

    std::vector<int> layer_values;
    for (int i : dag.nodes_with_role(Role::LATENT)) layer_values.push_back(dag.node(i).layer);
    std::sort(layer_values.begin(), layer_values.end());
    layer_values.erase(std::unique(layer_values.begin(), layer_values.end()), layer_values.end());
    if (layer_values.size() < 2)
        throw std::invalid_argument("interventional generator needs latents in at least 2 layers");

    lay.layers.assign(layer_values.size(), {});
    for (int i : dag.nodes_with_role(Role::LATENT)) {
        const auto rank = static_cast<std::size_t>(
            std::lower_bound(layer_values.begin(), layer_values.end(), dag.node(i).layer) -
            layer_values.begin());
        lay.latent_layer[static_cast<std::size_t>(i)] = static_cast<int>(rank);
        lay.latent_pos[static_cast<std::size_t>(i)] = static_cast<int>(lay.layers[rank].size());
        lay.layers[rank].push_back(i);
    }

    const int last = static_cast<int>(lay.layers.size()) - 1;
    for (const auto& [s, d] : dag.edges()) {
        const Role rs = dag.node(s).role;
        const Role rd = dag.node(d).role;
        if (rs == Role::INPUT && rd == Role::OUTPUT)
            throw std::invalid_argument("interventional generator: input " + dag.node(s).id +
                                        " targets OUTPUT node " + dag.node(d).id);
        if (rs == Role::INPUT) continue;
        if (rs == Role::LATENT && rd == Role::LATENT) {
            if (lay.latent_layer[static_cast<std::size_t>(d)] !=
                lay.latent_layer[static_cast<std::size_t>(s)] + 1)
                throw std::invalid_argument("interventional generator: edge " + dag.node(s).id +
                                            " -> " + dag.node(d).id +
                                            " skips a latent layer");
        } else if (rs == Role::LATENT && rd == Role::OUTPUT) {
            if (lay.latent_layer[static_cast<std::size_t>(s)] != last)
                throw std::invalid_argument("interventional generator: non-final latent " +
                                            dag.node(s).id + " feeds an output");
        }
    }
    return lay;
}

// One sample of Algorithm-3 style propagation: the first latent layer
// starts at all-ones, active inputs force their targets in each layer to
// zero before that layer propagates through the binary adjacency, and the
// output row is the final product.
inline void interventional_row(const CausalDag& dag, const LatentLayering& lay,
                               const std::vector<int>& inputs, const double* x, double* y,
                               int n_out) {
    const int n_layers = static_cast<int>(lay.layers.size());
    std::vector<double> cur(lay.layers[0].size(), 1.0);
    std::vector<double> next;
    for (int l = 0; l < n_layers; ++l) {
        for (std::size_t c = 0; c < inputs.size(); ++c) {
            if (x[c] == 0.0) continue;
            for (int child : dag.children(inputs[c]))
                if (lay.latent_layer[static_cast<std::size_t>(child)] == l)
                    cur[static_cast<std::size_t>(
                        lay.latent_pos[static_cast<std::size_t>(child)])] = 0.0;
        }
        const bool final_layer = l == n_layers - 1;
        next.assign(final_layer ? static_cast<std::size_t>(n_out) : lay.layers[l + 1].size(), 0.0);
        for (std::size_t k = 0; k < lay.layers[l].size(); ++k) {
            const double hv = cur[k];
            if (hv == 0.0) continue;
            for (int child : dag.children(lay.layers[l][k])) {
                const int slot = final_layer ? dag.output_position(child)
                                             : lay.latent_pos[static_cast<std::size_t>(child)];
                next[static_cast<std::size_t>(slot)] += hv;
            }
        }
        cur = next;
    }
    for (int c = 0; c < n_out; ++c) y[c] = cur[static_cast<std::size_t>(c)];
}

}  // namespace detail

// Deterministic single-sample evaluation for a given binary input row.
inline std::vector<double> interventional_forward(const CausalDag& dag,
                                                  const std::vector<double>& x) {
    const auto lay = detail::layered_latents(dag);
    const auto inputs = dag.nodes_with_role(Role::INPUT);
    if (x.size() != inputs.size())
        throw std::invalid_argument("interventional_forward: input row has wrong length");
    const int n_out = static_cast<int>(dag.output_nodes().size());
    std::vector<double> y(static_cast<std::size_t>(n_out));
    detail::interventional_row(dag, lay, inputs, x.data(), y.data(), n_out);
    return y;
}

inline Dataset gen_interventional(const CausalDag& dag, int n, double p, std::uint64_t seed) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("interventional generator: p must lie in (0,1)");
    const auto lay = detail::layered_latents(dag);
    const auto inputs = dag.nodes_with_role(Role::INPUT);
    const int n_in = static_cast<int>(inputs.size());
    const int n_out = static_cast<int>(dag.output_nodes().size());

    Dataset ds;
    ds.X = Matrix(n, n_in);
    ds.Y = Matrix(n, n_out);
    ds.x_kind = ValueKind::BINARY;
    ds.y_kind = ValueKind::NONNEG_INT;
    ds.meta.generator = "interventional";
    ds.meta.seed = seed;
    ds.meta.params = {{"p", p}, {"n", n}};

    for (int r = 0; r < n; ++r) {
        Rng rng(substream(seed, static_cast<std::uint64_t>(r)));
        for (int c = 0; c < n_in; ++c) ds.X(r, c) = rng.bernoulli(p) ? 1.0 : 0.0;
        detail::interventional_row(dag, lay, inputs, ds.X.row(r), ds.Y.row(r), n_out);
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Linear Gaussian SEM

struct SemParams {
    std::vector<double> edge_weight;  // aligned with dag.edges()
    std::vector<double> node_sigma2;  // aligned with dag.nodes()
};

inline SemParams draw_sem_params(const CausalDag& dag, std::uint64_t seed) {
    Rng rng(substream(seed, "sem-params"));
    SemParams sp;
    sp.edge_weight.reserve(dag.edges().size());
    for (std::size_t e = 0; e < dag.edges().size(); ++e)
        sp.edge_weight.push_back(rng.sign() * rng.uniform(0.5, 1.5));
    sp.node_sigma2.reserve(static_cast<std::size_t>(dag.node_count()));
    for (int i = 0; i < dag.node_count(); ++i) sp.node_sigma2.push_back(rng.uniform(1.0, 3.0));
    return sp;
}

// Evaluates every node given one exogenous noise value per node (the bias
// draw). Inputs have no parents, so their value is exactly their noise.
inline std::vector<double> sem_forward(const CausalDag& dag, const SemParams& params,
                                       const std::vector<double>& noise) {
    std::vector<double> value(static_cast<std::size_t>(dag.node_count()), 0.0);
    // Per-edge weights looked up by (src, dst).
    std::vector<std::vector<std::pair<int, double>>> wparents(
        static_cast<std::size_t>(dag.node_count()));
    for (std::size_t e = 0; e < dag.edges().size(); ++e) {
        const auto& [s, d] = dag.edges()[e];
        wparents[static_cast<std::size_t>(d)].emplace_back(s, params.edge_weight[e]);
    }
    for (int u : dag.topo_order()) {
        double acc = noise[static_cast<std::size_t>(u)];
        for (const auto& [parent, w] : wparents[static_cast<std::size_t>(u)])
            acc += w * value[static_cast<std::size_t>(parent)];
        value[static_cast<std::size_t>(u)] = acc;
    }
    return value;
}

inline Dataset gen_linear_gaussian(const CausalDag& dag, int n, std::uint64_t seed) {
    const SemParams params = draw_sem_params(dag, seed);
    const auto inputs = dag.nodes_with_role(Role::INPUT);
    const auto& outputs = dag.output_nodes();

    Dataset ds;
    ds.X = Matrix(n, static_cast<int>(inputs.size()));
    ds.Y = Matrix(n, static_cast<int>(outputs.size()));
    ds.x_kind = ValueKind::REAL;
    ds.y_kind = ValueKind::REAL;
    ds.meta.generator = "linear-gaussian";
    ds.meta.seed = seed;
    ds.meta.params = {{"n", n}};

    std::vector<double> noise(static_cast<std::size_t>(dag.node_count()));
    for (int r = 0; r < n; ++r) {
        Rng rng(substream(seed, static_cast<std::uint64_t>(r)));
        for (int i = 0; i < dag.node_count(); ++i)
            noise[static_cast<std::size_t>(i)] =
                rng.normal(0.0, std::sqrt(params.node_sigma2[static_cast<std::size_t>(i)]));
        const auto value = sem_forward(dag, params, noise);
        for (std::size_t c = 0; c < inputs.size(); ++c)
            ds.X(r, static_cast<int>(c)) = value[static_cast<std::size_t>(inputs[c])];
        for (std::size_t c = 0; c < outputs.size(); ++c)
            ds.Y(r, static_cast<int>(c)) = value[static_cast<std::size_t>(outputs[c])];
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Logical operators with Beta-sampled conditional probability tables

enum class LogicalOp { OR, AND, XOR };

inline const char* logical_op_name(LogicalOp op) {
    switch (op) {
        case LogicalOp::OR: return "OR";
        case LogicalOp::AND: return "AND";
        default: return "XOR";
    }
}

// Success probability table per node: p[config] indexed by the parent
// bitmask (bit k = value of the k-th parent in node-index order).
struct CptTable {
    std::vector<std::vector<double>> p;        // by node index
    std::vector<std::vector<int>> parents;     // by node index
    std::vector<LogicalOp> op;                 // by node index; inputs unused
};

struct BetaParams {
    double alpha = 1.0;
    double beta = 1.0;
};

inline std::vector<LogicalOp> all_ops(const CausalDag& dag, LogicalOp op) {
    return std::vector<LogicalOp>(static_cast<std::size_t>(dag.node_count()), op);
}

inline std::vector<LogicalOp> random_ops(const CausalDag& dag, std::uint64_t seed) {
    Rng rng(substream(seed, "ops"));
    std::vector<LogicalOp> ops(static_cast<std::size_t>(dag.node_count()), LogicalOp::OR);
    for (int i = 0; i < dag.node_count(); ++i) {
        if (dag.node(i).role == Role::INPUT) continue;
        const auto pick = rng.uniform_index(3);
        ops[static_cast<std::size_t>(i)] =
            pick == 0 ? LogicalOp::AND : (pick == 1 ? LogicalOp::OR : LogicalOp::XOR);
    }
    return ops;
}

inline bool logical_truth(LogicalOp op, unsigned config, int arity) {
    int ones = 0;
    for (int k = 0; k < arity; ++k) ones += (config >> k) & 1u;
    switch (op) {
        case LogicalOp::OR: return ones > 0;
        case LogicalOp::AND: return ones == arity;  // empty config is true
        default: return (ones & 1) == 1;
    }
}

struct LogicalData {
    Dataset dataset;
    CptTable cpt;
    Matrix node_values;  // n x node_count, for conditional-frequency checks
};

inline LogicalData gen_logical(const CausalDag& dag, int n, const std::vector<LogicalOp>& ops,
                               BetaParams beta_true, BetaParams beta_false, std::uint64_t seed) {
    if (beta_true.alpha <= 0 || beta_true.beta <= 0 || beta_false.alpha <= 0 ||
        beta_false.beta <= 0)
        throw std::invalid_argument("logical generator: Beta parameters must be positive");
    if (static_cast<int>(ops.size()) != dag.node_count())
        throw std::invalid_argument("logical generator: operator list must cover every node");

    CptTable cpt;
    cpt.p.resize(static_cast<std::size_t>(dag.node_count()));
    cpt.parents.resize(static_cast<std::size_t>(dag.node_count()));
    cpt.op = ops;

    Rng prng(substream(seed, "cpt"));
    for (int i = 0; i < dag.node_count(); ++i) {
        const auto& parents = dag.parents(i);
        if (static_cast<int>(parents.size()) > 16)
            throw std::invalid_argument("logical generator: node " + dag.node(i).id + " has " +
                                        std::to_string(parents.size()) +
                                        " parents; CPT cap is 16");
        cpt.parents[static_cast<std::size_t>(i)] = parents;
        const int arity = static_cast<int>(parents.size());
        const std::size_t n_cfg = std::size_t{1} << arity;
        auto& table = cpt.p[static_cast<std::size_t>(i)];
        table.resize(n_cfg);
        const bool is_input = dag.node(i).role == Role::INPUT;
        for (std::size_t cfg = 0; cfg < n_cfg; ++cfg) {
            // Inputs are roots with no operator: rare activation from the
            // false-side Beta. Other nodes follow their operator's truth.
            const bool truth =
                !is_input && logical_truth(ops[static_cast<std::size_t>(i)],
                                           static_cast<unsigned>(cfg), arity);
            const BetaParams& bp = truth ? beta_true : beta_false;
            double p = prng.beta(bp.alpha, bp.beta);
            p = std::min(1.0 - 1e-12, std::max(1e-12, p));
            table[cfg] = p;
        }
    }

    const auto inputs = dag.nodes_with_role(Role::INPUT);
    const auto& outputs = dag.output_nodes();

    LogicalData out;
    out.cpt = cpt;
    out.node_values = Matrix(n, dag.node_count());
    Dataset& ds = out.dataset;
    ds.X = Matrix(n, static_cast<int>(inputs.size()));
    ds.Y = Matrix(n, static_cast<int>(outputs.size()));
    ds.x_kind = ValueKind::BINARY;
    ds.y_kind = ValueKind::BINARY;
    ds.meta.generator = "logical";
    ds.meta.seed = seed;
    {
        nlohmann::json op_list = nlohmann::json::array();
        for (int i = 0; i < dag.node_count(); ++i)
            if (dag.node(i).role != Role::INPUT)
                op_list.push_back(logical_op_name(ops[static_cast<std::size_t>(i)]));
        ds.meta.params = {{"n", n},
                          {"beta_true", {beta_true.alpha, beta_true.beta}},
                          {"beta_false", {beta_false.alpha, beta_false.beta}},
                          {"ops", op_list}};
    }

    for (int r = 0; r < n; ++r) {
        Rng rng(substream(seed, static_cast<std::uint64_t>(r)));
        for (int u : dag.topo_order()) {
            unsigned cfg = 0;
            const auto& parents = cpt.parents[static_cast<std::size_t>(u)];
            for (std::size_t k = 0; k < parents.size(); ++k)
                if (out.node_values(r, parents[k]) != 0.0) cfg |= 1u << k;
            const double p = cpt.p[static_cast<std::size_t>(u)][cfg];
            out.node_values(r, u) = rng.uniform01() < p ? 1.0 : 0.0;
        }
        for (std::size_t c = 0; c < inputs.size(); ++c)
            ds.X(r, static_cast<int>(c)) = out.node_values(r, inputs[c]);
        for (std::size_t c = 0; c < outputs.size(); ++c)
            ds.Y(r, static_cast<int>(c)) = out.node_values(r, outputs[c]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Background and embedding

inline Dataset gen_background(int p_in, int q_out, int n, double density, std::uint64_t seed) {
    if (!(density >= 0.0 && density <= 1.0))
        throw std::invalid_argument("background generator: density must lie in [0,1]");
    Dataset ds;
    ds.X = Matrix(n, p_in);
    ds.Y = Matrix(n, q_out);
    ds.x_kind = ValueKind::BINARY;
    ds.y_kind = ValueKind::BINARY;
    ds.meta.generator = "background";
    ds.meta.seed = seed;
    ds.meta.params = {{"density", density}, {"n", n}};
    for (int r = 0; r < n; ++r) {
        Rng rng(substream(seed, static_cast<std::uint64_t>(r)));
        for (int c = 0; c < p_in; ++c) ds.X(r, c) = rng.bernoulli(density) ? 1.0 : 0.0;
        for (int c = 0; c < q_out; ++c) ds.Y(r, c) = rng.bernoulli(density) ? 1.0 : 0.0;
    }
    return ds;
}

namespace detail {

// Shuffled column order for the concatenation [background | core]; empty
// background keeps the identity so the core passes through untouched.
inline std::vector<int> embed_permutation(int bg_cols, int core_cols, Rng& rng) {
    std::vector<int> perm(static_cast<std::size_t>(bg_cols + core_cols));
    for (std::size_t j = 0; j < perm.size(); ++j) perm[j] = static_cast<int>(j);
    if (bg_cols > 0) rng.shuffle(perm);
    return perm;
}

inline Matrix permute_concat(const Matrix& bg, const Matrix& core, const std::vector<int>& perm,
                             const std::vector<int>& bg_rows) {
    Matrix out(core.rows, bg.cols + core.cols);
    for (int r = 0; r < core.rows; ++r) {
        const int br = bg_rows.empty() ? r : bg_rows[static_cast<std::size_t>(r)];
        for (std::size_t j = 0; j < perm.size(); ++j) {
            const int src = perm[j];
            out(r, static_cast<int>(j)) =
                src < bg.cols ? bg(br, src) : core(r, src - bg.cols);
        }
    }
    return out;
}

}  // namespace detail

inline Dataset embed(const Dataset& core, const Dataset& background, std::uint64_t seed) {
    if (core.x_kind != background.x_kind || core.y_kind != background.y_kind)
        throw std::invalid_argument("embed: value kinds of core and background differ");

    std::vector<int> bg_rows;
    bool resampled = false;
    if (background.n_rows() != core.n_rows()) {
        if (background.n_rows() == 0)
            throw std::invalid_argument("embed: cannot resample an empty background");
        resampled = true;
        Rng rng(substream(seed, "resample"));
        bg_rows.resize(static_cast<std::size_t>(core.n_rows()));
        for (auto& r : bg_rows)
            r = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(background.n_rows())));
    }

    Rng xr(substream(seed, "perm-x"));
    Rng yr(substream(seed, "perm-y"));
    const auto perm_x = detail::embed_permutation(background.n_inputs(), core.n_inputs(), xr);
    const auto perm_y = detail::embed_permutation(background.n_outputs(), core.n_outputs(), yr);

    Dataset ds;
    ds.X = detail::permute_concat(background.X, core.X, perm_x, bg_rows);
    ds.Y = detail::permute_concat(background.Y, core.Y, perm_y, bg_rows);
    ds.x_kind = core.x_kind;
    ds.y_kind = core.y_kind;
    ds.meta.generator = "embed";
    ds.meta.seed = seed;
    ds.meta.dag = core.meta.dag;
    ds.meta.params = {{"core_generator", core.meta.generator},
                      {"background_generator", background.meta.generator},
                      {"core_seed", core.meta.seed},
                      {"background_seed", background.meta.seed}};
    ds.meta.input_permutation = perm_x;
    ds.meta.output_permutation = perm_y;
    ds.meta.core_inputs = core.n_inputs();
    ds.meta.core_outputs = core.n_outputs();
    ds.meta.background_resampled = resampled;
    return ds;
}

}  // namespace rinnlab
