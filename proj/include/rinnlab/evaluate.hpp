#pragma once

// Structure scoring of trained models: project every node into output
// space by multiplying the downstream weight matrices, binarize at a
// threshold, match the binary vectors against the ground-truth patterns
// with a +/-1-pixel (Hamming distance <= 1) rule, and report precision,
// recall and F1 for the input and hidden sides, plus test error and AUROC.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rinnlab/dataset.hpp"
#include "rinnlab/graph.hpp"
#include "rinnlab/io.hpp"
#include "rinnlab/network.hpp"

namespace rinnlab {

// ---------------------------------------------------------------------------
// Projection

enum class ProjectionNodeKind { HIDDEN, INPUT_COPY };

struct ProjectionNode {
    ProjectionNodeKind kind = ProjectionNodeKind::HIDDEN;
    int layer = 0;        // hidden layer the node (or input copy) feeds/sits in
    int index = 0;        // position within the layer, or input index for copies
    std::vector<double> v;  // output-space influence, length q
};

struct ProjectionSet {
    int output_dim = 0;
    std::vector<ProjectionNode> nodes;
    // Per-input total influence: elementwise sum over all of that input's
    // entry points (primary plus redundant copies). Empty for autoencoders.
    std::vector<std::vector<double>> input_sums;
};

// M_j for every node: the product of the weight matrices downstream of the
// node, hidden blocks only at each later RINN layer; biases ignored. For
// autoencoders only the decoder half (bottleneck onward) is projected and
// inputs are not scored.
inline ProjectionSet project(const NetworkModel& m) {
    m.validate_shapes();
    const Architecture& a = m.arch;
    const int L = a.depth();
    const int q = a.output_dim;

    // tail[i] = projection of hidden layer i's activation onto the output:
    // product of hidden blocks of W_{i+1} .. W_L.
    std::vector<Matrix> tail(static_cast<std::size_t>(L));
    tail[static_cast<std::size_t>(L - 1)] = m.weights[static_cast<std::size_t>(L)];
    for (int i = L - 2; i >= 0; --i) {
        const Matrix& w = m.weights[static_cast<std::size_t>(i + 1)];
        const int h = a.hidden_sizes[static_cast<std::size_t>(i)];
        Matrix block(h, w.cols);
        for (int r = 0; r < h; ++r)
            std::copy(w.row(r), w.row(r) + w.cols, block.row(r));
        matmul(block, tail[static_cast<std::size_t>(i + 1)], tail[static_cast<std::size_t>(i)]);
    }

    ProjectionSet ps;
    ps.output_dim = q;
    const int first_layer = a.kind == ArchKind::AUTOENCODER ? m.decoder_start : 0;
    for (int i = first_layer; i < L; ++i) {
        const Matrix& t = tail[static_cast<std::size_t>(i)];
        for (int r = 0; r < t.rows; ++r) {
            ProjectionNode node;
            node.kind = ProjectionNodeKind::HIDDEN;
            node.layer = i;
            node.index = r;
            node.v.assign(t.row(r), t.row(r) + q);
            ps.nodes.push_back(std::move(node));
        }
    }

    if (a.kind != ArchKind::AUTOENCODER) {
        ps.input_sums.assign(static_cast<std::size_t>(a.input_dim),
                             std::vector<double>(static_cast<std::size_t>(q), 0.0));
        // Primary input rows: W_1 projected through tail[0].
        Matrix primary;
        matmul(m.weights[0], tail[0], primary);
        for (int r = 0; r < a.input_dim; ++r) {
            ProjectionNode node;
            node.kind = ProjectionNodeKind::INPUT_COPY;
            node.layer = 0;
            node.index = r;
            node.v.assign(primary.row(r), primary.row(r) + q);
            for (int c = 0; c < q; ++c)
                ps.input_sums[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] +=
                    node.v[static_cast<std::size_t>(c)];
            ps.nodes.push_back(std::move(node));
        }
        // Redundant copies: the input block of W_i projected through tail[i].
        if (a.kind == ArchKind::RINN) {
            for (int i = 1; i < L; ++i) {
                const Matrix& w = m.weights[static_cast<std::size_t>(i)];
                const int h_prev = a.hidden_sizes[static_cast<std::size_t>(i - 1)];
                Matrix block(a.input_dim, w.cols);
                for (int r = 0; r < a.input_dim; ++r)
                    std::copy(w.row(h_prev + r), w.row(h_prev + r) + w.cols, block.row(r));
                Matrix proj;
                matmul(block, tail[static_cast<std::size_t>(i)], proj);
                for (int r = 0; r < a.input_dim; ++r) {
                    ProjectionNode node;
                    node.kind = ProjectionNodeKind::INPUT_COPY;
                    node.layer = i;
                    node.index = r;
                    node.v.assign(proj.row(r), proj.row(r) + q);
                    for (int c = 0; c < q; ++c)
                        ps.input_sums[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] +=
                            node.v[static_cast<std::size_t>(c)];
                    ps.nodes.push_back(std::move(node));
                }
            }
        }
    }
    return ps;
}

// output[k] = 1 iff |v[k]| > t.
inline std::vector<std::uint8_t> binarize(const std::vector<double>& v, double t) {
    if (t < 0) throw std::invalid_argument("binarize: threshold must be nonnegative");
    std::vector<std::uint8_t> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::fabs(v[i]) > t ? 1 : 0;
    return out;
}

// ---------------------------------------------------------------------------
// Pattern matching with the +/-1-pixel rule

struct MatchResult {
    int tp = 0;
    int fp = 0;
    int fn = 0;
    // assignment[i] = ground-truth pattern matched by prediction i, or -1.
    std::vector<int> assignment;
};

namespace detail {

inline int hamming(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
    int d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
    return d;
}

inline bool kuhn_augment(int u, const std::vector<std::vector<int>>& adj,
                         std::vector<int>& match_gt, std::vector<std::uint8_t>& visited) {
    for (int g : adj[static_cast<std::size_t>(u)]) {
        if (visited[static_cast<std::size_t>(g)]) continue;
        visited[static_cast<std::size_t>(g)] = 1;
        if (match_gt[static_cast<std::size_t>(g)] < 0 ||
            kuhn_augment(match_gt[static_cast<std::size_t>(g)], adj, match_gt, visited)) {
            match_gt[static_cast<std::size_t>(g)] = u;
            return true;
        }
    }
    return false;
}

}  // namespace detail

// A prediction matches a ground-truth pattern iff their Hamming distance is
// at most 1. Each ground-truth pattern counts as at most one TP, so TP is a
// maximum bipartite matching (order of predictions cannot change the
// counts); candidate patterns are tried closest-first, lowest index first.
// Predictions with a candidate that lost out to an earlier match are
// duplicates and count as neither TP nor FP; predictions within Hamming 1
// of the zero vector and with no match are ignored; the rest are FPs.
inline MatchResult match_patterns(const std::vector<std::vector<std::uint8_t>>& predictions,
                                  const std::vector<std::vector<std::uint8_t>>& ground_truth) {
    for (const auto& p : predictions)
        for (const auto& g : ground_truth)
            if (p.size() != g.size())
                throw std::invalid_argument("match_patterns: vector length mismatch");

    const int np = static_cast<int>(predictions.size());
    const int ng = static_cast<int>(ground_truth.size());
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(np));
    for (int i = 0; i < np; ++i) {
        std::vector<std::pair<int, int>> cand;  // (distance, gt index)
        for (int g = 0; g < ng; ++g) {
            const int d = detail::hamming(predictions[static_cast<std::size_t>(i)],
                                          ground_truth[static_cast<std::size_t>(g)]);
            if (d <= 1) cand.emplace_back(d, g);
        }
        std::sort(cand.begin(), cand.end());
        for (const auto& [d, g] : cand) adj[static_cast<std::size_t>(i)].push_back(g);
    }

    std::vector<int> match_gt(static_cast<std::size_t>(ng), -1);
    for (int i = 0; i < np; ++i) {
        std::vector<std::uint8_t> visited(static_cast<std::size_t>(ng), 0);
        detail::kuhn_augment(i, adj, match_gt, visited);
    }

    MatchResult res;
    res.assignment.assign(static_cast<std::size_t>(np), -1);
    for (int g = 0; g < ng; ++g) {
        if (match_gt[static_cast<std::size_t>(g)] >= 0) {
            res.assignment[static_cast<std::size_t>(match_gt[static_cast<std::size_t>(g)])] = g;
            ++res.tp;
        }
    }
    res.fn = ng - res.tp;
    for (int i = 0; i < np; ++i) {
        if (res.assignment[static_cast<std::size_t>(i)] >= 0) continue;
        if (!adj[static_cast<std::size_t>(i)].empty()) continue;  // duplicate of a matched pattern
        int ones = 0;
        for (const auto b : predictions[static_cast<std::size_t>(i)]) ones += b;
        if (ones <= 1) continue;  // within +/-1 pixel of the zero vector
        ++res.fp;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Scores

struct SideScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    int tp = 0;
    int fp = 0;
    int fn = 0;
};

inline SideScore side_score(const MatchResult& m) {
    SideScore s;
    s.tp = m.tp;
    s.fp = m.fp;
    s.fn = m.fn;
    s.precision = (m.tp + m.fp) > 0 ? static_cast<double>(m.tp) / (m.tp + m.fp) : 0.0;
    s.recall = (m.tp + m.fn) > 0 ? static_cast<double>(m.tp) / (m.tp + m.fn) : 0.0;
    s.f1 = (s.precision + s.recall) > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall)
                                        : 0.0;
    return s;
}

struct ScoreReport {
    SideScore input;
    SideScore hidden;
    bool input_scored = true;  // false for autoencoders
    double threshold = 0.0;
    double test_error = 0.0;
    std::optional<double> auroc;
};

// Restriction of scoring to an embedded simulated core: positions of the
// core columns inside the full input/output spaces.
struct CoreColumns {
    std::vector<int> input_cols;
    std::vector<int> output_cols;
};

namespace detail {

inline std::vector<double> restrict_columns(const std::vector<double>& v,
                                            const std::vector<int>& cols) {
    if (cols.empty()) return v;
    std::vector<double> out(cols.size());
    for (std::size_t i = 0; i < cols.size(); ++i)
        out[i] = v[static_cast<std::size_t>(cols[i])];
    return out;
}

struct PatternSets {
    std::vector<std::vector<std::uint8_t>> latent;
    std::vector<std::vector<std::uint8_t>> input;
};

inline PatternSets dag_pattern_sets(const CausalDag& dag) {
    PatternSets ps;
    for (const auto& gp : ground_truth_patterns(dag)) {
        if (dag.node(dag.node_index(gp.node)).role == Role::LATENT)
            ps.latent.push_back(gp.mask);
        else
            ps.input.push_back(gp.mask);
    }
    return ps;
}

// Binarized hidden and input vectors of a projection, optionally restricted
// to embedded core columns.
struct BinarizedProjection {
    std::vector<std::vector<std::uint8_t>> hidden;
    std::vector<std::vector<std::uint8_t>> input;
};

inline BinarizedProjection binarize_projection(const ProjectionSet& ps, double t,
                                               const CoreColumns* core) {
    BinarizedProjection bp;
    for (const auto& node : ps.nodes) {
        if (node.kind != ProjectionNodeKind::HIDDEN) continue;
        bp.hidden.push_back(
            binarize(core ? restrict_columns(node.v, core->output_cols) : node.v, t));
    }
    if (!ps.input_sums.empty()) {
        if (core) {
            for (int i : core->input_cols)
                bp.input.push_back(binarize(
                    restrict_columns(ps.input_sums[static_cast<std::size_t>(i)],
                                     core->output_cols),
                    t));
        } else {
            for (const auto& v : ps.input_sums) bp.input.push_back(binarize(v, t));
        }
    }
    return bp;
}

}  // namespace detail

// Mean of the available F1 scores (hidden only for autoencoders) — the
// objective the shared threshold search maximizes.
inline double threshold_objective(const ProjectionSet& ps, const CausalDag& dag, double t,
                                  const CoreColumns* core = nullptr) {
    const auto patterns = detail::dag_pattern_sets(dag);
    const auto bp = detail::binarize_projection(ps, t, core);
    const double hidden_f1 = side_score(match_patterns(bp.hidden, patterns.latent)).f1;
    if (bp.input.empty()) return hidden_f1;
    const double input_f1 = side_score(match_patterns(bp.input, patterns.input)).f1;
    return 0.5 * (hidden_f1 + input_f1);
}

// One shared threshold for a set of models: scans a fixed grid of 50
// log-spaced values between 1e-3 and the 99th percentile of all projection
// magnitudes, maximizing the summed objective; ties break toward the larger
// threshold.
inline double search_threshold(const std::vector<ProjectionSet>& sets, const CausalDag& dag,
                               const std::vector<const CoreColumns*>* cores = nullptr) {
    if (sets.empty()) throw std::invalid_argument("search_threshold: no models supplied");
    std::vector<double> mags;
    for (const auto& ps : sets) {
        for (const auto& node : ps.nodes)
            for (double x : node.v) mags.push_back(std::fabs(x));
        for (const auto& v : ps.input_sums)
            for (double x : v) mags.push_back(std::fabs(x));
    }
    std::sort(mags.begin(), mags.end());
    const double p99 =
        mags.empty() ? 0.0
                     : mags[static_cast<std::size_t>(0.99 * (static_cast<double>(mags.size()) - 1))];

    constexpr int kGridSize = 50;
    constexpr double kGridLo = 1e-3;
    std::vector<double> grid;
    if (p99 <= kGridLo) {
        grid.push_back(kGridLo);
    } else {
        for (int i = 0; i < kGridSize; ++i)
            grid.push_back(kGridLo * std::pow(p99 / kGridLo,
                                              static_cast<double>(i) / (kGridSize - 1)));
    }

    double best_t = grid.front();
    double best_obj = -1.0;
    for (double t : grid) {
        double obj = 0.0;
        for (std::size_t s = 0; s < sets.size(); ++s) {
            const CoreColumns* core = cores ? (*cores)[s] : nullptr;
            obj += threshold_objective(sets[s], dag, t, core);
        }
        if (obj >= best_obj) {  // >= so ties go to the larger threshold
            best_obj = obj;
            best_t = t;
        }
    }
    return best_t;
}

// Full per-model report at a fixed threshold. test_error is the prediction
// loss (BCE for sigmoid outputs, MSE otherwise) without the L1 term; AUROC
// is the pooled rank statistic over all (sample, output) pairs, reported
// for binary targets only.
inline ScoreReport score_model(const NetworkModel& model, const CausalDag& dag,
                               const Matrix& x_test, const Matrix& y_test, double threshold,
                               bool binary_targets, const CoreColumns* core = nullptr) {
    const auto patterns = detail::dag_pattern_sets(dag);
    const auto ps = project(model);
    const auto bp = detail::binarize_projection(ps, threshold, core);

    ScoreReport report;
    report.threshold = threshold;
    report.hidden = side_score(match_patterns(bp.hidden, patterns.latent));
    report.input_scored = !bp.input.empty();
    if (report.input_scored)
        report.input = side_score(match_patterns(bp.input, patterns.input));

    if (x_test.rows > 0) {
        const LossKind kind = model.arch.output_activation == OutputActivation::SIGMOID
                                  ? (binary_targets ? LossKind::BCE : LossKind::MSE)
                                  : LossKind::MSE;
        report.test_error = prediction_loss(model, x_test, y_test, kind);
        if (binary_targets) {
            const Matrix scores = predict(model, x_test);
            std::vector<std::pair<double, int>> ranked;
            ranked.reserve(scores.v.size());
            long long n_pos = 0;
            for (std::size_t i = 0; i < scores.v.size(); ++i) {
                const int label = y_test.v[i] != 0.0 ? 1 : 0;
                n_pos += label;
                ranked.emplace_back(scores.v[i], label);
            }
            const long long n_neg = static_cast<long long>(ranked.size()) - n_pos;
            if (n_pos > 0 && n_neg > 0) {
                std::sort(ranked.begin(), ranked.end(),
                          [](const auto& a, const auto& b) { return a.first < b.first; });
                // Average ranks across ties.
                double rank_sum_pos = 0.0;
                std::size_t i = 0;
                while (i < ranked.size()) {
                    std::size_t j = i;
                    while (j < ranked.size() && ranked[j].first == ranked[i].first) ++j;
                    const double avg_rank = 0.5 * (static_cast<double>(i + 1) +
                                                   static_cast<double>(j));
                    for (std::size_t k = i; k < j; ++k)
                        if (ranked[k].second) rank_sum_pos += avg_rank;
                    i = j;
                }
                const double u = rank_sum_pos -
                                 static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1) / 2;
                report.auroc = u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
            }
        }
    }
    return report;
}

inline nlohmann::json score_report_to_json(const ScoreReport& r) {
    auto side = [](const SideScore& s) {
        return nlohmann::json{{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1},
                              {"tp", s.tp},               {"fp", s.fp},         {"fn", s.fn}};
    };
    nlohmann::json j{{"hidden", side(r.hidden)},
                     {"threshold", r.threshold},
                     {"test_error", r.test_error}};
    if (r.input_scored) j["input"] = side(r.input);
    if (r.auroc) j["auroc"] = *r.auroc;
    return j;
}

// ---------------------------------------------------------------------------
// Heatmaps

// One binary PGM (P5) per node: absolute values min-max scaled to 0..255.
// All-zero (or constant-zero-range) vectors render all black.
inline std::string heatmap_pgm(const std::vector<double>& v, int rows, int cols) {
    if (rows * cols != static_cast<int>(v.size()))
        throw std::invalid_argument("heatmap: grid does not match vector length");
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (double x : v) {
        const double m = std::fabs(x);
        lo = std::min(lo, m);
        hi = std::max(hi, m);
    }
    std::string out = "P5\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n255\n";
    for (double x : v) {
        int pixel = 0;
        if (hi > lo) {
            pixel = static_cast<int>(std::lround(255.0 * (std::fabs(x) - lo) / (hi - lo)));
        } else if (hi > 0) {
            pixel = 255;
        }
        out.push_back(static_cast<char>(static_cast<unsigned char>(pixel)));
    }
    return out;
}

// Writes heatmaps/<tag>.pgm per node plus projections.csv of raw vectors.
inline void render_heatmaps(const ProjectionSet& ps, int grid_rows, int grid_cols,
                            const std::filesystem::path& out_dir) {
    if (grid_rows * grid_cols != ps.output_dim)
        throw std::invalid_argument("render_heatmaps: grid does not match output dimension");
    std::filesystem::create_directories(out_dir);

    std::ostringstream csv;
    csv << "node,layer,index";
    for (int c = 0; c < ps.output_dim; ++c) csv << ",v_" << c;
    csv << '\n';

    auto emit = [&](const std::string& tag, int layer, int index, const std::vector<double>& v) {
        atomic_write_file(out_dir / (tag + ".pgm"), heatmap_pgm(v, grid_rows, grid_cols));
        csv << tag << ',' << layer << ',' << index;
        for (double x : v) csv << ',' << format_double(x);
        csv << '\n';
    };

    for (const auto& node : ps.nodes) {
        const std::string tag =
            (node.kind == ProjectionNodeKind::HIDDEN ? "hidden_l" : "input_copy_l") +
            std::to_string(node.layer) + "_n" + std::to_string(node.index);
        emit(tag, node.layer, node.index, node.v);
    }
    for (std::size_t i = 0; i < ps.input_sums.size(); ++i)
        emit("input_sum_" + std::to_string(i), -1, static_cast<int>(i), ps.input_sums[i]);

    atomic_write_file(out_dir / "projections.csv", csv.str());
}

}  // namespace rinnlab
