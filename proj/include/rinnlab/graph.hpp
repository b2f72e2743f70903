#pragma once

// Layered causal DAGs over inputs X, latents L, and outputs Y: the ground
// truth graph, its modification (latent deletion steps that retain
// identifiable structure), and the output-space reachability patterns that
// the evaluation pipeline scores against.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rinnlab/io.hpp"

namespace rinnlab {

enum class Role { INPUT, LATENT, OUTPUT };

inline const char* role_name(Role r) {
    switch (r) {
        case Role::INPUT: return "INPUT";
        case Role::LATENT: return "LATENT";
        default: return "OUTPUT";
    }
}

inline std::optional<Role> parse_role(const std::string& s) {
    if (s == "INPUT") return Role::INPUT;
    if (s == "LATENT") return Role::LATENT;
    if (s == "OUTPUT") return Role::OUTPUT;
    return std::nullopt;
}

struct DagNode {
    std::string id;
    Role role = Role::LATENT;
    int layer = 0;
};

// One node's output-space footprint: mask[j] = 1 iff output j is a
// descendant of the node.
struct GroundTruthPattern {
    std::string node;
    std::vector<std::uint8_t> mask;
};

class CausalDag {
  public:
    CausalDag() = default;

    // Throws std::invalid_argument unless the node/edge lists form a DAG
    // with a grid matching the output count. Role-structure rules (no X-X
    // or Y-Y edges, outputs sinks, a latent on every X->Y path) are checked
    // separately by validate_assumptions(); modify() accepts graphs that
    // break them.
    CausalDag(std::vector<DagNode> nodes, std::vector<std::pair<std::string, std::string>> edges,
              int grid_rows, int grid_cols)
        : nodes_(std::move(nodes)), grid_rows_(grid_rows), grid_cols_(grid_cols) {
        for (int i = 0; i < node_count(); ++i) {
            const auto& n = nodes_[static_cast<std::size_t>(i)];
            if (n.layer < 0) throw std::invalid_argument("node " + n.id + ": negative layer");
            if (!index_.emplace(n.id, i).second)
                throw std::invalid_argument("duplicate node id " + n.id);
        }
        adj_.assign(nodes_.size(), {});
        radj_.assign(nodes_.size(), {});
        for (const auto& [src, dst] : edges) {
            const int s = node_index(src);
            const int d = node_index(dst);
            edges_.emplace_back(s, d);
            adj_[static_cast<std::size_t>(s)].push_back(d);
            radj_[static_cast<std::size_t>(d)].push_back(s);
        }
        for (auto& a : adj_) std::sort(a.begin(), a.end());
        for (auto& a : radj_) std::sort(a.begin(), a.end());
        topo_order_ = topological_sort();
        int outputs = 0;
        for (const auto& n : nodes_)
            if (n.role == Role::OUTPUT) ++outputs;
        if (grid_rows_ * grid_cols_ != outputs)
            throw std::invalid_argument("grid " + std::to_string(grid_rows_) + "x" +
                                        std::to_string(grid_cols_) + " does not cover " +
                                        std::to_string(outputs) + " outputs");
        build_output_index();
    }

    int node_count() const { return static_cast<int>(nodes_.size()); }
    const std::vector<DagNode>& nodes() const { return nodes_; }
    const DagNode& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    const std::vector<int>& children(int i) const { return adj_[static_cast<std::size_t>(i)]; }
    const std::vector<int>& parents(int i) const { return radj_[static_cast<std::size_t>(i)]; }
    int grid_rows() const { return grid_rows_; }
    int grid_cols() const { return grid_cols_; }
    const std::vector<int>& topo_order() const { return topo_order_; }

    int node_index(const std::string& id) const {
        auto it = index_.find(id);
        if (it == index_.end()) throw std::invalid_argument("unknown node " + id);
        return it->second;
    }
    bool has_node(const std::string& id) const { return index_.count(id) != 0; }

    std::vector<int> nodes_with_role(Role r) const {
        std::vector<int> out;
        for (int i = 0; i < node_count(); ++i)
            if (node(i).role == r) out.push_back(i);
        return out;
    }

    // Output nodes in id-declaration order; position in this list is the
    // heatmap pixel index.
    const std::vector<int>& output_nodes() const { return output_nodes_; }
    int output_position(int node_idx) const {
        return output_pos_[static_cast<std::size_t>(node_idx)];
    }

    // Iterative DFS descendant set (the node itself excluded).
    std::vector<std::uint8_t> descendants(int start) const { return reach(start, adj_); }
    std::vector<std::uint8_t> ancestors(int start) const { return reach(start, radj_); }

    // Enforces the role-structure assumptions the generators and the file
    // loader require. Returns an error description, or empty if clean.
    std::string validate_assumptions() const {
        for (const auto& [s, d] : edges_) {
            const Role rs = node(s).role;
            const Role rd = node(d).role;
            if (rs == Role::INPUT && rd == Role::INPUT)
                return "edge " + node(s).id + " -> " + node(d).id + " connects two INPUT nodes";
            if (rs == Role::OUTPUT && rd == Role::OUTPUT)
                return "edge " + node(s).id + " -> " + node(d).id + " connects two OUTPUT nodes";
            if (rs == Role::OUTPUT)
                return "OUTPUT node " + node(s).id + " has an outgoing edge";
            if (rs == Role::INPUT && rd == Role::OUTPUT)
                return "edge " + node(s).id + " -> " + node(d).id +
                       " connects INPUT to OUTPUT without a latent";
        }
        return {};
    }

    bool is_modified_form() const { return validate_assumptions().empty(); }

    std::string to_file_text() const {
        std::ostringstream out;
        for (const auto& n : nodes_)
            out << "node " << n.id << ' ' << role_name(n.role) << ' ' << n.layer << '\n';
        for (const auto& [s, d] : edges_) out << "edge " << node(s).id << ' ' << node(d).id << '\n';
        out << "grid " << grid_rows_ << ' ' << grid_cols_ << '\n';
        return out.str();
    }

  private:
    std::vector<std::uint8_t> reach(int start, const std::vector<std::vector<int>>& next) const {
        std::vector<std::uint8_t> seen(nodes_.size(), 0);
        std::vector<int> stack{start};
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (int v : next[static_cast<std::size_t>(u)]) {
                if (!seen[static_cast<std::size_t>(v)]) {
                    seen[static_cast<std::size_t>(v)] = 1;
                    stack.push_back(v);
                }
            }
        }
        seen[static_cast<std::size_t>(start)] = 0;
        return seen;
    }

    std::vector<int> topological_sort() const {
        std::vector<int> indeg(nodes_.size(), 0);
        for (const auto& [s, d] : edges_) ++indeg[static_cast<std::size_t>(d)];
        std::vector<int> queue;
        for (int i = 0; i < node_count(); ++i)
            if (indeg[static_cast<std::size_t>(i)] == 0) queue.push_back(i);
        std::vector<int> order;
        for (std::size_t qi = 0; qi < queue.size(); ++qi) {
            const int u = queue[qi];
            order.push_back(u);
            for (int v : adj_[static_cast<std::size_t>(u)])
                if (--indeg[static_cast<std::size_t>(v)] == 0) queue.push_back(v);
        }
        if (order.size() != nodes_.size()) throw std::invalid_argument("graph contains a cycle");
        return order;
    }

    void build_output_index() {
        output_pos_.assign(nodes_.size(), -1);
        for (int i = 0; i < node_count(); ++i) {
            if (node(i).role == Role::OUTPUT) {
                output_pos_[static_cast<std::size_t>(i)] = static_cast<int>(output_nodes_.size());
                output_nodes_.push_back(i);
            }
        }
    }

    std::vector<DagNode> nodes_;
    std::vector<std::pair<int, int>> edges_;
    std::map<std::string, int> index_;
    std::vector<std::vector<int>> adj_;
    std::vector<std::vector<int>> radj_;
    std::vector<int> topo_order_;
    std::vector<int> output_nodes_;
    std::vector<int> output_pos_;
    int grid_rows_ = 0;
    int grid_cols_ = 0;
};

// The built-in 16-input / 16-output ground truth instance ("GT-16").
// Latent layer h1 = {A,B,C,D}, h2 = {E,F,G}; E covers the top-left square,
// F the plus sign, G the bottom row of the 4x4 output grid; A, B, C are
// pairwise combinations and D the union of all three. Inputs 0-9 target
// h1 and inputs 10-15 target h2 directly, one latent per input.
inline CausalDag canonical_dag() {
    std::vector<DagNode> nodes;
    std::vector<std::pair<std::string, std::string>> edges;
    for (int i = 0; i < 16; ++i) nodes.push_back({"x" + std::to_string(i), Role::INPUT, 0});
    for (const char* id : {"A", "B", "C", "D"}) nodes.push_back({id, Role::LATENT, 1});
    for (const char* id : {"E", "F", "G"}) nodes.push_back({id, Role::LATENT, 2});
    for (int j = 0; j < 16; ++j) nodes.push_back({"y" + std::to_string(j), Role::OUTPUT, 3});

    const auto input_to = [&](int i, const std::string& latent) {
        edges.emplace_back("x" + std::to_string(i), latent);
    };
    for (int i = 0; i <= 3; ++i) input_to(i, "A");
    for (int i = 4; i <= 5; ++i) input_to(i, "B");
    for (int i = 6; i <= 7; ++i) input_to(i, "C");
    for (int i = 8; i <= 9; ++i) input_to(i, "D");
    for (int i = 10; i <= 11; ++i) input_to(i, "E");
    for (int i = 12; i <= 13; ++i) input_to(i, "F");
    for (int i = 14; i <= 15; ++i) input_to(i, "G");

    edges.emplace_back("A", "E");
    edges.emplace_back("A", "F");
    edges.emplace_back("B", "F");
    edges.emplace_back("B", "G");
    edges.emplace_back("C", "E");
    edges.emplace_back("C", "G");
    edges.emplace_back("D", "E");
    edges.emplace_back("D", "F");
    edges.emplace_back("D", "G");

    const auto latent_to_outputs = [&](const std::string& latent, std::initializer_list<int> ys) {
        for (int y : ys) edges.emplace_back(latent, "y" + std::to_string(y));
    };
    latent_to_outputs("E", {0, 1, 4, 5});
    latent_to_outputs("F", {1, 4, 5, 6, 9});
    latent_to_outputs("G", {12, 13, 14, 15});

    return CausalDag(std::move(nodes), std::move(edges), 4, 4);
}

inline std::vector<std::uint8_t> output_mask(const CausalDag& dag, int node_idx) {
    const auto desc = dag.descendants(node_idx);
    std::vector<std::uint8_t> mask(dag.output_nodes().size(), 0);
    for (std::size_t k = 0; k < dag.output_nodes().size(); ++k)
        mask[k] = desc[static_cast<std::size_t>(dag.output_nodes()[k])];
    return mask;
}

// One pattern per INPUT and LATENT node, in node-declaration order.
inline std::vector<GroundTruthPattern> ground_truth_patterns(const CausalDag& dag) {
    std::vector<GroundTruthPattern> out;
    for (int i = 0; i < dag.node_count(); ++i) {
        if (dag.node(i).role == Role::OUTPUT) continue;
        out.push_back({dag.node(i).id, output_mask(dag, i)});
    }
    return out;
}

// The three-step modification: (i) drop latents with a descendant in X or
// an ancestor in Y; (ii) drop latents with no ancestor in X or no
// descendant in Y; (iii) drop X-X and Y-Y edges. Idempotent.
inline CausalDag modify(const CausalDag& dag) {
    const int n = dag.node_count();
    std::vector<std::uint8_t> removed(static_cast<std::size_t>(n), 0);

    auto touches_role = [&](const std::vector<std::uint8_t>& set, Role r) {
        for (int i = 0; i < n; ++i)
            if (set[static_cast<std::size_t>(i)] && dag.node(i).role == r) return true;
        return false;
    };

    // Step (i), evaluated on the original graph for all latents at once.
    for (int i = 0; i < n; ++i) {
        if (dag.node(i).role != Role::LATENT) continue;
        if (touches_role(dag.descendants(i), Role::INPUT) ||
            touches_role(dag.ancestors(i), Role::OUTPUT))
            removed[static_cast<std::size_t>(i)] = 1;
    }

    // Step (ii) on the post-(i) graph. Reachability restricted to
    // surviving nodes.
    auto restricted_reach = [&](int start, bool forward) {
        std::vector<std::uint8_t> seen(static_cast<std::size_t>(n), 0);
        std::vector<int> stack{start};
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (int v : forward ? dag.children(u) : dag.parents(u)) {
                if (removed[static_cast<std::size_t>(v)] || seen[static_cast<std::size_t>(v)])
                    continue;
                seen[static_cast<std::size_t>(v)] = 1;
                stack.push_back(v);
            }
        }
        seen[static_cast<std::size_t>(start)] = 0;
        return seen;
    };
    std::vector<std::uint8_t> step2(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
        if (dag.node(i).role != Role::LATENT || removed[static_cast<std::size_t>(i)]) continue;
        if (!touches_role(restricted_reach(i, false), Role::INPUT) ||
            !touches_role(restricted_reach(i, true), Role::OUTPUT))
            step2[static_cast<std::size_t>(i)] = 1;
    }
    for (int i = 0; i < n; ++i)
        if (step2[static_cast<std::size_t>(i)]) removed[static_cast<std::size_t>(i)] = 1;

    std::vector<DagNode> nodes;
    for (int i = 0; i < n; ++i)
        if (!removed[static_cast<std::size_t>(i)]) nodes.push_back(dag.node(i));

    std::vector<std::pair<std::string, std::string>> edges;
    for (const auto& [s, d] : dag.edges()) {
        if (removed[static_cast<std::size_t>(s)] || removed[static_cast<std::size_t>(d)]) continue;
        const Role rs = dag.node(s).role;
        const Role rd = dag.node(d).role;
        // Step (iii).
        if ((rs == Role::INPUT && rd == Role::INPUT) ||
            (rs == Role::OUTPUT && rd == Role::OUTPUT))
            continue;
        edges.emplace_back(dag.node(s).id, dag.node(d).id);
    }
    return CausalDag(std::move(nodes), std::move(edges), dag.grid_rows(), dag.grid_cols());
}

// Latents that are identifiable: (i) no descendants in X and no ancestors
// in Y; (ii) X-restricted ancestor set non-empty and unique among the
// clause-(i) latents; (iii) same for the Y-restricted descendant set.
inline std::set<std::string> identifiable_latents(const CausalDag& dag) {
    const int n = dag.node_count();
    std::vector<int> candidates;
    std::vector<std::set<int>> x_anc;
    std::vector<std::set<int>> y_desc;
    for (int i = 0; i < n; ++i) {
        if (dag.node(i).role != Role::LATENT) continue;
        const auto desc = dag.descendants(i);
        const auto anc = dag.ancestors(i);
        bool clause1 = true;
        for (int j = 0; j < n && clause1; ++j) {
            if (desc[static_cast<std::size_t>(j)] && dag.node(j).role == Role::INPUT)
                clause1 = false;
            if (anc[static_cast<std::size_t>(j)] && dag.node(j).role == Role::OUTPUT)
                clause1 = false;
        }
        if (!clause1) continue;
        std::set<int> xa;
        std::set<int> yd;
        for (int j = 0; j < n; ++j) {
            if (anc[static_cast<std::size_t>(j)] && dag.node(j).role == Role::INPUT) xa.insert(j);
            if (desc[static_cast<std::size_t>(j)] && dag.node(j).role == Role::OUTPUT) yd.insert(j);
        }
        candidates.push_back(i);
        x_anc.push_back(std::move(xa));
        y_desc.push_back(std::move(yd));
    }

    std::set<std::string> out;
    for (std::size_t a = 0; a < candidates.size(); ++a) {
        if (x_anc[a].empty() || y_desc[a].empty()) continue;
        bool unique = true;
        for (std::size_t b = 0; b < candidates.size() && unique; ++b) {
            if (a == b) continue;
            if (x_anc[a] == x_anc[b] || y_desc[a] == y_desc[b]) unique = false;
        }
        if (unique) out.insert(dag.node(candidates[a]).id);
    }
    return out;
}

// Text format: `node <id> <INPUT|LATENT|OUTPUT> <layer>`, `edge <src>
// <dst>`, one `grid <rows> <cols>` line; '#' starts a comment. The loader
// enforces the full invariant set including the role-structure rules.
inline CausalDag load_dag_text(const std::string& text, const std::string& origin = "dag") {
    std::vector<DagNode> nodes;
    std::vector<std::pair<std::string, std::string>> edges;
    int grid_rows = -1;
    int grid_cols = -1;

    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& msg) {
        throw std::invalid_argument(origin + ":" + std::to_string(line_no) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string kind;
        if (!(ls >> kind)) continue;
        if (kind == "node") {
            DagNode n;
            std::string role;
            if (!(ls >> n.id >> role >> n.layer)) fail("expected: node <id> <role> <layer>");
            const auto r = parse_role(role);
            if (!r) fail("unknown role " + role);
            n.role = *r;
            nodes.push_back(std::move(n));
        } else if (kind == "edge") {
            std::string s;
            std::string d;
            if (!(ls >> s >> d)) fail("expected: edge <src> <dst>");
            edges.emplace_back(std::move(s), std::move(d));
        } else if (kind == "grid") {
            if (!(ls >> grid_rows >> grid_cols)) fail("expected: grid <rows> <cols>");
        } else {
            fail("unknown directive " + kind);
        }
        std::string extra;
        if (ls >> extra) fail("trailing token " + extra);
    }
    if (grid_rows < 0) throw std::invalid_argument(origin + ": missing grid line");
    try {
        CausalDag dag(std::move(nodes), std::move(edges), grid_rows, grid_cols);
        const std::string issue = dag.validate_assumptions();
        if (!issue.empty()) throw std::invalid_argument(origin + ": " + issue);
        return dag;
    } catch (const std::invalid_argument& e) {
        std::string what = e.what();
        if (what.rfind(origin, 0) == 0) throw;
        throw std::invalid_argument(origin + ": " + what);
    }
}

inline CausalDag load_dag_file(const std::string& path) {
    return load_dag_text(read_file(path), path);
}

inline void save_dag_file(const CausalDag& dag, const std::string& path) {
    atomic_write_file(path, dag.to_file_text());
}

}  // namespace rinnlab
