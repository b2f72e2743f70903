#pragma once

// Shared test fixtures: hand-constructed models and pattern vectors tied to
// the built-in 16x16 ground truth instance.

#include <vector>

#include "rinnlab/evaluate.hpp"
#include "rinnlab/graph.hpp"
#include "rinnlab/network.hpp"

namespace fixtures {

// The ground-truth graph expressed as a RINN: hidden sizes {4, 3} mirror
// the two latent layers, W1 carries the input->h1 edges, W2's hidden block
// h1->h2 and its redundant block the direct input->h2 edges, W3 the
// h2->output edges. All weights are 1; projecting this model reproduces the
// ground-truth patterns exactly.
inline rinnlab::NetworkModel gt16_adjacency_model() {
    using namespace rinnlab;
    const CausalDag dag = canonical_dag();
    Architecture arch;
    arch.kind = ArchKind::RINN;
    arch.input_dim = 16;
    arch.output_dim = 16;
    arch.hidden_sizes = {4, 3};
    arch.activation = Activation::RELU;
    arch.output_activation = OutputActivation::IDENTITY;

    NetworkModel m;
    m.arch = arch;
    m.weights = {Matrix(16, 4), Matrix(4 + 16, 3), Matrix(3, 16)};
    m.biases = {std::vector<double>(4, 0.0), std::vector<double>(3, 0.0),
                std::vector<double>(16, 0.0)};

    const auto h1 = std::vector<std::string>{"A", "B", "C", "D"};
    const auto h2 = std::vector<std::string>{"E", "F", "G"};
    auto h1_pos = [&](int node) {
        for (std::size_t k = 0; k < h1.size(); ++k)
            if (dag.node_index(h1[k]) == node) return static_cast<int>(k);
        return -1;
    };
    auto h2_pos = [&](int node) {
        for (std::size_t k = 0; k < h2.size(); ++k)
            if (dag.node_index(h2[k]) == node) return static_cast<int>(k);
        return -1;
    };

    for (const auto& [s, d] : dag.edges()) {
        const auto& src = dag.node(s);
        const auto& dst = dag.node(d);
        if (src.role == Role::INPUT) {
            const int input = std::stoi(src.id.substr(1));
            if (const int col = h1_pos(d); col >= 0) m.weights[0](input, col) = 1.0;
            if (const int col = h2_pos(d); col >= 0) m.weights[1](4 + input, col) = 1.0;
        } else if (src.role == Role::LATENT && dst.role == Role::LATENT) {
            m.weights[1](h1_pos(s), h2_pos(d)) = 1.0;
        } else if (dst.role == Role::OUTPUT) {
            m.weights[2](h2_pos(s), dag.output_position(d)) = 1.0;
        }
    }
    m.validate_shapes();
    return m;
}

// Ground-truth latent pattern masks in a fixed order: E, F, G, A, B, C, D.
inline std::vector<std::vector<std::uint8_t>> gt16_latent_masks() {
    using namespace rinnlab;
    const CausalDag dag = canonical_dag();
    std::vector<std::vector<std::uint8_t>> masks;
    for (const char* id : {"E", "F", "G", "A", "B", "C", "D"})
        masks.push_back(output_mask(dag, dag.node_index(id)));
    return masks;
}

// Scales a binary mask into a real projection vector.
inline std::vector<double> scaled(const std::vector<std::uint8_t>& mask, double value) {
    std::vector<double> v(mask.size(), 0.0);
    for (std::size_t i = 0; i < mask.size(); ++i) v[i] = mask[i] ? value : 0.0;
    return v;
}

}  // namespace fixtures
