#pragma once

// Constrained evolutionary strategy (ES-C): optimizes the weights of a
// RINN-shaped network over a finite weight alphabet. Genomes are the weight
// matrices flattened row-major (biases stay zero); fitness is the prediction
// loss plus the L1 penalty on a fixed subsample of the training split.
// Generations carry the previous elites forward, mate two random elites
// gene-by-gene and re-draw mutated genes uniformly from the alphabet.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rinnlab/io.hpp"
#include "rinnlab/network.hpp"
#include "rinnlab/rng.hpp"
#include "rinnlab/thread_pool.hpp"

namespace rinnlab {

struct EsConfig {
    int population_size = 200;
    double elite_ratio = 0.20;
    double mutation_rate = 0.01;
    std::vector<double> legal_weights{-1.0, -0.5, 0.0, 0.5, 1.0};
    int generations = 1000;  // hard cap 13000
    double l1_rate = 0.0;
    LossKind loss = LossKind::MSE;
    double data_fraction = 0.20;
    std::uint64_t seed = 0;

    void validate() const {
        if (population_size < 2) throw std::invalid_argument("es: population_size must be >= 2");
        if (!(elite_ratio > 0 && elite_ratio < 1))
            throw std::invalid_argument("es: elite_ratio must lie in (0,1)");
        if (!(mutation_rate >= 0 && mutation_rate < 1))
            throw std::invalid_argument("es: mutation_rate must lie in [0,1)");
        if (generations < 1 || generations > 13000)
            throw std::invalid_argument("es: generations must lie in [1, 13000]");
        if (!(data_fraction > 0 && data_fraction <= 1))
            throw std::invalid_argument("es: data_fraction must lie in (0,1]");
        if (l1_rate < 0) throw std::invalid_argument("es: l1_rate must be nonnegative");
        if (std::find(legal_weights.begin(), legal_weights.end(), 0.0) == legal_weights.end())
            throw std::invalid_argument("es: legal_weights must contain 0");
    }
};

struct Individual {
    std::vector<double> genome;
    double fitness = 0.0;  // lower is better
};

inline std::size_t genome_length(const Architecture& arch) {
    std::size_t len = 0;
    for (int i = 0; i < arch.weight_count(); ++i)
        len += static_cast<std::size_t>(arch.weight_rows(i)) *
               static_cast<std::size_t>(arch.weight_cols(i));
    return len;
}

inline NetworkModel decode_genome(const Architecture& arch, const std::vector<double>& genome,
                                  std::uint64_t seed = 0) {
    if (genome.size() != genome_length(arch))
        throw std::invalid_argument("es: genome length does not match architecture");
    NetworkModel m;
    m.arch = arch;
    m.seed = seed;
    std::size_t at = 0;
    for (int i = 0; i < arch.weight_count(); ++i) {
        Matrix w(arch.weight_rows(i), arch.weight_cols(i));
        std::copy(genome.begin() + static_cast<std::ptrdiff_t>(at),
                  genome.begin() + static_cast<std::ptrdiff_t>(at + w.v.size()), w.v.begin());
        at += w.v.size();
        m.weights.push_back(std::move(w));
        m.biases.emplace_back(static_cast<std::size_t>(arch.weight_cols(i)), 0.0);
    }
    return m;
}

// Objective for one genome: forward-only loss plus the L1 penalty.
inline double es_fitness(const std::vector<double>& genome, const Architecture& arch,
                         const Matrix& x, const Matrix& y, double l1_rate, LossKind loss) {
    const NetworkModel m = decode_genome(arch, genome);
    double l1 = 0.0;
    for (double g : genome) l1 += std::fabs(g);
    return prediction_loss(m, x, y, loss) + l1_rate * l1;
}

struct EsTraceRow {
    int generation = 0;
    double best = 0.0;
    double mean = 0.0;
    double elite_cutoff = 0.0;
};

struct EsResult {
    NetworkModel model;
    std::vector<EsTraceRow> trace;
    double best_fitness = 0.0;
};

namespace detail {

inline std::uint64_t genome_hash(const std::vector<double>& g) {
    std::string bytes(reinterpret_cast<const char*>(g.data()), g.size() * sizeof(double));
    return fnv1a64(bytes);
}

}  // namespace detail

inline EsResult es_optimize(const Architecture& arch, const Matrix& x, const Matrix& y,
                            const std::vector<int>& train_idx, const EsConfig& config,
                            int jobs = 1) {
    config.validate();
    if (arch.kind != ArchKind::RINN)
        throw std::invalid_argument("es_optimize: architecture must be RINN-shaped");
    arch.validate();

    // Fixed seeded subsample of the training split, chosen once per run.
    Rng data_rng(substream(config.seed, "es-data"));
    const int n_sub = std::max(1, static_cast<int>(std::floor(
                                      config.data_fraction *
                                      static_cast<double>(train_idx.size()))));
    std::vector<int> pick = train_idx;
    data_rng.shuffle(pick);
    pick.resize(static_cast<std::size_t>(n_sub));
    Matrix xs(n_sub, x.cols);
    Matrix ys(n_sub, y.cols);
    for (int r = 0; r < n_sub; ++r) {
        std::copy(x.row(pick[static_cast<std::size_t>(r)]),
                  x.row(pick[static_cast<std::size_t>(r)]) + x.cols, xs.row(r));
        std::copy(y.row(pick[static_cast<std::size_t>(r)]),
                  y.row(pick[static_cast<std::size_t>(r)]) + y.cols, ys.row(r));
    }

    const std::size_t len = genome_length(arch);
    const int pop = config.population_size;
    const int elite_count =
        std::max(1, static_cast<int>(std::floor(config.elite_ratio * pop)));

    std::vector<Individual> population(static_cast<std::size_t>(pop));
    for (auto& ind : population) ind.genome.assign(len, 0.0);
    std::vector<Individual> elites;

    std::vector<double> best_genome(len, 0.0);
    double best_fitness = std::numeric_limits<double>::infinity();
    EsResult result;

    for (int gen = 0; gen < config.generations; ++gen) {
        parallel_for(pop, jobs, [&](int i) {
            auto& ind = population[static_cast<std::size_t>(i)];
            ind.fitness = es_fitness(ind.genome, arch, xs, ys, config.l1_rate, config.loss);
        });
        double mean = 0.0;
        for (const auto& ind : population) {
            if (!std::isfinite(ind.fitness))
                throw std::runtime_error("es_optimize: non-finite fitness at generation " +
                                         std::to_string(gen));
            mean += ind.fitness;
        }
        mean /= pop;

        // Selection pool: current population plus the previous elites with
        // their recorded fitness.
        std::vector<const Individual*> pool;
        pool.reserve(population.size() + elites.size());
        for (const auto& ind : population) pool.push_back(&ind);
        for (const auto& ind : elites) pool.push_back(&ind);
        std::stable_sort(pool.begin(), pool.end(), [](const Individual* a, const Individual* b) {
            if (a->fitness != b->fitness) return a->fitness < b->fitness;
            return detail::genome_hash(a->genome) < detail::genome_hash(b->genome);
        });
        const int n_elite = std::min<int>(elite_count, static_cast<int>(pool.size()));
        std::vector<Individual> new_elites;
        new_elites.reserve(static_cast<std::size_t>(n_elite));
        for (int e = 0; e < n_elite; ++e) new_elites.push_back(*pool[static_cast<std::size_t>(e)]);
        elites = std::move(new_elites);

        if (elites.front().fitness < best_fitness) {
            best_fitness = elites.front().fitness;
            best_genome = elites.front().genome;
        }
        result.trace.push_back({gen, best_fitness, mean, elites.back().fitness});

        if (gen + 1 == config.generations) break;

        // Variation: uniform 50/50 crossover of two random elites (possibly
        // the same one), then per-gene mutation re-drawn from the alphabet.
        Rng var_rng(substream(config.seed, static_cast<std::uint64_t>(gen) * 2 + 11));
        const std::size_t n_alpha = config.legal_weights.size();
        for (auto& child : population) {
            const auto& pa =
                elites[static_cast<std::size_t>(var_rng.uniform_index(elites.size()))].genome;
            const auto& pb =
                elites[static_cast<std::size_t>(var_rng.uniform_index(elites.size()))].genome;
            for (std::size_t g = 0; g < len; ++g)
                child.genome[g] = var_rng.bernoulli(0.5) ? pa[g] : pb[g];
            for (std::size_t g = 0; g < len; ++g)
                if (var_rng.bernoulli(config.mutation_rate))
                    child.genome[g] =
                        config.legal_weights[static_cast<std::size_t>(
                            var_rng.uniform_index(n_alpha))];
        }
    }

    result.best_fitness = best_fitness;
    result.model = decode_genome(arch, best_genome, config.seed);
    result.model.record.epochs_run = config.generations;
    result.model.record.best_val_loss = best_fitness;
    result.model.record.weight_l1 = weight_l1(result.model);
    return result;
}

inline std::string es_trace_csv(const std::vector<EsTraceRow>& trace) {
    std::ostringstream out;
    out << "generation,best,mean,elite_cutoff\n";
    for (const auto& row : trace)
        out << row.generation << ',' << format_double(row.best) << ','
            << format_double(row.mean) << ',' << format_double(row.elite_cutoff) << '\n';
    return out.str();
}

}  // namespace rinnlab
