#pragma once

// Hyperparameter search orchestration and sparsity-vs-error model ranking.
// run_search trains one model per (hyperparameter set x validation fold),
// persisting every model and an append-only search.csv; rank() filters the
// records at the 95% quantile per axis, min-max scales (sum |w|, validation
// loss) and sorts by the Euclidean distance d_x from the origin.

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rinnlab/dataset.hpp"
#include "rinnlab/evolve.hpp"
#include "rinnlab/io.hpp"
#include "rinnlab/network.hpp"
#include "rinnlab/splits.hpp"
#include "rinnlab/thread_pool.hpp"

namespace rinnlab {

enum class Strategy { DNN, RINN, AUTOENCODER, ESC };

inline const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::DNN: return "dnn";
        case Strategy::RINN: return "rinn";
        case Strategy::AUTOENCODER: return "autoencoder";
        default: return "esc";
    }
}
inline Strategy parse_strategy(const std::string& s) {
    if (s == "dnn") return Strategy::DNN;
    if (s == "rinn") return Strategy::RINN;
    if (s == "autoencoder") return Strategy::AUTOENCODER;
    if (s == "esc") return Strategy::ESC;
    throw std::invalid_argument("unknown strategy " + s);
}

enum class SamplingMode { GRID, RANDOM, MIXED };

inline const char* sampling_mode_name(SamplingMode m) {
    switch (m) {
        case SamplingMode::GRID: return "grid";
        case SamplingMode::RANDOM: return "random";
        default: return "mixed";
    }
}
inline SamplingMode parse_sampling_mode(const std::string& s) {
    if (s == "grid") return SamplingMode::GRID;
    if (s == "random") return SamplingMode::RANDOM;
    if (s == "mixed") return SamplingMode::MIXED;
    throw std::invalid_argument("unknown sampling mode " + s);
}

struct SearchSpace {
    double lr_lo = 1e-4, lr_hi = 1e-1;      // log-uniform
    double l1_lo = 1e-5, l1_hi = 1e-1;      // log-uniform
    std::vector<int> hidden_sizes{8, 12, 16, 24, 32};
    std::vector<Activation> activations{Activation::RELU, Activation::SIGMOID, Activation::TANH};
    std::vector<int> dnn_depths{2, 3, 4, 5, 6, 7, 8};
    int rinn_layers = 8;
    std::vector<int> autoencoder_depths{1, 2, 3};  // encoder levels incl. bottleneck
    // ES-C extras.
    std::vector<double> elite_ratios{0.1, 0.2, 0.3};
    double mutation_lo = 1e-3, mutation_hi = 3e-2;  // log-uniform
    std::vector<std::vector<double>> legal_weight_sets{
        {-1.0, -0.5, 0.0, 0.5, 1.0}, {-1.0, 0.0, 1.0}, {-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0}};
    int es_population = 200;
    int es_generations = 500;

    SamplingMode mode = SamplingMode::RANDOM;
    int budget = 1;
    // Trainer knobs shared by every candidate.
    int batch_size = 64;
    int max_epochs = 2000;
    int patience = 50;

    void validate() const {
        if (budget < 1) throw std::invalid_argument("search: budget must be >= 1");
        if (hidden_sizes.empty() || activations.empty())
            throw std::invalid_argument("search: empty hyperparameter domain");
    }
};

struct HyperParams {
    double learning_rate = 0.01;
    double l1_rate = 1e-3;
    int hidden = 16;
    int depth = 8;  // DNN layer count or autoencoder encoder depth
    Activation activation = Activation::RELU;
    // ES-C extras.
    double elite_ratio = 0.2;
    double mutation_rate = 0.01;
    std::vector<double> legal_weights{-1.0, -0.5, 0.0, 0.5, 1.0};
};

struct CandidateRecord {
    int id = 0;
    int set_index = 0;
    int fold = 0;
    Strategy strategy = Strategy::RINN;
    HyperParams hp;
    std::uint64_t seed = 0;
    std::string status = "ok";  // "ok" or an error note
    double val_loss = std::numeric_limits<double>::infinity();
    double weight_sum = std::numeric_limits<double>::infinity();
    std::string model_path;
    double d_x = std::numeric_limits<double>::quiet_NaN();  // filled by rank()

    bool ok() const {
        return status == "ok" && std::isfinite(val_loss) && std::isfinite(weight_sum);
    }
};

// ---------------------------------------------------------------------------
// Sampling

namespace detail {

inline double log_uniform(Rng& rng, double lo, double hi) {
    return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

inline double log_grid_point(double lo, double hi, int i, int n) {
    if (n <= 1) return lo;
    return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n - 1));
}

}  // namespace detail

// Hyperparameter set for a given set index; independent of which jobs of
// the budget actually run, so resumed searches reproduce the schedule.
inline HyperParams sample_hyperparams(const SearchSpace& space, Strategy strategy, int set_index,
                                      std::uint64_t master_seed) {
    HyperParams hp;
    const bool use_grid =
        space.mode == SamplingMode::GRID ||
        (space.mode == SamplingMode::MIXED && set_index % 2 == 0);
    if (use_grid) {
        // Cycle a coarse cartesian grid: 5 log points per continuous axis.
        constexpr int kLogPoints = 5;
        std::uint64_t ix = static_cast<std::uint64_t>(set_index);
        auto next = [&ix](std::size_t n) {
            const auto r = ix % n;
            ix /= n;
            return static_cast<std::size_t>(r);
        };
        hp.learning_rate = detail::log_grid_point(
            space.lr_lo, space.lr_hi, static_cast<int>(next(kLogPoints)), kLogPoints);
        hp.l1_rate = detail::log_grid_point(space.l1_lo, space.l1_hi,
                                            static_cast<int>(next(kLogPoints)), kLogPoints);
        hp.hidden = space.hidden_sizes[next(space.hidden_sizes.size())];
        hp.activation = space.activations[next(space.activations.size())];
        hp.depth = strategy == Strategy::DNN
                       ? space.dnn_depths[next(space.dnn_depths.size())]
                       : (strategy == Strategy::AUTOENCODER
                              ? space.autoencoder_depths[next(space.autoencoder_depths.size())]
                              : space.rinn_layers);
        if (strategy == Strategy::ESC) {
            hp.elite_ratio = space.elite_ratios[next(space.elite_ratios.size())];
            hp.mutation_rate = detail::log_grid_point(
                space.mutation_lo, space.mutation_hi, static_cast<int>(next(kLogPoints)),
                kLogPoints);
            hp.legal_weights = space.legal_weight_sets[next(space.legal_weight_sets.size())];
        }
        return hp;
    }

    Rng rng(substream(master_seed, static_cast<std::uint64_t>(set_index) * 4 + 3));
    hp.learning_rate = detail::log_uniform(rng, space.lr_lo, space.lr_hi);
    hp.l1_rate = detail::log_uniform(rng, space.l1_lo, space.l1_hi);
    hp.hidden = space.hidden_sizes[static_cast<std::size_t>(
        rng.uniform_index(space.hidden_sizes.size()))];
    hp.activation = space.activations[static_cast<std::size_t>(
        rng.uniform_index(space.activations.size()))];
    switch (strategy) {
        case Strategy::DNN:
            hp.depth = space.dnn_depths[static_cast<std::size_t>(
                rng.uniform_index(space.dnn_depths.size()))];
            break;
        case Strategy::AUTOENCODER:
            hp.depth = space.autoencoder_depths[static_cast<std::size_t>(
                rng.uniform_index(space.autoencoder_depths.size()))];
            break;
        default:
            hp.depth = space.rinn_layers;
            break;
    }
    if (strategy == Strategy::ESC) {
        hp.elite_ratio = space.elite_ratios[static_cast<std::size_t>(
            rng.uniform_index(space.elite_ratios.size()))];
        hp.mutation_rate = detail::log_uniform(rng, space.mutation_lo, space.mutation_hi);
        hp.legal_weights = space.legal_weight_sets[static_cast<std::size_t>(
            rng.uniform_index(space.legal_weight_sets.size()))];
    }
    return hp;
}

// Strictly decreasing encoder sizes for an autoencoder of the given depth,
// starting from the sampled width and halving (floor 2).
inline std::vector<int> autoencoder_sizes(int width, int depth) {
    std::vector<int> sizes;
    int w = width;
    for (int i = 0; i < depth; ++i) {
        sizes.push_back(w);
        w = std::max(2, w / 2);
        if (!sizes.empty() && w >= sizes.back()) w = sizes.back() - 1;
        if (w < 1) w = 1;
    }
    return sizes;
}

inline Architecture candidate_architecture(Strategy strategy, const HyperParams& hp, int p, int q,
                                           bool binary_targets) {
    const OutputActivation out =
        binary_targets ? OutputActivation::SIGMOID : OutputActivation::IDENTITY;
    switch (strategy) {
        case Strategy::DNN:
            return dnn_architecture(p, q, hp.hidden, hp.depth, hp.activation, out);
        case Strategy::AUTOENCODER:
            return autoencoder_architecture(q, autoencoder_sizes(hp.hidden, hp.depth),
                                            hp.activation, out);
        default:
            return rinn_architecture(p, q, hp.hidden, hp.depth, hp.activation, out);
    }
}

// ---------------------------------------------------------------------------
// search.csv

namespace detail {

inline std::string weights_token(const std::vector<double>& ws) {
    std::string out;
    for (std::size_t i = 0; i < ws.size(); ++i) {
        if (i) out += ';';
        out += format_double(ws[i]);
    }
    return out;
}

inline std::vector<double> parse_weights_token(const std::string& tok) {
    std::vector<double> out;
    std::istringstream in(tok);
    std::string part;
    while (std::getline(in, part, ';'))
        if (!part.empty()) out.push_back(std::stod(part));
    return out;
}

}  // namespace detail

inline const char* kSearchCsvHeader =
    "id,set,fold,strategy,activation,hidden,depth,lr,l1,elite_ratio,mutation_rate,"
    "legal_weights,seed,status,val_loss,weight_sum,model_path";

inline std::string record_csv_line(const CandidateRecord& r) {
    std::ostringstream out;
    out << r.id << ',' << r.set_index << ',' << r.fold << ',' << strategy_name(r.strategy) << ','
        << activation_name(r.hp.activation) << ',' << r.hp.hidden << ',' << r.hp.depth << ','
        << format_double(r.hp.learning_rate) << ',' << format_double(r.hp.l1_rate) << ','
        << format_double(r.hp.elite_ratio) << ',' << format_double(r.hp.mutation_rate) << ','
        << detail::weights_token(r.hp.legal_weights) << ',' << r.seed << ',' << r.status << ','
        << format_double(r.val_loss) << ',' << format_double(r.weight_sum) << ',' << r.model_path;
    return out.str();
}

inline CandidateRecord record_from_csv_line(const std::string& line) {
    const auto cells = split_csv_line(line);
    if (cells.size() != 17)
        throw std::runtime_error("search.csv: malformed line: " + line);
    CandidateRecord r;
    r.id = std::stoi(cells[0]);
    r.set_index = std::stoi(cells[1]);
    r.fold = std::stoi(cells[2]);
    r.strategy = parse_strategy(cells[3]);
    r.hp.activation = parse_activation(cells[4]);
    r.hp.hidden = std::stoi(cells[5]);
    r.hp.depth = std::stoi(cells[6]);
    r.hp.learning_rate = std::stod(cells[7]);
    r.hp.l1_rate = std::stod(cells[8]);
    r.hp.elite_ratio = std::stod(cells[9]);
    r.hp.mutation_rate = std::stod(cells[10]);
    r.hp.legal_weights = detail::parse_weights_token(cells[11]);
    r.seed = std::stoull(cells[12]);
    r.status = cells[13];
    r.val_loss = std::stod(cells[14]);
    r.weight_sum = std::stod(cells[15]);
    r.model_path = cells[16];
    return r;
}

inline std::vector<CandidateRecord> load_search_csv(const std::filesystem::path& path) {
    std::vector<CandidateRecord> records;
    std::ifstream in(path);
    if (!in) return records;
    std::string line;
    if (!std::getline(in, line)) return records;
    while (std::getline(in, line))
        if (!line.empty()) records.push_back(record_from_csv_line(line));
    return records;
}

// ---------------------------------------------------------------------------
// run_search

inline nlohmann::json search_space_to_json(const SearchSpace& s, Strategy strategy,
                                           std::uint64_t master_seed);

// Writes completed records to search.csv in id order as jobs finish, so the
// file is append-only with a single writer and byte-identical across
// scheduling. Re-running with the same output directory skips ids already
// recorded.
inline std::vector<CandidateRecord> run_search(const SearchSpace& space, Strategy strategy,
                                               const Dataset& dataset, const SplitPlan& plan,
                                               const std::filesystem::path& out_dir,
                                               std::uint64_t master_seed, int jobs = 1) {
    space.validate();
    if (plan.folds.size() != 2)
        throw std::invalid_argument("run_search: split plan must carry two folds");
    std::filesystem::create_directories(out_dir / "models");

    const bool binary = dataset.y_kind == ValueKind::BINARY;
    const LossKind loss = binary ? LossKind::BCE : LossKind::MSE;
    const int n_jobs = space.budget * 2;

    std::map<int, CandidateRecord> done;
    for (auto& r : load_search_csv(out_dir / "search.csv")) done.emplace(r.id, std::move(r));

    std::ofstream csv;
    if (done.empty()) {
        csv.open(out_dir / "search.csv", std::ios::trunc);
        csv << kSearchCsvHeader << '\n';
    } else {
        csv.open(out_dir / "search.csv", std::ios::app);
    }
    if (!csv) throw std::runtime_error("cannot write " + (out_dir / "search.csv").string());

    std::vector<CandidateRecord> results(static_cast<std::size_t>(n_jobs));
    std::vector<char> ready(static_cast<std::size_t>(n_jobs), 0);
    std::mutex write_mutex;
    int next_to_write = 0;
    auto flush_ready = [&](int id, CandidateRecord rec) {
        std::lock_guard<std::mutex> lock(write_mutex);
        results[static_cast<std::size_t>(id)] = std::move(rec);
        ready[static_cast<std::size_t>(id)] = 1;
        while (next_to_write < n_jobs && ready[static_cast<std::size_t>(next_to_write)]) {
            if (!done.count(next_to_write))
                csv << record_csv_line(results[static_cast<std::size_t>(next_to_write)]) << '\n';
            ++next_to_write;
        }
        csv.flush();
    };

    parallel_for(n_jobs, jobs, [&](int id) {
        if (auto it = done.find(id); it != done.end()) {
            flush_ready(id, it->second);
            return;
        }
        CandidateRecord rec;
        rec.id = id;
        rec.set_index = id / 2;
        rec.fold = id % 2;
        rec.strategy = strategy;
        rec.hp = sample_hyperparams(space, strategy, rec.set_index, master_seed);
        rec.seed = substream(master_seed, static_cast<std::uint64_t>(id) * 2 + 1);
        const SplitFold& fold = plan.folds[static_cast<std::size_t>(rec.fold)];
        try {
            NetworkModel model;
            if (strategy == Strategy::ESC) {
                EsConfig es;
                es.population_size = space.es_population;
                es.generations = space.es_generations;
                es.elite_ratio = rec.hp.elite_ratio;
                es.mutation_rate = rec.hp.mutation_rate;
                es.legal_weights = rec.hp.legal_weights;
                es.l1_rate = rec.hp.l1_rate;
                es.loss = loss;
                es.seed = rec.seed;
                const Architecture arch = candidate_architecture(
                    Strategy::RINN, rec.hp, dataset.n_inputs(), dataset.n_outputs(), binary);
                auto es_result = es_optimize(arch, dataset.X, dataset.Y, fold.train, es);
                model = std::move(es_result.model);
                model.record.best_val_loss =
                    detail::eval_loss(model, dataset.X, dataset.Y, fold.val, loss);
                model.record.weight_l1 = weight_l1(model);
            } else {
                TrainConfig cfg;
                cfg.learning_rate = rec.hp.learning_rate;
                cfg.l1_rate = rec.hp.l1_rate;
                cfg.batch_size = space.batch_size;
                cfg.max_epochs = space.max_epochs;
                cfg.patience = space.patience;
                cfg.loss = loss;
                cfg.seed = rec.seed;
                const Architecture arch = candidate_architecture(
                    strategy, rec.hp, dataset.n_inputs(), dataset.n_outputs(), binary);
                model = strategy == Strategy::AUTOENCODER
                            ? train_autoencoder(arch, dataset.Y, fold.train, fold.val, cfg)
                            : train(arch, dataset.X, dataset.Y, fold.train, fold.val, cfg);
            }
            rec.val_loss = model.record.best_val_loss;
            rec.weight_sum = model.record.weight_l1;
            // Relative to out_dir so the search directory is relocatable.
            rec.model_path = "models/" + std::to_string(id) + ".json";
            save_model(model, (out_dir / rec.model_path).string());
        } catch (const std::exception& e) {
            rec.status = std::string("failed: ") + e.what();
            rec.val_loss = std::numeric_limits<double>::infinity();
            rec.weight_sum = std::numeric_limits<double>::infinity();
        }
        flush_ready(id, std::move(rec));
    });

    atomic_write_file(out_dir / "search_config.json",
                      search_space_to_json(space, strategy, master_seed).dump(2) + "\n");
    return results;
}

// ---------------------------------------------------------------------------
// Ranking

// 95% quantile, linear interpolation on (n+1)h ranks so small record sets
// keep their extremes (two records: the quantile is the maximum).
inline double quantile95(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("quantile95: no values");
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    const double h = 0.95 * (n + 1);
    if (h <= 1.0) return values.front();
    if (h >= n) return values.back();
    const auto k = static_cast<std::size_t>(h);  // 1-indexed lower rank
    const double frac = h - static_cast<double>(k);
    return values[k - 1] + frac * (values[k] - values[k - 1]);
}

// Drops records strictly above the 95% quantile on either axis, min-max
// scales the survivors and fills d_x = sqrt(sw^2 + sl^2); returns survivors
// sorted ascending (ties: lower loss, lower weight sum, lower id).
inline std::vector<CandidateRecord> rank(const std::vector<CandidateRecord>& records) {
    std::vector<CandidateRecord> ok;
    for (const auto& r : records)
        if (r.ok()) ok.push_back(r);
    if (ok.size() < 2) throw std::invalid_argument("rank: need at least 2 usable records");

    std::vector<double> ws;
    std::vector<double> ls;
    for (const auto& r : ok) {
        ws.push_back(r.weight_sum);
        ls.push_back(r.val_loss);
    }
    const double wq = quantile95(ws);
    const double lq = quantile95(ls);

    std::vector<CandidateRecord> survivors;
    for (const auto& r : ok)
        if (r.weight_sum <= wq && r.val_loss <= lq) survivors.push_back(r);
    if (survivors.empty()) throw std::runtime_error("rank: all records filtered by the quantile cut");

    double wmin = survivors.front().weight_sum, wmax = wmin;
    double lmin = survivors.front().val_loss, lmax = lmin;
    for (const auto& r : survivors) {
        wmin = std::min(wmin, r.weight_sum);
        wmax = std::max(wmax, r.weight_sum);
        lmin = std::min(lmin, r.val_loss);
        lmax = std::max(lmax, r.val_loss);
    }
    auto scale = [](double v, double lo, double hi) {
        return hi > lo ? (v - lo) / (hi - lo) : 0.0;
    };
    for (auto& r : survivors) {
        const double sw = scale(r.weight_sum, wmin, wmax);
        const double sl = scale(r.val_loss, lmin, lmax);
        r.d_x = std::sqrt(sw * sw + sl * sl);
    }
    std::sort(survivors.begin(), survivors.end(),
              [](const CandidateRecord& a, const CandidateRecord& b) {
                  if (a.d_x != b.d_x) return a.d_x < b.d_x;
                  if (a.val_loss != b.val_loss) return a.val_loss < b.val_loss;
                  if (a.weight_sum != b.weight_sum) return a.weight_sum < b.weight_sum;
                  return a.id < b.id;
              });
    return survivors;
}

inline std::vector<CandidateRecord> top_k(const std::vector<CandidateRecord>& ranked,
                                          int k = 10) {
    if (k > static_cast<int>(ranked.size()))
        throw std::invalid_argument("top_k: only " + std::to_string(ranked.size()) +
                                    " records survive, requested " + std::to_string(k));
    return {ranked.begin(), ranked.begin() + k};
}

inline nlohmann::json search_space_to_json(const SearchSpace& s, Strategy strategy,
                                           std::uint64_t master_seed) {
    nlohmann::json acts = nlohmann::json::array();
    for (auto a : s.activations) acts.push_back(activation_name(a));
    return {{"strategy", strategy_name(strategy)},
            {"mode", sampling_mode_name(s.mode)},
            {"budget", s.budget},
            {"seed", master_seed},
            {"lr", {s.lr_lo, s.lr_hi}},
            {"l1", {s.l1_lo, s.l1_hi}},
            {"hidden_sizes", s.hidden_sizes},
            {"activations", acts},
            {"dnn_depths", s.dnn_depths},
            {"rinn_layers", s.rinn_layers},
            {"autoencoder_depths", s.autoencoder_depths},
            {"batch_size", s.batch_size},
            {"max_epochs", s.max_epochs},
            {"patience", s.patience},
            {"es_population", s.es_population},
            {"es_generations", s.es_generations}};
}

}  // namespace rinnlab
