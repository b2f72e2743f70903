// rinnlab: command-line harness for the latent-causal-structure toolkit.
//
// Subcommands: simulate, train, search, evolve, score, graph. Every
// invocation takes one master seed (flag or RINNLAB_SEED), derives all
// randomness from it, and writes a manifest.json listing content digests of
// the files it read and wrote.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rinnlab/dataset.hpp"
#include "rinnlab/evaluate.hpp"
#include "rinnlab/evolve.hpp"
#include "rinnlab/graph.hpp"
#include "rinnlab/io.hpp"
#include "rinnlab/manifest.hpp"
#include "rinnlab/network.hpp"
#include "rinnlab/select.hpp"
#include "rinnlab/simulate.hpp"
#include "rinnlab/splits.hpp"
#include "rinnlab/thread_pool.hpp"

namespace fs = std::filesystem;
using namespace rinnlab;

namespace {

CausalDag resolve_dag(const std::string& spec) {
    if (spec == "gt16") return canonical_dag();
    return load_dag_file(spec);
}

bool dag_is_builtin(const std::string& spec) { return spec == "gt16"; }

double matrix_mean(const Matrix& m) {
    if (m.v.empty()) return 0.0;
    double s = 0.0;
    for (double x : m.v) s += x;
    return s / static_cast<double>(m.v.size());
}

std::vector<double> parse_weight_list(const std::string& token) {
    auto ws = rinnlab::detail::parse_weights_token(token);
    if (ws.empty()) throw CLI::ValidationError("--weights", "empty weight list");
    return ws;
}

struct SimulateArgs {
    std::string generator;
    std::string dag = "gt16";
    int n = 5000;
    double p = 0.10;
    std::string ops = "all-or";
    std::vector<double> beta_true{90.0, 10.0};
    std::vector<double> beta_false{10.0, 90.0};
    int p_in = 634;
    int q_out = 68;
    double density = 0.1;
    std::string core_stem;
    std::string background_stem;
    std::uint64_t seed = 0;
    std::string out = "out";
};

int cmd_simulate(const SimulateArgs& a) {
    ManifestTimer timer;
    RunManifest manifest;
    manifest.subcommand = "simulate";
    manifest.master_seed = a.seed;

    Dataset ds;
    std::optional<CausalDag> dag;
    if (a.generator == "interventional" || a.generator == "linear-gaussian" ||
        a.generator == "logical") {
        dag = resolve_dag(a.dag);
        const std::string issue = dag->validate_assumptions();
        if (!issue.empty()) throw std::runtime_error("dag: " + issue);
        if (!dag_is_builtin(a.dag)) manifest.add_input(a.dag);
    }

    if (a.generator == "interventional") {
        ds = gen_interventional(*dag, a.n, a.p, a.seed);
    } else if (a.generator == "linear-gaussian") {
        ds = gen_linear_gaussian(*dag, a.n, a.seed);
    } else if (a.generator == "logical") {
        std::vector<LogicalOp> ops;
        if (a.ops == "all-or")
            ops = all_ops(*dag, LogicalOp::OR);
        else if (a.ops == "all-and")
            ops = all_ops(*dag, LogicalOp::AND);
        else if (a.ops == "all-xor")
            ops = all_ops(*dag, LogicalOp::XOR);
        else if (a.ops == "random")
            ops = random_ops(*dag, a.seed);
        else
            throw CLI::ValidationError("--ops", "expected all-or|all-and|all-xor|random");
        ds = gen_logical(*dag, a.n, ops, {a.beta_true[0], a.beta_true[1]},
                         {a.beta_false[0], a.beta_false[1]}, a.seed)
                 .dataset;
    } else if (a.generator == "background") {
        ds = gen_background(a.p_in, a.q_out, a.n, a.density, a.seed);
    } else if (a.generator == "embed") {
        if (a.core_stem.empty() || a.background_stem.empty())
            throw CLI::ValidationError("--core/--background",
                                       "embed requires both dataset stems");
        const Dataset core = load_dataset(a.core_stem);
        const Dataset background = load_dataset(a.background_stem);
        manifest.add_input(a.core_stem + ".csv");
        manifest.add_input(a.background_stem + ".csv");
        ds = embed(core, background, a.seed);
    } else {
        throw CLI::ValidationError(
            "--gen", "expected interventional|linear-gaussian|logical|background|embed");
    }

    if (dag) ds.meta.dag = a.dag;  // embed inherits the core's DAG reference
    ds.meta.split = make_splits(ds.n_rows(), a.seed);

    const fs::path out_dir(a.out);
    save_dataset(ds, out_dir / "data");
    manifest.add_output(out_dir / "data.csv");
    manifest.add_output(out_dir / "data.meta.json");
    manifest.config = {{"generator", a.generator}, {"dag", ds.meta.dag},
                       {"n", a.n},                 {"params", ds.meta.params},
                       {"out", a.out}};
    manifest.duration_seconds = timer.seconds();
    manifest.write(out_dir / "manifest.json");

    std::cout << "wrote " << (out_dir / "data.csv").string() << ": " << ds.n_rows() << " rows, "
              << ds.n_inputs() << " inputs (mean " << matrix_mean(ds.X) << "), "
              << ds.n_outputs() << " outputs (mean " << matrix_mean(ds.Y) << ")\n";
    return 0;
}

struct TrainArgs {
    std::string arch = "rinn";
    std::string dataset;
    int layers = 8;
    int hidden = 16;
    double lr = 0.01;
    double l1 = 1e-3;
    int batch = 64;
    int epochs = 2000;
    int patience = 50;
    std::string activation = "RELU";
    int fold = 0;
    bool pretrain = false;
    std::uint64_t seed = 0;
    std::string out = "out";
};

int cmd_train(const TrainArgs& a) {
    ManifestTimer timer;
    const Dataset ds = load_dataset(a.dataset);
    if (!ds.meta.split) throw std::runtime_error("dataset has no split plan; re-run simulate");
    const SplitFold& fold = ds.meta.split->folds.at(static_cast<std::size_t>(a.fold));

    const bool binary = ds.y_kind == ValueKind::BINARY;
    TrainConfig cfg;
    cfg.learning_rate = a.lr;
    cfg.l1_rate = a.l1;
    cfg.batch_size = a.batch;
    cfg.max_epochs = a.epochs;
    cfg.patience = a.patience;
    cfg.loss = binary ? LossKind::BCE : LossKind::MSE;
    cfg.seed = a.seed;

    const Strategy strategy = parse_strategy(a.arch);
    HyperParams hp;
    hp.hidden = a.hidden;
    hp.depth = a.layers;
    hp.activation = parse_activation(a.activation);
    const Architecture arch =
        candidate_architecture(strategy, hp, ds.n_inputs(), ds.n_outputs(), binary);

    const NetworkModel model =
        strategy == Strategy::AUTOENCODER
            ? train_autoencoder(arch, ds.Y, fold.train, fold.val, cfg, a.pretrain)
            : train(arch, ds.X, ds.Y, fold.train, fold.val, cfg);

    const fs::path out_dir(a.out);
    fs::create_directories(out_dir);
    save_model(model, (out_dir / "model.json").string());

    RunManifest manifest;
    manifest.subcommand = "train";
    manifest.master_seed = a.seed;
    manifest.add_input(a.dataset + ".csv");
    manifest.add_output(out_dir / "model.json");
    manifest.config = {{"arch", a.arch},     {"dataset", a.dataset}, {"layers", a.layers},
                       {"hidden", a.hidden}, {"lr", a.lr},           {"l1", a.l1},
                       {"batch", a.batch},   {"epochs", a.epochs},   {"patience", a.patience},
                       {"fold", a.fold},     {"activation", a.activation}};
    manifest.duration_seconds = timer.seconds();
    manifest.write(out_dir / "manifest.json");

    std::cout << "trained " << a.arch << ": best epoch " << model.record.best_epoch
              << ", val loss " << model.record.best_val_loss << ", sum|w| "
              << model.record.weight_l1 << "\n";
    return 0;
}

struct SearchArgs {
    std::string arch = "rinn";
    std::string dataset;
    int budget = 10;
    std::string mode = "random";
    int epochs = 2000;
    int patience = 50;
    int jobs = hardware_threads();
    std::uint64_t seed = 0;
    std::string out = "out";
};

int cmd_search(const SearchArgs& a) {
    ManifestTimer timer;
    const Dataset ds = load_dataset(a.dataset);
    if (!ds.meta.split) throw std::runtime_error("dataset has no split plan; re-run simulate");

    SearchSpace space;
    space.budget = a.budget;
    space.mode = parse_sampling_mode(a.mode);
    space.max_epochs = a.epochs;
    space.patience = a.patience;

    const fs::path out_dir(a.out);
    const auto records = run_search(space, parse_strategy(a.arch), ds, *ds.meta.split, out_dir,
                                    a.seed, a.jobs);

    int ok = 0;
    for (const auto& r : records) ok += r.ok() ? 1 : 0;

    RunManifest manifest;
    manifest.subcommand = "search";
    manifest.master_seed = a.seed;
    manifest.add_input(a.dataset + ".csv");
    manifest.add_output(out_dir / "search.csv");
    manifest.add_output(out_dir / "search_config.json");
    for (const auto& r : records)
        if (r.ok()) manifest.add_output(out_dir / r.model_path);
    manifest.config = {{"arch", a.arch},   {"dataset", a.dataset}, {"budget", a.budget},
                       {"mode", a.mode},   {"epochs", a.epochs},   {"patience", a.patience},
                       {"jobs", a.jobs}};
    manifest.duration_seconds = timer.seconds();
    manifest.write(out_dir / "manifest.json");

    std::cout << "search complete: " << records.size() << " records (" << ok << " ok) in "
              << (out_dir / "search.csv").string() << "\n";
    return 0;
}

struct EvolveArgs {
    std::string dataset;
    int hidden = 16;
    int layers = 8;
    int pop = 200;
    int generations = 1000;
    double elite_ratio = 0.20;
    double mutation_rate = 0.01;
    std::string weights = "-1;-0.5;0;0.5;1";
    double l1 = 1e-3;
    double data_fraction = 0.20;
    std::string activation = "RELU";
    int fold = 0;
    int jobs = hardware_threads();
    std::uint64_t seed = 0;
    std::string out = "out";
};

int cmd_evolve(const EvolveArgs& a) {
    ManifestTimer timer;
    const Dataset ds = load_dataset(a.dataset);
    if (!ds.meta.split) throw std::runtime_error("dataset has no split plan; re-run simulate");
    const SplitFold& fold = ds.meta.split->folds.at(static_cast<std::size_t>(a.fold));
    const bool binary = ds.y_kind == ValueKind::BINARY;

    EsConfig cfg;
    cfg.population_size = a.pop;
    cfg.generations = a.generations;
    cfg.elite_ratio = a.elite_ratio;
    cfg.mutation_rate = a.mutation_rate;
    cfg.legal_weights = parse_weight_list(a.weights);
    cfg.l1_rate = a.l1;
    cfg.data_fraction = a.data_fraction;
    cfg.loss = binary ? LossKind::BCE : LossKind::MSE;
    cfg.seed = a.seed;

    const Architecture arch =
        rinn_architecture(ds.n_inputs(), ds.n_outputs(), a.hidden, a.layers,
                          parse_activation(a.activation),
                          binary ? OutputActivation::SIGMOID : OutputActivation::IDENTITY);
    const EsResult result = es_optimize(arch, ds.X, ds.Y, fold.train, cfg, a.jobs);

    const fs::path out_dir(a.out);
    fs::create_directories(out_dir);
    save_model(result.model, (out_dir / "model.json").string());
    atomic_write_file(out_dir / "es_trace.csv", es_trace_csv(result.trace));

    RunManifest manifest;
    manifest.subcommand = "evolve";
    manifest.master_seed = a.seed;
    manifest.add_input(a.dataset + ".csv");
    manifest.add_output(out_dir / "model.json");
    manifest.add_output(out_dir / "es_trace.csv");
    manifest.config = {{"dataset", a.dataset},
                       {"hidden", a.hidden},
                       {"layers", a.layers},
                       {"pop", a.pop},
                       {"generations", a.generations},
                       {"elite_ratio", a.elite_ratio},
                       {"mutation_rate", a.mutation_rate},
                       {"weights", a.weights},
                       {"l1", a.l1},
                       {"data_fraction", a.data_fraction},
                       {"fold", a.fold}};
    manifest.duration_seconds = timer.seconds();
    manifest.write(out_dir / "manifest.json");

    std::cout << "evolved " << a.generations << " generations: best fitness "
              << result.best_fitness << ", sum|w| " << result.model.record.weight_l1 << "\n";
    return 0;
}

struct ScoreArgs {
    std::string search_dir;
    std::string dataset;
    std::string dag;
    int k = 10;
    bool emit_heatmaps = false;
    std::uint64_t seed = 0;
    std::string out;
};

struct Aggregate {
    double mean = 0.0;
    double sd = 0.0;
    bool available = false;
};

Aggregate aggregate(const std::vector<double>& xs) {
    Aggregate a;
    if (xs.empty()) return a;
    a.available = true;
    for (double x : xs) a.mean += x;
    a.mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - a.mean) * (x - a.mean);
    a.sd = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
    return a;
}

std::string agg_cell(const Aggregate& a) {
    return a.available ? format_double(a.mean) + "," + format_double(a.sd) : "NA,NA";
}

int cmd_score(const ScoreArgs& a) {
    ManifestTimer timer;
    const fs::path search_dir(a.search_dir);
    const fs::path out_dir(a.out.empty() ? (search_dir / "score").string() : a.out);
    fs::create_directories(out_dir);

    const Dataset ds = load_dataset(a.dataset);
    if (!ds.meta.split) throw std::runtime_error("dataset has no split plan");
    const std::string dag_spec = a.dag.empty() ? ds.meta.dag : a.dag;
    if (dag_spec.empty())
        throw std::runtime_error("no DAG recorded in dataset meta; pass --dag");
    const CausalDag dag = resolve_dag(dag_spec);

    const auto records = load_search_csv(search_dir / "search.csv");
    if (records.empty()) throw std::runtime_error("no records in " +
                                                  (search_dir / "search.csv").string());
    const auto ranked = rank(records);
    if (static_cast<int>(ranked.size()) < a.k)
        throw std::runtime_error("only " + std::to_string(ranked.size()) +
                                 " models survive ranking; requested k=" + std::to_string(a.k));
    const auto best = top_k(ranked, a.k);

    // Embedded datasets score only the simulated core columns.
    std::optional<CoreColumns> core;
    if (ds.meta.generator == "embed") {
        core = CoreColumns{ds.core_input_columns(), ds.core_output_columns()};
    }

    std::vector<NetworkModel> models;
    std::vector<ProjectionSet> projections;
    for (const auto& r : best) {
        const fs::path mp(r.model_path);
        models.push_back(load_model(mp.is_absolute() ? mp.string()
                                                     : (search_dir / mp).string()));
        projections.push_back(project(models.back()));
    }
    std::vector<const CoreColumns*> cores(projections.size(), core ? &*core : nullptr);
    const double threshold = search_threshold(projections, dag, &cores);

    // Test rows.
    const auto& test_idx = ds.meta.split->test;
    Matrix x_test(static_cast<int>(test_idx.size()), ds.n_inputs());
    Matrix y_test(static_cast<int>(test_idx.size()), ds.n_outputs());
    for (std::size_t r = 0; r < test_idx.size(); ++r) {
        std::copy(ds.X.row(test_idx[r]), ds.X.row(test_idx[r]) + ds.n_inputs(),
                  x_test.row(static_cast<int>(r)));
        std::copy(ds.Y.row(test_idx[r]), ds.Y.row(test_idx[r]) + ds.n_outputs(),
                  y_test.row(static_cast<int>(r)));
    }
    const bool binary = ds.y_kind == ValueKind::BINARY;

    RunManifest manifest;
    manifest.subcommand = "score";
    manifest.master_seed = a.seed;
    manifest.add_input(search_dir / "search.csv");
    manifest.add_input(a.dataset + ".csv");

    std::vector<double> in_p, in_r, in_f, hid_p, hid_r, hid_f, errs, aurocs;
    for (std::size_t i = 0; i < models.size(); ++i) {
        const ScoreReport report = score_model(models[i], dag, x_test, y_test, threshold, binary,
                                               core ? &*core : nullptr);
        nlohmann::json j = score_report_to_json(report);
        j["record_id"] = best[i].id;
        j["model_path"] = best[i].model_path;
        j["d_x"] = best[i].d_x;
        const fs::path report_path = out_dir / ("score_report_" + std::to_string(i) + ".json");
        atomic_write_file(report_path, j.dump(2) + "\n");
        manifest.add_output(report_path);

        if (report.input_scored) {
            in_p.push_back(report.input.precision);
            in_r.push_back(report.input.recall);
            in_f.push_back(report.input.f1);
        }
        hid_p.push_back(report.hidden.precision);
        hid_r.push_back(report.hidden.recall);
        hid_f.push_back(report.hidden.f1);
        errs.push_back(report.test_error);
        if (report.auroc) aurocs.push_back(*report.auroc);
    }

    std::ostringstream agg;
    agg << "strategy,k,threshold,"
        << "input_precision_mean,input_precision_sd,input_recall_mean,input_recall_sd,"
        << "input_f1_mean,input_f1_sd,hidden_precision_mean,hidden_precision_sd,"
        << "hidden_recall_mean,hidden_recall_sd,hidden_f1_mean,hidden_f1_sd,"
        << "test_error_mean,test_error_sd,auroc_mean,auroc_sd\n";
    agg << strategy_name(best.front().strategy) << ',' << a.k << ',' << format_double(threshold)
        << ',' << agg_cell(aggregate(in_p)) << ',' << agg_cell(aggregate(in_r)) << ','
        << agg_cell(aggregate(in_f)) << ',' << agg_cell(aggregate(hid_p)) << ','
        << agg_cell(aggregate(hid_r)) << ',' << agg_cell(aggregate(hid_f)) << ','
        << agg_cell(aggregate(errs)) << ',' << agg_cell(aggregate(aurocs)) << '\n';
    atomic_write_file(out_dir / "aggregate.csv", agg.str());
    manifest.add_output(out_dir / "aggregate.csv");

    std::ostringstream ranked_csv;
    ranked_csv << kSearchCsvHeader << ",d_x\n";
    for (const auto& r : ranked)
        ranked_csv << record_csv_line(r) << ',' << format_double(r.d_x) << '\n';
    atomic_write_file(out_dir / "ranked.csv", ranked_csv.str());
    manifest.add_output(out_dir / "ranked.csv");

    if (a.emit_heatmaps) {
        render_heatmaps(projections.front(), dag.grid_rows(), dag.grid_cols(),
                        out_dir / "heatmaps");
        manifest.add_output(out_dir / "heatmaps" / "projections.csv");
    }

    manifest.config = {{"search", a.search_dir}, {"dataset", a.dataset}, {"dag", dag_spec},
                       {"k", a.k},               {"emit_heatmaps", a.emit_heatmaps}};
    manifest.duration_seconds = timer.seconds();
    manifest.write(out_dir / "manifest.json");

    std::cout << "scored top-" << a.k << " at threshold " << threshold << ": mean hidden F1 "
              << aggregate(hid_f).mean;
    if (!in_f.empty()) std::cout << ", mean input F1 " << aggregate(in_f).mean;
    std::cout << "\n";
    return 0;
}

struct GraphArgs {
    std::string action;
    std::string dag = "gt16";
    std::string out;
};

int cmd_graph(const GraphArgs& a) {
    const CausalDag dag = resolve_dag(a.dag);
    if (a.action == "dump" || a.action == "modify") {
        const CausalDag result = a.action == "modify" ? modify(dag) : dag;
        if (a.out.empty()) {
            std::cout << result.to_file_text();
        } else {
            save_dag_file(result, a.out);
            std::cout << "wrote " << a.out << "\n";
        }
        return 0;
    }
    if (a.action == "patterns") {
        std::ostringstream csv;
        csv << "node,role";
        for (int c = 0; c < static_cast<int>(dag.output_nodes().size()); ++c) csv << ",y_" << c;
        csv << '\n';
        for (const auto& gp : ground_truth_patterns(dag)) {
            csv << gp.node << ',' << role_name(dag.node(dag.node_index(gp.node)).role);
            for (auto b : gp.mask) csv << ',' << static_cast<int>(b);
            csv << '\n';
        }
        if (a.out.empty()) {
            std::cout << csv.str();
        } else {
            atomic_write_file(a.out, csv.str());
            std::cout << "wrote " << a.out << "\n";
        }
        return 0;
    }
    throw CLI::ValidationError("action", "expected dump|modify|patterns");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rinnlab: latent causal structure discovery toolkit"};
    app.require_subcommand(1);
    std::function<int()> action;

    SimulateArgs sim;
    auto* simulate_cmd = app.add_subcommand("simulate", "generate a dataset from a causal DAG");
    simulate_cmd->add_option("--gen", sim.generator,
                             "generator: interventional|linear-gaussian|logical|background|embed")
        ->required();
    simulate_cmd->add_option("--dag", sim.dag, "DAG file path or 'gt16'");
    simulate_cmd->add_option("--n", sim.n, "sample count");
    simulate_cmd->add_option("--p", sim.p, "interventional input activation probability");
    simulate_cmd->add_option("--ops", sim.ops, "logical ops: all-or|all-and|all-xor|random");
    simulate_cmd->add_option("--beta-true", sim.beta_true, "Beta(a,b) for true configurations")
        ->expected(2);
    simulate_cmd->add_option("--beta-false", sim.beta_false, "Beta(a,b) for false configurations")
        ->expected(2);
    simulate_cmd->add_option("--p-in", sim.p_in, "background input count");
    simulate_cmd->add_option("--q-out", sim.q_out, "background output count");
    simulate_cmd->add_option("--density", sim.density, "background Bernoulli density");
    simulate_cmd->add_option("--core", sim.core_stem, "embed: core dataset stem");
    simulate_cmd->add_option("--background", sim.background_stem, "embed: background stem");
    simulate_cmd->add_option("--seed", sim.seed, "master seed")->envname("RINNLAB_SEED");
    simulate_cmd->add_option("--out", sim.out, "output directory");
    simulate_cmd->callback([&] { action = [&] { return cmd_simulate(sim); }; });

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "train one model on a dataset fold");
    train_cmd->add_option("--arch", tr.arch, "rinn|dnn|autoencoder");
    train_cmd->add_option("--dataset", tr.dataset, "dataset stem (data.csv + data.meta.json)")
        ->required();
    train_cmd->add_option("--layers", tr.layers, "hidden layer count (encoder depth for AE)");
    train_cmd->add_option("--hidden", tr.hidden, "hidden layer width");
    train_cmd->add_option("--lr", tr.lr, "learning rate");
    train_cmd->add_option("--l1", tr.l1, "L1 regularization rate");
    train_cmd->add_option("--batch", tr.batch, "batch size");
    train_cmd->add_option("--epochs", tr.epochs, "max epochs");
    train_cmd->add_option("--patience", tr.patience, "early stopping patience");
    train_cmd->add_option("--activation", tr.activation, "RELU|SIGMOID|TANH");
    train_cmd->add_option("--fold", tr.fold, "validation fold (0 or 1)");
    train_cmd->add_flag("--pretrain", tr.pretrain, "greedy layerwise pretraining (AE only)");
    train_cmd->add_option("--seed", tr.seed, "master seed")->envname("RINNLAB_SEED");
    train_cmd->add_option("--out", tr.out, "output directory");
    train_cmd->callback([&] { action = [&] { return cmd_train(tr); }; });

    SearchArgs se;
    auto* search_cmd = app.add_subcommand("search", "hyperparameter search over both folds");
    search_cmd->add_option("--arch", se.arch, "rinn|dnn|autoencoder|esc");
    search_cmd->add_option("--dataset", se.dataset, "dataset stem")->required();
    search_cmd->add_option("--budget", se.budget, "hyperparameter sets to evaluate");
    search_cmd->add_option("--mode", se.mode, "grid|random|mixed");
    search_cmd->add_option("--epochs", se.epochs, "max epochs per candidate");
    search_cmd->add_option("--patience", se.patience, "early stopping patience");
    search_cmd->add_option("--jobs", se.jobs, "parallel workers");
    search_cmd->add_option("--seed", se.seed, "master seed")->envname("RINNLAB_SEED");
    search_cmd->add_option("--out", se.out, "output directory");
    search_cmd->callback([&] { action = [&] { return cmd_search(se); }; });

    EvolveArgs ev;
    auto* evolve_cmd = app.add_subcommand("evolve", "optimize RINN weights with ES-C");
    evolve_cmd->add_option("--dataset", ev.dataset, "dataset stem")->required();
    evolve_cmd->add_option("--hidden", ev.hidden, "hidden layer width");
    evolve_cmd->add_option("--layers", ev.layers, "hidden layer count");
    evolve_cmd->add_option("--pop", ev.pop, "population size");
    evolve_cmd->add_option("--generations", ev.generations, "generation cap (max 13000)");
    evolve_cmd->add_option("--elite-ratio", ev.elite_ratio, "elite fraction");
    evolve_cmd->add_option("--mutation-rate", ev.mutation_rate, "per-gene mutation probability");
    evolve_cmd->add_option("--weights", ev.weights, "legal weights, ';'-separated");
    evolve_cmd->add_option("--l1", ev.l1, "L1 rate in the fitness");
    evolve_cmd->add_option("--data-fraction", ev.data_fraction, "training subsample fraction");
    evolve_cmd->add_option("--activation", ev.activation, "RELU|SIGMOID|TANH");
    evolve_cmd->add_option("--fold", ev.fold, "fold providing the training split");
    evolve_cmd->add_option("--jobs", ev.jobs, "parallel fitness workers");
    evolve_cmd->add_option("--seed", ev.seed, "master seed")->envname("RINNLAB_SEED");
    evolve_cmd->add_option("--out", ev.out, "output directory");
    evolve_cmd->callback([&] { action = [&] { return cmd_evolve(ev); }; });

    ScoreArgs sc;
    auto* score_cmd = app.add_subcommand("score", "rank a search and score the top-k models");
    score_cmd->add_option("--search", sc.search_dir, "search output directory")->required();
    score_cmd->add_option("--dataset", sc.dataset, "dataset stem")->required();
    score_cmd->add_option("--dag", sc.dag, "DAG override (defaults to dataset meta)");
    score_cmd->add_option("--k", sc.k, "models to score");
    score_cmd->add_flag("--emit-heatmaps", sc.emit_heatmaps, "write PGM heatmaps for the top model");
    score_cmd->add_option("--seed", sc.seed, "master seed")->envname("RINNLAB_SEED");
    score_cmd->add_option("--out", sc.out, "output directory (default <search>/score)");
    score_cmd->callback([&] { action = [&] { return cmd_score(sc); }; });

    GraphArgs gr;
    auto* graph_cmd = app.add_subcommand("graph", "dump, modify or pattern-print a DAG");
    graph_cmd->add_option("action", gr.action, "dump|modify|patterns")->required();
    graph_cmd->add_option("--dag", gr.dag, "DAG file path or 'gt16'");
    graph_cmd->add_option("--out", gr.out, "output file (stdout if omitted)");
    graph_cmd->callback([&] { action = [&] { return cmd_graph(gr); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        return action ? action() : 2;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
