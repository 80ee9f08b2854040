// satnn: command-line front end for dataset generation, CNF encoding,
// SAT-based training and evaluation.

#include "satnn/config.hpp"
#include "satnn/datasets.hpp"
#include "satnn/encoder.hpp"
#include "satnn/errors.hpp"
#include "satnn/pipeline.hpp"
#include "satnn/random.hpp"
#include "satnn/runtime.hpp"
#include "satnn/solver.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace satnn;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitTrainingFailure = 3;
constexpr int kExitEnvironment = 4;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<int> parse_int_list(const std::string& text, const char* what) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError(std::string("bad ") + what + " list: '" + text + "'");
        }
    }
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw EnvironmentError("cannot write " + path.string());
    out << text;
}

// ---- shared flag groups ----

struct HpFlags {
    std::string config_file;
    std::map<std::string, std::string> values; // only flags the user passed

    void attach(CLI::App* app) {
        app->add_option("--config", config_file, "key = value hyperparameter file (flags win)");
        for (const char* key : {"num_bits", "slack_bits", "regret_bits", "cost_bits", "product_magnitude_bits", "alpha",
                                "batch_size", "num_batches"}) {
            std::string flag = std::string("--") + key;
            std::replace(flag.begin(), flag.end(), '_', '-');
            if (flag == "--product-magnitude-bits") flag += ",--pmb";
            app->add_option_function<int>(flag, [this, key](const int& v) { values[key] = std::to_string(v); }, key);
        }
        app->add_option_function<std::string>(
               "--margin-rule", [this](const std::string& v) { values["margin_rule"] = v; },
               "negative-label margin: literal | stated")
            ->check(CLI::IsMember({"literal", "stated"}));
    }

    Hyperparams resolve(const Hyperparams& base = {}) const {
        Hyperparams hp = base;
        if (!config_file.empty())
            for (const auto& [k, v] : load_config(config_file))
                if (!set_hyperparam(hp, k, v)) throw UsageError("unknown key '" + k + "' in " + config_file);
        for (const auto& [k, v] : values) set_hyperparam(hp, k, v);
        hp.validate();
        return hp;
    }
};

struct NetFlags {
    std::string hidden = "10";
    bool kernelised = false;
    int grid_side = 0;
    int window = 0;
    int stride = 1;

    void attach(CLI::App* app) {
        app->add_option("--hidden", hidden, "hidden layer widths, comma separated")->capture_default_str();
        app->add_flag("--kernelised", kernelised, "kernelised first layer over a square input grid");
        app->add_option("--grid-side", grid_side, "kernel grid side");
        app->add_option("--window", window, "window side");
        app->add_option("--stride", stride, "window stride")->capture_default_str();
    }

    NetworkSpec resolve(std::size_t input_dim) const {
        NetworkSpec net;
        net.input_dim = static_cast<int>(input_dim);
        net.hidden = hidden.empty() ? std::vector<int>{} : parse_int_list(hidden, "--hidden");
        if (kernelised) {
            net.kind = NetKind::Kernelised;
            net.grid_side = grid_side;
            net.window_size = window;
            net.window_stride = stride;
        }
        net.validate();
        return net;
    }
};

struct SolverFlags {
    std::string solver;
    std::string command;
    double timeout = 180.0;
    int jobs = 1;
    int iterations = 0;
    int max_rounds = 0;
    int min_chunk = 0;
    std::size_t max_clauses = 0;

    void attach(CLI::App* app) {
        app->add_option("--solver", solver, "solver executable (default: $SATNN_SOLVER or the bundled solver)");
        app->add_option("--solver-command", command, "command template with {solver} {seed} {input}");
        app->add_option("--timeout", timeout, "per-call timeout in seconds")->capture_default_str();
        app->add_option("--jobs", jobs, "parallel solver processes")->capture_default_str();
        app->add_option("--iterations", iterations, "probe iterations per curriculum round");
        app->add_option("--max-rounds", max_rounds, "curriculum rounds");
        app->add_option("--min-chunk", min_chunk, "smallest assumption chunk");
        app->add_option("--max-clauses", max_clauses, "cap on learned clauses per batch");
    }

    SolverConfig resolve(std::uint64_t seed) const {
        SolverConfig cfg;
        if (!solver.empty()) cfg.solver_path = solver;
        if (!command.empty()) cfg.command = command;
        cfg.timeout_secs = timeout;
        cfg.max_parallel = jobs;
        cfg.seed = seed;
        cfg.validate();
        // Catch a missing solver up front; per-job failures would otherwise
        // surface as a training failure.
        if (cfg.solver_path.find('/') != std::string::npos && !fs::exists(cfg.solver_path))
            throw EnvironmentError("solver '" + cfg.solver_path + "' not found");
        return cfg;
    }

    Curriculum curriculum(Curriculum c) const {
        if (iterations > 0) c.iterations_per_round = iterations;
        if (max_rounds > 0) c.max_rounds = max_rounds;
        if (min_chunk > 0) c.min_chunk = min_chunk;
        if (max_clauses > 0) c.max_clauses = max_clauses;
        return c;
    }
};

Dataset resolve_dataset(const std::string& name) {
    if (name == "parity8" || name == "parity8-test") {
        Dataset ds = gen_parity(8, {0, 1, 3, 5}, std::nullopt, 0);
        ds.source = name;
        return ds;
    }
    if (name == "parity16" || name == "parity16-test") {
        Dataset ds = gen_parity(16, default_parity16_positions(), 2000, name == "parity16" ? 16 : 17);
        ds.source = name;
        return ds;
    }
    if (name == "perceptron") return perceptron_toyset();
    if (!fs::exists(name)) throw EnvironmentError("dataset '" + name + "' is neither a builtin nor an existing file");
    return load_dataset(name);
}

void print_summary(const Dataset& ds) {
    std::cout << "count " << ds.size() << "\ndim " << ds.dim() << "\npositives " << ds.positives() << "\nnegatives "
              << ds.size() - ds.positives() << "\n";
}

// ---- commands ----

struct GenDataCmd {
    std::string kind;
    int dim = 8;
    std::string positions;
    bool exhaustive = false;
    std::size_t count = 0;
    std::uint64_t seed = 0;
    std::string out;
    std::string images, labels;
    int digit = 0;
    bool kernelised = false;
    std::size_t per_class = 0;
    HpFlags hp;

    void attach(CLI::App& root) {
        auto* app = root.add_subcommand("gen-data", "generate a dataset file");
        app->add_option("kind", kind, "parity | perceptron | images")
            ->required()
            ->check(CLI::IsMember({"parity", "perceptron", "images"}));
        app->add_option("--dim", dim, "parity input dimension")->capture_default_str();
        app->add_option("--positions", positions, "parity label positions, comma separated");
        auto* ex = app->add_flag("--exhaustive", exhaustive, "emit all 2^dim vectors");
        app->add_option("--count", count, "number of sampled parity vectors")->excludes(ex);
        app->add_option("--seed", seed, "sampling seed")->capture_default_str();
        app->add_option("--out", out, "output dataset file (stdout summary only if absent)");
        app->add_option("--images", images, "IDX image file");
        app->add_option("--labels", labels, "IDX label file");
        app->add_option("--digit", digit, "digit labelled +1");
        app->add_flag("--kernelised", kernelised, "crop-and-resize preprocessing");
        app->add_option("--per-class", per_class, "keep the first n images of each digit");
        hp.attach(app);
        app->callback([this] { run(); });
    }

    void run() {
        Dataset ds;
        if (kind == "parity") {
            if (positions.empty()) throw UsageError("gen-data parity requires --positions");
            if (!exhaustive && count == 0) throw UsageError("gen-data parity requires --exhaustive or --count");
            ds = gen_parity(dim, parse_int_list(positions, "--positions"),
                            exhaustive ? std::nullopt : std::optional<std::size_t>(count), seed);
        } else if (kind == "perceptron") {
            ds = perceptron_toyset();
        } else {
            if (images.empty() || labels.empty()) throw UsageError("gen-data images requires --images and --labels");
            ds = images_to_dataset(load_idx_images(images), load_idx_labels(labels), digit,
                                   kernelised ? PreprocessScheme::Kernelised : PreprocessScheme::Vanilla, hp.resolve(),
                                   per_class ? std::optional<std::size_t>(per_class) : std::nullopt);
        }
        if (!out.empty()) write_text(out, format_dataset(ds));
        print_summary(ds);
    }
};

struct EncodeCmd {
    std::string dataset;
    std::string out = "cnf";
    std::uint64_t seed = 0;
    std::string mode = "assume";
    HpFlags hp;
    NetFlags net;

    void attach(CLI::App& root) {
        auto* app = root.add_subcommand("encode", "write one DIMACS file per sampled batch");
        app->add_option("--dataset", dataset, "builtin name or dataset file")->required();
        app->add_option("--out", out, "output directory")->capture_default_str();
        app->add_option("--seed", seed, "batch sampling seed")->capture_default_str();
        app->add_option("--mode", mode, "job mode recorded in the manifest")
            ->check(CLI::IsMember({"solve", "learn", "assume"}))
            ->capture_default_str();
        hp.attach(app);
        net.attach(app);
        app->callback([this] { run(); });
    }

    void run() {
        const Dataset ds = resolve_dataset(dataset);
        const Hyperparams h = hp.resolve();
        const NetworkSpec n = net.resolve(ds.dim());
        const auto batches = sample_batches(ds, h.num_batches, h.batch_size, seed);
        fs::create_directories(out);
        std::vector<ManifestEntry> entries;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const EncodedBatch enc = encode_batch(n, batches[b], h);
            const std::string name = "batch_" + std::to_string(b) + ".cnf";
            write_text(fs::path(out) / name, to_dimacs(enc.formula));
            if (b == 0) {
                std::ostringstream map;
                for (int v : enc.weights.variable_ids()) map << enc.formula.labels().at(v) << ' ' << v << '\n';
                write_text(fs::path(out) / "varmap.txt", map.str());
            }
            entries.push_back({std::to_string(b), name, parse_job_mode(mode), derive_seed(seed, b)});
            std::cout << name << ' ' << enc.formula.var_count() << " vars " << enc.formula.clauses().size()
                      << " clauses\n";
        }
        write_text(fs::path(out) / "jobs.manifest", format_job_manifest(entries));
    }
};

struct TrainCmd {
    std::string dataset;
    std::string test;
    std::string out = "out";
    std::string config_name;
    std::uint64_t seed = 0;
    bool share = false;
    bool plain = false;
    int solutions = 1;
    HpFlags hp;
    NetFlags net;
    SolverFlags solver;

    void attach(CLI::App& root) {
        auto* app = root.add_subcommand("train", "train networks with the SAT pipeline");
        app->add_option("--dataset", dataset, "builtin name or dataset file")->required();
        app->add_option("--test", test, "held-out set used to rank models");
        app->add_option("--out", out, "output directory")->capture_default_str();
        app->add_option("--name", config_name, "run name (default: derived from flags)");
        app->add_option("--seed", seed, "pipeline seed")->capture_default_str();
        app->add_flag("--share-clauses", share, "learn implied clauses and share them across batches");
        app->add_flag("--plain-solve", plain, "one unconstrained solver call per batch");
        app->add_option("--solutions", solutions, "models wanted per batch")->capture_default_str();
        hp.attach(app);
        net.attach(app);
        solver.attach(app);
        app->callback([this] { run(); });
    }

    int run_status = 0;

    void run() {
        const Dataset ds = resolve_dataset(dataset);
        const Hyperparams h = hp.resolve();
        const NetworkSpec n = net.resolve(ds.dim());
        TrainOptions opt;
        opt.share_clauses = share;
        opt.use_assumptions = !plain;
        opt.solutions_per_batch = solutions;
        opt.learn_curriculum = solver.curriculum(Curriculum::for_clause_learning());
        opt.solve_curriculum = solver.curriculum(Curriculum::for_assumption_solving());
        if (!test.empty()) opt.holdout = resolve_dataset(test);
        opt.config_name = config_name.empty() ? (share ? "share" : "noshare") + std::string("_seed") +
                                                    std::to_string(seed)
                                              : config_name;
        const TrainResult result = train(ds, n, h, solver.resolve(seed), opt);
        write_run(result, opt.config_name, out);
        for (const auto& b : result.batches)
            std::cout << "batch " << b.batch_id << ' ' << b.phase2_status << " models " << b.models_found
                      << (b.error ? " error: " + *b.error : std::string()) << '\n';
        for (const auto& m : result.models) {
            std::cout << m.file_name << " train_margin " << m.train_margin;
            if (m.holdout_accuracy) std::cout << " holdout " << *m.holdout_accuracy;
            std::cout << '\n';
        }
        if (result.failed()) {
            std::cerr << "training failed: no batch produced a model\n";
            run_status = kExitTrainingFailure;
        }
    }
};

struct LearnCmd {
    std::string dataset;
    std::string out = "lambda";
    std::uint64_t seed = 0;
    HpFlags hp;
    NetFlags net;
    SolverFlags solver;

    void attach(CLI::App& root) {
        auto* app = root.add_subcommand("learn-clauses", "phase 1 only: learn implied clauses per batch");
        app->add_option("--dataset", dataset, "builtin name or dataset file")->required();
        app->add_option("--out", out, "output directory")->capture_default_str();
        app->add_option("--seed", seed, "pipeline seed")->capture_default_str();
        hp.attach(app);
        net.attach(app);
        solver.attach(app);
        app->callback([this] { run(); });
    }

    void run() {
        const Dataset ds = resolve_dataset(dataset);
        const Hyperparams h = hp.resolve();
        const NetworkSpec n = net.resolve(ds.dim());
        const SolverConfig cfg = solver.resolve(derive_seed(seed, 1));
        const auto batches = sample_batches(ds, h.num_batches, h.batch_size, seed);
        std::vector<EncodedBatch> encoded;
        std::vector<Job> jobs;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            encoded.push_back(encode_batch(n, batches[b], h));
            Job job;
            job.formula = std::make_shared<const CnfFormula>(encoded.back().formula);
            job.weight_vars = encoded.back().weights.variable_ids();
            job.mode = JobMode::LearnClauses;
            job.curriculum = solver.curriculum(Curriculum::for_clause_learning());
            job.origin = static_cast<int>(b);
            jobs.push_back(std::move(job));
        }
        const auto results = run_batch_jobs(jobs, cfg);
        std::vector<LearnedClauseSet> sets;
        const int vars = encoded.front().formula.var_count();
        for (std::size_t b = 0; b < results.size(); ++b) {
            if (results[b].error) {
                std::cerr << "batch " << b << ": " << *results[b].error << '\n';
                continue;
            }
            const auto& learned = results[b].learned->learned;
            write_text(fs::path(out) / ("lambda_" + std::to_string(b) + ".cnf"), format_lambda(learned, vars));
            std::cout << "batch " << b << ' ' << learned.clauses.size() << " clauses\n";
            sets.push_back(learned);
        }
        LearnedClauseSet all = merge_lambda(sets);
        write_text(fs::path(out) / "lambda_all.cnf", format_lambda(all, vars));
        std::cout << "lambda_all " << all.clauses.size() << " clauses\n";
    }
};

struct EvalCmd {
    std::string models;
    std::string test;
    std::string config_name;
    std::string append;

    void attach(CLI::App& root) {
        auto* app = root.add_subcommand("eval", "min/median/max accuracy of saved models on a test set");
        app->add_option("--models", models, "directory of model files")->required();
        app->add_option("--test", test, "builtin name or dataset file")->required();
        app->add_option("--name", config_name, "config column (default: models directory name)");
        app->add_option("--append", append, "also append the row to this CSV file");
        app->callback([this] { run(); });
    }

    void run() {
        if (!fs::is_directory(models)) throw EnvironmentError("models directory '" + models + "' does not exist");
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(models)) {
            const std::string name = entry.path().filename().string();
            if (name.starts_with("model_") && entry.path().extension() == ".json") files.push_back(entry.path());
        }
        if (files.empty()) throw EnvironmentError("no model files in '" + models + "'");
        std::sort(files.begin(), files.end());
        std::vector<TrainedModel> loaded;
        for (const auto& f : files) loaded.push_back(load_model(f));
        const Dataset ds = resolve_dataset(test);
        const std::string name =
            config_name.empty() ? fs::path(models).lexically_normal().filename().string() : config_name;
        const std::string row = format_eval_row(name.empty() ? "models" : name, evaluate(loaded, ds));
        std::cout << kEvalCsvHeader << '\n' << row << '\n';
        if (!append.empty()) {
            const bool fresh = !fs::exists(append) || fs::file_size(append) == 0;
            std::ofstream out(append, std::ios::app);
            if (!out) throw EnvironmentError("cannot write " + append);
            if (fresh) out << kEvalCsvHeader << '\n';
            out << row << '\n';
        }
    }
};

struct ReportCmd {
    std::vector<std::string> manifests;

    void attach(CLI::App& root) {
        auto* app = root.add_subcommand("report", "aggregate run manifests into a min/median/max table");
        app->add_option("manifests", manifests, "manifest files")->required();
        app->callback([this] { run(); });
    }

    void run() {
        std::vector<fs::path> paths(manifests.begin(), manifests.end());
        for (const auto& p : paths)
            if (!fs::exists(p)) throw EnvironmentError("manifest '" + p.string() + "' does not exist");
        std::cout << kEvalCsvHeader << '\n';
        for (const auto& [config, report] : report_from_manifests(paths))
            std::cout << format_eval_row(config, report) << '\n';
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SAT-based training of fixed-point neural networks"};
    app.require_subcommand(1);
    GenDataCmd gen;
    EncodeCmd enc;
    TrainCmd tr;
    LearnCmd learn;
    EvalCmd ev;
    ReportCmd rep;
    gen.attach(app);
    enc.attach(app);
    tr.attach(app);
    learn.attach(app);
    ev.attach(app);
    rep.attach(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) { // ConfigError, ShapeError
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return kExitUsage;
    } catch (const RangeError& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return kExitUsage;
    } catch (const EnvironmentError& e) {
        std::cerr << "environment error: " << e.what() << '\n';
        return kExitEnvironment;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "file error: " << e.what() << '\n';
        return kExitEnvironment;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return tr.run_status;
}
