#include "satnn/pipeline.hpp"

#include "satnn/errors.hpp"
#include "satnn/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

namespace satnn {

namespace {

using ojson = nlohmann::ordered_json;

ojson stats_json(const ProbeStats& s) {
    return ojson{{"probes", s.probes}, {"sat", s.sat},       {"unsat", s.unsat},
                 {"timeouts", s.timeouts}, {"rounds", s.rounds}};
}

ojson hyperparams_json(const Hyperparams& hp) {
    return ojson{{"num_bits", hp.num_bits},
                 {"slack_bits", hp.slack_bits},
                 {"regret_bits", hp.regret_bits},
                 {"cost_bits", hp.cost_bits},
                 {"product_magnitude_bits", hp.product_magnitude_bits},
                 {"alpha", hp.alpha},
                 {"batch_size", hp.batch_size},
                 {"num_batches", hp.num_batches},
                 {"margin_rule", to_string(hp.margin_rule)}};
}

ojson network_json(const NetworkSpec& net) {
    return ojson{{"kind", net.kind == NetKind::Vanilla ? "vanilla" : "kernelised"},
                 {"input_dim", net.input_dim},
                 {"hidden", net.hidden},
                 {"grid_side", net.grid_side},
                 {"window_size", net.window_size},
                 {"window_stride", net.window_stride}};
}

std::string model_file_name(int batch, int solution) {
    return "model_b" + std::to_string(batch) + "_s" + std::to_string(solution) + ".json";
}

} // namespace

TrainResult train(const Dataset& ds, const NetworkSpec& net, const Hyperparams& hp, const SolverConfig& cfg,
                  const TrainOptions& options) {
    hp.validate();
    net.validate();
    cfg.validate();
    if (ds.examples.empty()) throw ConfigError("training dataset is empty");
    if (ds.dim() != static_cast<std::size_t>(net.input_dim)) throw ShapeError("dataset dimension does not match the network");

    TrainResult result;
    ojson timings;
    using Clock = std::chrono::steady_clock;
    auto t0 = Clock::now();

    const auto batch_indices = sample_batch_indices(ds.size(), hp.num_batches, hp.batch_size, cfg.seed);
    std::vector<std::vector<Example>> batches;
    std::vector<EncodedBatch> encoded;
    for (const auto& indices : batch_indices) {
        std::vector<Example> batch;
        for (std::size_t idx : indices) batch.push_back(ds.examples[idx]);
        encoded.push_back(encode_batch(net, batch, hp));
        batches.push_back(std::move(batch));
    }
    const std::vector<int> weight_vars = encoded.front().weights.variable_ids();
    for (const auto& e : encoded)
        if (e.weights.variable_ids() != weight_vars) throw ShapeError("batches disagree on weight variable numbering");

    for (std::size_t b = 0; b < encoded.size(); ++b) {
        BatchOutcome outcome;
        outcome.batch_id = static_cast<int>(b);
        outcome.indices = batch_indices[b];
        outcome.cnf_vars = encoded[b].formula.var_count();
        outcome.cnf_clauses = encoded[b].formula.clauses().size();
        result.batches.push_back(std::move(outcome));
    }
    timings["encode_seconds"] = std::chrono::duration<double>(Clock::now() - t0).count();

    // Phase 1: learn implied clauses per batch and conjoin them everywhere.
    std::vector<std::shared_ptr<const CnfFormula>> phase2_formulas;
    if (options.share_clauses) {
        t0 = Clock::now();
        std::vector<Job> jobs;
        for (std::size_t b = 0; b < encoded.size(); ++b) {
            Job job;
            job.formula = std::make_shared<const CnfFormula>(encoded[b].formula);
            job.weight_vars = weight_vars;
            job.mode = JobMode::LearnClauses;
            job.curriculum = options.learn_curriculum;
            job.origin = static_cast<int>(b);
            jobs.push_back(std::move(job));
        }
        SolverConfig learn_cfg = cfg;
        learn_cfg.seed = derive_seed(cfg.seed, 1);
        const auto learned = run_batch_jobs(jobs, learn_cfg);
        std::vector<LearnedClauseSet> sets;
        for (std::size_t b = 0; b < learned.size(); ++b) {
            if (learned[b].error) {
                result.batches[b].error = "clause learning: " + *learned[b].error;
                continue;
            }
            result.batches[b].lambda_clauses = learned[b].learned->learned.clauses.size();
            result.batches[b].learn_stats = learned[b].learned->stats;
            sets.push_back(learned[b].learned->learned);
        }
        const LearnedClauseSet all = merge_lambda(sets);
        result.lambda_all = all.clauses.size();
        for (const auto& e : encoded) {
            auto f = std::make_shared<CnfFormula>(e.formula);
            f->conjoin(all.clauses);
            phase2_formulas.push_back(std::move(f));
        }
        timings["phase1_seconds"] = std::chrono::duration<double>(Clock::now() - t0).count();
    } else {
        for (const auto& e : encoded) phase2_formulas.push_back(std::make_shared<const CnfFormula>(e.formula));
    }

    // Phase 2: solve every batch formula.
    t0 = Clock::now();
    std::vector<Job> jobs;
    for (std::size_t b = 0; b < encoded.size(); ++b) {
        Job job;
        job.formula = phase2_formulas[b];
        job.weight_vars = weight_vars;
        job.mode = options.use_assumptions ? JobMode::AssumptionSolve : JobMode::Solve;
        job.num_sols = options.solutions_per_batch;
        job.curriculum = options.solve_curriculum;
        job.origin = static_cast<int>(b);
        jobs.push_back(std::move(job));
    }
    SolverConfig solve_cfg = cfg;
    solve_cfg.seed = derive_seed(cfg.seed, 2);
    const auto solved = run_batch_jobs(jobs, solve_cfg);
    timings["phase2_seconds"] = std::chrono::duration<double>(Clock::now() - t0).count();

    ojson batch_times = ojson::array();
    for (std::size_t b = 0; b < solved.size(); ++b) {
        BatchOutcome& outcome = result.batches[b];
        const JobResult& jr = solved[b];
        std::vector<const SolveResult*> solutions;
        double wall = 0.0;
        if (jr.error) {
            outcome.phase2_status = "error";
            outcome.error = *jr.error;
        } else if (jr.solve) {
            wall = jr.solve->wall_time;
            outcome.solve_stats.probes = 1;
            outcome.phase2_status = jr.solve->status == SolveStatus::Sat     ? "sat"
                                    : jr.solve->status == SolveStatus::Unsat ? "unsat"
                                                                             : "timeout";
            if (jr.solve->status == SolveStatus::Sat) solutions.push_back(&*jr.solve);
        } else {
            outcome.solve_stats = jr.assumption->stats;
            for (const auto& s : jr.assumption->solutions) {
                solutions.push_back(&s);
                wall += s.wall_time;
            }
            outcome.phase2_status = !jr.assumption->shortfall ? "sat" : solutions.empty() ? "none" : "partial";
        }
        batch_times.push_back(ojson{{"batch", b}, {"solution_wall_seconds", wall}});

        for (std::size_t s = 0; s < solutions.size(); ++s) {
            ModelRecord rec;
            rec.model = decode_weights(solutions[s]->assignment, encoded[b].weights, encoded[b].formula, net, hp);
            rec.model.provenance = Provenance{static_cast<int>(b), jr.seed, static_cast<int>(s), options.share_clauses};
            rec.file_name = model_file_name(static_cast<int>(b), static_cast<int>(s));
            rec.train_margin = margin_fraction(rec.model, batches[b]);
            if (options.holdout) rec.holdout_accuracy = accuracy(rec.model, *options.holdout, AccuracyMode::Plain);
            result.models.push_back(std::move(rec));
            ++outcome.models_found;
        }
    }
    timings["batches"] = batch_times;

    std::stable_sort(result.models.begin(), result.models.end(), [](const ModelRecord& a, const ModelRecord& b) {
        return a.holdout_accuracy.value_or(0.0) > b.holdout_accuracy.value_or(0.0);
    });

    ojson manifest;
    manifest["format"] = "satnn-run/1";
    manifest["config"] = options.config_name;
    manifest["hyperparams"] = hyperparams_json(hp);
    manifest["network"] = network_json(net);
    manifest["dataset"] = ojson{{"source", ds.source}, {"size", ds.size()}, {"seed", ds.seed}};
    manifest["seeds"] = ojson{{"pipeline", cfg.seed}, {"phase1", derive_seed(cfg.seed, 1)}, {"phase2", derive_seed(cfg.seed, 2)}};
    manifest["share_clauses"] = options.share_clauses;
    manifest["use_assumptions"] = options.use_assumptions;
    manifest["weight_variables"] = weight_vars.size();
    manifest["lambda_all"] = result.lambda_all;
    ojson batches_json = ojson::array();
    for (const BatchOutcome& o : result.batches) {
        ojson bj;
        bj["id"] = o.batch_id;
        bj["indices"] = o.indices;
        bj["cnf_vars"] = o.cnf_vars;
        bj["cnf_clauses"] = o.cnf_clauses;
        bj["lambda_clauses"] = o.lambda_clauses;
        if (o.learn_stats) bj["learn"] = stats_json(*o.learn_stats);
        bj["phase2_status"] = o.phase2_status;
        bj["solve"] = stats_json(o.solve_stats);
        bj["models_found"] = o.models_found;
        if (o.error) bj["error"] = *o.error;
        batches_json.push_back(bj);
    }
    manifest["batches"] = batches_json;
    ojson models_json = ojson::array();
    for (const ModelRecord& m : result.models) {
        ojson mj;
        mj["file"] = m.file_name;
        mj["batch"] = m.model.provenance.batch_id;
        mj["solution_index"] = m.model.provenance.solution_index;
        mj["seed"] = m.model.provenance.seed;
        mj["train_margin"] = m.train_margin;
        if (m.holdout_accuracy) mj["holdout_accuracy"] = *m.holdout_accuracy;
        models_json.push_back(mj);
    }
    manifest["models"] = models_json;
    result.manifest_json = manifest.dump(2) + "\n";
    result.timings_json = timings.dump(2) + "\n";
    return result;
}

void write_run(const TrainResult& result, const std::string& config_name, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto write = [](const std::filesystem::path& path, const std::string& text) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw EnvironmentError("cannot write " + path.string());
        out << text;
    };
    for (const ModelRecord& m : result.models) write(dir / m.file_name, model_to_json(m.model));
    write(dir / (config_name + ".manifest.json"), result.manifest_json);
    write(dir / (config_name + ".timings.json"), result.timings_json);
}

EvalReport summarize(std::vector<double> accuracies) {
    EvalReport r;
    r.accuracies = accuracies;
    if (accuracies.empty()) return r;
    std::sort(accuracies.begin(), accuracies.end());
    r.min = accuracies.front();
    r.max = accuracies.back();
    r.median = accuracies[(accuracies.size() - 1) / 2];
    return r;
}

EvalReport evaluate(std::span<const TrainedModel> models, const Dataset& test_ds) {
    if (models.empty()) throw ConfigError("evaluate needs at least one model");
    std::vector<double> acc;
    acc.reserve(models.size());
    for (const TrainedModel& m : models) acc.push_back(accuracy(m, test_ds, AccuracyMode::Plain));
    return summarize(std::move(acc));
}

std::string format_eval_row(const std::string& config, const EvalReport& report) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2) << config << ',' << report.min * 100.0 << ',' << report.median * 100.0 << ','
        << report.max * 100.0;
    return out.str();
}

std::vector<std::pair<std::string, EvalReport>> report_from_manifests(std::span<const std::filesystem::path> manifests) {
    std::vector<std::pair<std::string, EvalReport>> rows;
    for (const auto& path : manifests) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw EnvironmentError("cannot open manifest " + path.string());
        ojson j;
        try {
            j = ojson::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("bad manifest " + path.string() + ": " + e.what());
        }
        std::vector<double> acc;
        for (const auto& m : j.at("models"))
            if (m.contains("holdout_accuracy")) acc.push_back(m.at("holdout_accuracy").get<double>());
        if (acc.empty()) continue;
        rows.emplace_back(j.at("config").get<std::string>(), summarize(std::move(acc)));
    }
    return rows;
}

} // namespace satnn
