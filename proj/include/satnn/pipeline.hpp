#pragma once

#include "satnn/datasets.hpp"
#include "satnn/encoder.hpp"
#include "satnn/runtime.hpp"
#include "satnn/solver.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace satnn {

struct TrainOptions {
    bool share_clauses = false;
    int solutions_per_batch = 1;
    /// Phase 2 uses random-assumption probing; false runs one plain solve.
    bool use_assumptions = true;
    Curriculum learn_curriculum = Curriculum::for_clause_learning();
    Curriculum solve_curriculum = Curriculum::for_assumption_solving();
    /// Held-out set used to rank models; absent means ranking by batch order.
    std::optional<Dataset> holdout;
    std::string config_name = "run";
};

struct ModelRecord {
    TrainedModel model;
    std::string file_name;
    double train_margin = 0.0; // fraction of batch examples meeting the margin
    std::optional<double> holdout_accuracy;
};

struct BatchOutcome {
    int batch_id = 0;
    std::vector<std::size_t> indices;
    int cnf_vars = 0;
    std::size_t cnf_clauses = 0;
    std::size_t lambda_clauses = 0;          // learned from this batch
    std::optional<ProbeStats> learn_stats;
    std::string phase2_status;               // sat | partial | none | unsat | timeout | error
    std::optional<std::string> error;
    ProbeStats solve_stats;
    std::size_t models_found = 0;
};

struct TrainResult {
    std::vector<ModelRecord> models; // ranked: best held-out accuracy first
    std::vector<BatchOutcome> batches;
    std::size_t lambda_all = 0;
    std::string manifest_json;        // deterministic under fixed seeds
    std::string timings_json;         // wall-clock data, kept apart

    [[nodiscard]] bool failed() const { return models.empty(); }
};

/// Encodes every sampled batch, optionally learns and shares implied
/// clauses, solves each batch formula, then decodes and certifies every
/// model against its batch margins.
TrainResult train(const Dataset& ds, const NetworkSpec& net, const Hyperparams& hp, const SolverConfig& cfg,
                  const TrainOptions& options);

/// Writes every model, "<config>.manifest.json" and "<config>.timings.json".
void write_run(const TrainResult& result, const std::string& config_name, const std::filesystem::path& dir);

struct EvalReport {
    std::vector<double> accuracies;
    double min = 0.0;
    double median = 0.0; // lower median for even counts
    double max = 0.0;
};

EvalReport evaluate(std::span<const TrainedModel> models, const Dataset& test_ds);
EvalReport summarize(std::vector<double> accuracies);

inline constexpr const char* kEvalCsvHeader = "config,min,median,max";
/// "<config>,<min>,<median>,<max>" with accuracies as percentages.
std::string format_eval_row(const std::string& config, const EvalReport& report);

/// Summary rows recovered from manifests written by `write_run`.
std::vector<std::pair<std::string, EvalReport>> report_from_manifests(std::span<const std::filesystem::path> manifests);

} // namespace satnn
