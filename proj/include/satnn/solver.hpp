#pragma once

#include "satnn/cnf.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace satnn {

/// How to launch the external solver. `command` is split on whitespace;
/// the placeholders {solver}, {input} and {seed} are substituted per call.
/// The solver must print SAT-competition output ("s ..." and "v ..." lines).
struct SolverConfig {
    std::string command = "{solver} -q --seed={seed} {input}";
    std::string solver_path = default_solver_path();
    double timeout_secs = 180.0;
    std::uint64_t seed = 0;
    int max_parallel = 1;
    std::filesystem::path work_dir = std::filesystem::temp_directory_path();

    void validate() const;

    /// $SATNN_SOLVER if set, otherwise the solver built alongside the toolkit.
    static std::string default_solver_path();
};

/// Random-assumption probing schedule shared by clause learning and
/// assumption solving. The chunk of assumed variables starts at
/// `initial_fraction * n` and shrinks by `decay` of itself after each round
/// of `iterations_per_round * ceil(n / chunk)` probes, never dropping below
/// min(min_chunk, initial chunk).
struct Curriculum {
    double initial_fraction = 1.0;
    double decay = 0.05;
    int min_chunk = 50;
    int iterations_per_round = 100;
    int max_rounds = 20;
    std::size_t max_clauses = 500;

    static Curriculum for_clause_learning() { return {}; }
    static Curriculum for_assumption_solving() {
        Curriculum c;
        c.initial_fraction = 0.9;
        return c;
    }
};

enum class SolveStatus { Sat, Unsat, Timeout };

const char* to_string(SolveStatus s);

struct SolveResult {
    SolveStatus status = SolveStatus::Timeout;
    Assignment assignment; // meaningful only for Sat
    double wall_time = 0.0;
};

/// Parses "s SATISFIABLE"/"s UNSATISFIABLE"/"s UNKNOWN" and any number of
/// "v" lines. Variables the solver omits default to false.
SolveResult parse_solver_output(std::string_view text, int var_count);

/// One solver call with `assumptions` appended as unit clauses. SAT
/// assignments are checked against every clause before being returned.
SolveResult solve(const CnfFormula& formula, std::span<const Lit> assumptions, const SolverConfig& cfg);

/// A formula serialised once and probed many times under different
/// assumptions; the DIMACS body is shared across probes.
class ProbeSession {
public:
    ProbeSession(const CnfFormula& formula, SolverConfig cfg);

    SolveResult probe(std::span<const Lit> assumptions, std::uint64_t solver_seed) const;
    [[nodiscard]] const CnfFormula& formula() const { return formula_; }

private:
    const CnfFormula& formula_;
    SolverConfig cfg_;
    std::string body_;
};

/// Implied clauses of one batch formula (lambda_i).
struct LearnedClauseSet {
    std::vector<Clause> clauses;
    int origin = -1;
};

struct ProbeStats {
    std::size_t probes = 0;
    std::size_t sat = 0;
    std::size_t unsat = 0;
    std::size_t timeouts = 0;
    int rounds = 0;
    double final_chunk = 0.0;
};

struct ClauseLearningResult {
    LearnedClauseSet learned;
    ProbeStats stats;
};

/// Probes random full-polarity chunks of `weight_vars`; every UNSAT probe
/// contributes the clause blocking its assumptions. Timeouts contribute
/// nothing.
ClauseLearningResult implied_clauses(const CnfFormula& formula, std::span<const int> weight_vars, const SolverConfig& cfg,
                                     const Curriculum& curriculum = Curriculum::for_clause_learning(), int origin = -1);

/// True iff formula AND NOT(clause) is UNSAT, i.e. the formula implies the clause.
bool certify_clause(const CnfFormula& formula, const Clause& clause, const SolverConfig& cfg);

/// Concatenation without duplicate clauses (equality up to literal order).
LearnedClauseSet merge_lambda(std::span<const LearnedClauseSet> sets);

struct AssumptionSolveResult {
    std::vector<SolveResult> solutions; // distinct on weight_vars
    bool shortfall = false;
    ProbeStats stats;
};

/// Collects SAT probes until `num_sols` models that differ on `weight_vars`
/// are found or the round budget runs out.
AssumptionSolveResult assumption_solve(const CnfFormula& formula, std::span<const int> weight_vars, int num_sols,
                                       const SolverConfig& cfg,
                                       const Curriculum& curriculum = Curriculum::for_assumption_solving());

enum class JobMode { Solve, LearnClauses, AssumptionSolve };

const char* to_string(JobMode m);
JobMode parse_job_mode(std::string_view s);

struct Job {
    std::shared_ptr<const CnfFormula> formula;
    std::vector<int> weight_vars;
    JobMode mode = JobMode::Solve;
    int num_sols = 1;
    Curriculum curriculum = Curriculum::for_assumption_solving();
    int origin = -1;
};

struct JobResult {
    std::optional<std::string> error;
    std::optional<SolveResult> solve;
    std::optional<ClauseLearningResult> learned;
    std::optional<AssumptionSolveResult> assumption;
    std::uint64_t seed = 0;
};

/// Runs jobs on up to cfg.max_parallel worker threads. Job i uses seed
/// derive_seed(cfg.seed, i), so results do not depend on the pool size.
/// Results come back in submission order; a failing job only fails itself.
std::vector<JobResult> run_batch_jobs(std::span<const Job> jobs, const SolverConfig& cfg);

/// One line per job: "<batch id> <cnf path> <mode> <seed>".
struct ManifestEntry {
    std::string batch_id;
    std::filesystem::path cnf_path;
    JobMode mode = JobMode::Solve;
    std::uint64_t seed = 0;

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

std::string format_job_manifest(std::span<const ManifestEntry> entries);
std::vector<ManifestEntry> parse_job_manifest(std::string_view text);

/// Learned clauses as DIMACS with a "c origin <id>" comment.
std::string format_lambda(const LearnedClauseSet& set, int var_count);
LearnedClauseSet parse_lambda(std::string_view text);

} // namespace satnn
