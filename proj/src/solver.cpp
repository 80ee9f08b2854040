#include "satnn/solver.hpp"

#include "satnn/errors.hpp"
#include "satnn/process.hpp"
#include "satnn/random.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>
#include <unistd.h>

namespace satnn {

std::string SolverConfig::default_solver_path() {
    if (const char* env = std::getenv("SATNN_SOLVER"); env && *env) return env;
#ifdef SATNN_DEFAULT_SOLVER
    return SATNN_DEFAULT_SOLVER;
#else
    return "cadical";
#endif
}

void SolverConfig::validate() const {
    if (!(timeout_secs > 0)) throw ConfigError("solver timeout must be positive");
    if (max_parallel < 1) throw ConfigError("max_parallel must be at least 1");
    if (command.find("{input}") == std::string::npos) throw ConfigError("solver command needs an {input} placeholder");
}

const char* to_string(SolveStatus s) {
    switch (s) {
    case SolveStatus::Sat: return "SAT";
    case SolveStatus::Unsat: return "UNSAT";
    case SolveStatus::Timeout: return "TIMEOUT";
    }
    return "?";
}

SolveResult parse_solver_output(std::string_view text, int var_count) {
    SolveResult result;
    std::optional<SolveStatus> status;
    Assignment assignment(var_count);
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.rfind("s ", 0) == 0) {
            const std::string verdict = line.substr(2);
            if (verdict.find("UNSATISFIABLE") != std::string::npos)
                status = SolveStatus::Unsat;
            else if (verdict.find("SATISFIABLE") != std::string::npos)
                status = SolveStatus::Sat;
            else if (verdict.find("UNKNOWN") != std::string::npos)
                status = SolveStatus::Timeout;
            else
                throw EnvironmentError("unrecognised solver status line: " + line);
        } else if (line.rfind("v", 0) == 0) {
            std::istringstream vals(line.substr(1));
            long long code = 0;
            while (vals >> code) {
                if (code == 0) break;
                const long long var = std::llabs(code);
                if (var <= var_count) assignment.set(static_cast<int>(var), code > 0);
            }
        }
    }
    if (!status) throw EnvironmentError("solver output has no status line");
    result.status = *status;
    if (result.status == SolveStatus::Sat) result.assignment = std::move(assignment);
    return result;
}

namespace {

std::string body_of(const CnfFormula& formula) {
    std::string body;
    body.reserve(formula.clauses().size() * 16);
    for (const Clause& clause : formula.clauses()) {
        for (Lit l : clause) {
            body += std::to_string(l.dimacs());
            body += ' ';
        }
        body += "0\n";
    }
    return body;
}

std::filesystem::path scratch_path(const std::filesystem::path& dir) {
    static std::atomic<std::uint64_t> counter{0};
    return dir / ("satnn-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)) + ".cnf");
}

std::vector<std::string> expand_command(const SolverConfig& cfg, const std::string& input, std::uint64_t seed) {
    std::vector<std::string> argv;
    std::istringstream in(cfg.command);
    std::string token;
    auto replace_all = [](std::string& s, const std::string& from, const std::string& to) {
        for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
            s.replace(pos, from.size(), to);
    };
    while (in >> token) {
        replace_all(token, "{solver}", cfg.solver_path);
        replace_all(token, "{input}", input);
        // Solvers commonly take 32-bit seeds.
        replace_all(token, "{seed}", std::to_string(seed & 0x7fffffffULL));
        argv.push_back(token);
    }
    return argv;
}

struct ScratchFile {
    std::filesystem::path path;
    ~ScratchFile() {
        std::error_code ec;
        std::filesystem::remove(path, ec);
    }
};

SolveResult run_solver(const CnfFormula& formula, const std::string& body, std::span<const Lit> assumptions,
                       const SolverConfig& cfg, std::uint64_t solver_seed) {
    cfg.validate();
    std::vector<Lit> units;
    for (Lit a : assumptions) {
        if (a.is_true()) continue;
        if (a.is_false()) return SolveResult{SolveStatus::Unsat, {}, 0.0};
        if (a.var() > formula.var_count()) throw RangeError("assumption on unallocated variable");
        units.push_back(a);
    }

    ScratchFile file{scratch_path(cfg.work_dir)};
    {
        std::ofstream out(file.path, std::ios::binary);
        if (!out) throw EnvironmentError("cannot write " + file.path.string());
        out << "p cnf " << formula.var_count() << ' ' << formula.clauses().size() + units.size() << '\n' << body;
        for (Lit u : units) out << u.dimacs() << " 0\n";
        if (!out) throw EnvironmentError("short write to " + file.path.string());
    }

    const auto timeout = std::chrono::milliseconds(static_cast<long long>(std::ceil(cfg.timeout_secs * 1000.0)));
    const ProcessOutcome proc = run_process(expand_command(cfg, file.path.string(), solver_seed), timeout);
    if (proc.timed_out) return SolveResult{SolveStatus::Timeout, {}, proc.wall_seconds};
    if (proc.exit_code == 127 && proc.stdout_text.empty())
        throw EnvironmentError("solver '" + cfg.solver_path + "' could not be executed");

    SolveResult result;
    try {
        result = parse_solver_output(proc.stdout_text, formula.var_count());
    } catch (const EnvironmentError& e) {
        throw EnvironmentError(std::string(e.what()) + " (exit code " + std::to_string(proc.exit_code) + ")");
    }
    result.wall_time = proc.wall_seconds;
    if (result.status == SolveStatus::Sat) {
        if (!formula.satisfied_by(result.assignment))
            throw EnvironmentError("solver returned an assignment that violates the formula");
        for (Lit u : units)
            if (!result.assignment.value(u)) throw EnvironmentError("solver returned an assignment that violates an assumption");
    }
    return result;
}

struct ChunkSchedule {
    double chunk;
    double floor;
    std::size_t n;

    ChunkSchedule(std::size_t n_vars, const Curriculum& c) : n{n_vars} {
        if (c.initial_fraction <= 0 || c.initial_fraction > 1) throw ConfigError("initial_fraction must lie in (0, 1]");
        if (c.decay < 0 || c.decay >= 1) throw ConfigError("decay must lie in [0, 1)");
        if (c.iterations_per_round < 1 || c.max_rounds < 1) throw ConfigError("curriculum budgets must be positive");
        chunk = std::round(c.initial_fraction * static_cast<double>(n));
        floor = std::min(static_cast<double>(std::max(c.min_chunk, 0)), chunk);
    }
    [[nodiscard]] std::size_t size() const {
        return std::min(n, static_cast<std::size_t>(std::floor(chunk)));
    }
    [[nodiscard]] std::size_t probes_per_iteration() const {
        const std::size_t k = size();
        return k == 0 ? 1 : (n + k - 1) / k;
    }
    void shrink(double decay) { chunk = std::max(chunk - decay * chunk, floor); }
};

std::vector<Lit> random_assumptions(Rng& rng, std::span<const int> vars, std::size_t k) {
    std::vector<Lit> lits;
    lits.reserve(k);
    for (std::size_t idx : sample_without_replacement(rng, vars.size(), k))
        lits.push_back(coin(rng) ? Lit::positive(vars[idx]) : Lit::negative(vars[idx]));
    return lits;
}

Clause normalised(Clause c) {
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    return c;
}

} // namespace

SolveResult solve(const CnfFormula& formula, std::span<const Lit> assumptions, const SolverConfig& cfg) {
    return run_solver(formula, body_of(formula), assumptions, cfg, cfg.seed);
}

ProbeSession::ProbeSession(const CnfFormula& formula, SolverConfig cfg)
    : formula_{formula}, cfg_{std::move(cfg)}, body_{body_of(formula)} {}

SolveResult ProbeSession::probe(std::span<const Lit> assumptions, std::uint64_t solver_seed) const {
    return run_solver(formula_, body_, assumptions, cfg_, solver_seed);
}

ClauseLearningResult implied_clauses(const CnfFormula& formula, std::span<const int> weight_vars, const SolverConfig& cfg,
                                     const Curriculum& curriculum, int origin) {
    ClauseLearningResult out;
    out.learned.origin = origin;
    if (weight_vars.empty()) return out;

    ProbeSession session{formula, cfg};
    Rng rng{cfg.seed};
    ChunkSchedule schedule{weight_vars.size(), curriculum};
    std::set<Clause> seen;

    for (int round = 0; round < curriculum.max_rounds; ++round) {
        const std::size_t k = std::max<std::size_t>(1, schedule.size());
        const std::size_t s = (weight_vars.size() + k - 1) / k;
        for (int count = 0; count < curriculum.iterations_per_round; ++count) {
            for (std::size_t i = 0; i < s; ++i) {
                const std::vector<Lit> assumed = random_assumptions(rng, weight_vars, k);
                const std::uint64_t solver_seed = rng();
                const SolveResult r = session.probe(assumed, solver_seed);
                ++out.stats.probes;
                if (r.status == SolveStatus::Sat) {
                    ++out.stats.sat;
                    continue;
                }
                if (r.status == SolveStatus::Timeout) {
                    ++out.stats.timeouts;
                    continue;
                }
                ++out.stats.unsat;
                Clause blocking;
                for (Lit a : assumed) blocking.push_back(~a);
                Clause key = normalised(blocking);
                if (seen.insert(key).second) out.learned.clauses.push_back(std::move(key));
                if (out.learned.clauses.size() >= curriculum.max_clauses) {
                    out.stats.rounds = round + 1;
                    out.stats.final_chunk = schedule.chunk;
                    return out;
                }
            }
        }
        out.stats.rounds = round + 1;
        schedule.shrink(curriculum.decay);
    }
    out.stats.final_chunk = schedule.chunk;
    return out;
}

bool certify_clause(const CnfFormula& formula, const Clause& clause, const SolverConfig& cfg) {
    std::vector<Lit> negated;
    for (Lit l : clause) negated.push_back(~l);
    const SolveResult r = solve(formula, negated, cfg);
    return r.status == SolveStatus::Unsat;
}

LearnedClauseSet merge_lambda(std::span<const LearnedClauseSet> sets) {
    LearnedClauseSet merged;
    if (sets.size() == 1) merged.origin = sets.front().origin;
    std::set<Clause> seen;
    for (const auto& set : sets)
        for (const Clause& c : set.clauses) {
            Clause key = normalised(c);
            if (seen.insert(key).second) merged.clauses.push_back(c);
        }
    return merged;
}

AssumptionSolveResult assumption_solve(const CnfFormula& formula, std::span<const int> weight_vars, int num_sols,
                                       const SolverConfig& cfg, const Curriculum& curriculum) {
    if (num_sols < 1) throw ConfigError("num_sols must be at least 1");
    AssumptionSolveResult out;
    ProbeSession session{formula, cfg};
    Rng rng{cfg.seed};
    ChunkSchedule schedule{weight_vars.size(), curriculum};
    std::set<std::vector<bool>> seen;

    for (int round = 0; round < curriculum.max_rounds; ++round) {
        const std::size_t k = schedule.size();
        const std::size_t s = schedule.probes_per_iteration();
        for (int count = 0; count < curriculum.iterations_per_round; ++count) {
            for (std::size_t i = 0; i < s; ++i) {
                const std::vector<Lit> assumed = random_assumptions(rng, weight_vars, k);
                const std::uint64_t solver_seed = rng();
                SolveResult r = session.probe(assumed, solver_seed);
                ++out.stats.probes;
                if (r.status == SolveStatus::Unsat) {
                    ++out.stats.unsat;
                    continue;
                }
                if (r.status == SolveStatus::Timeout) {
                    ++out.stats.timeouts;
                    continue;
                }
                ++out.stats.sat;
                std::vector<bool> projection;
                projection.reserve(weight_vars.size());
                for (int v : weight_vars) projection.push_back(r.assignment.value(v));
                if (!seen.insert(std::move(projection)).second) continue;
                out.solutions.push_back(std::move(r));
                if (out.solutions.size() == static_cast<std::size_t>(num_sols)) {
                    out.stats.rounds = round + 1;
                    out.stats.final_chunk = schedule.chunk;
                    return out;
                }
            }
        }
        out.stats.rounds = round + 1;
        schedule.shrink(curriculum.decay);
    }
    out.stats.final_chunk = schedule.chunk;
    out.shortfall = true;
    return out;
}

const char* to_string(JobMode m) {
    switch (m) {
    case JobMode::Solve: return "solve";
    case JobMode::LearnClauses: return "learn";
    case JobMode::AssumptionSolve: return "assume";
    }
    return "?";
}

JobMode parse_job_mode(std::string_view s) {
    if (s == "solve") return JobMode::Solve;
    if (s == "learn") return JobMode::LearnClauses;
    if (s == "assume") return JobMode::AssumptionSolve;
    throw FormatError("unknown job mode '" + std::string(s) + "'");
}

std::vector<JobResult> run_batch_jobs(std::span<const Job> jobs, const SolverConfig& cfg) {
    cfg.validate();
    std::vector<JobResult> results(jobs.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) {
            const Job& job = jobs[i];
            JobResult& res = results[i];
            SolverConfig job_cfg = cfg;
            job_cfg.seed = derive_seed(cfg.seed, i);
            res.seed = job_cfg.seed;
            try {
                if (!job.formula) throw ConfigError("job has no formula");
                switch (job.mode) {
                case JobMode::Solve: res.solve = solve(*job.formula, {}, job_cfg); break;
                case JobMode::LearnClauses:
                    res.learned = implied_clauses(*job.formula, job.weight_vars, job_cfg, job.curriculum, job.origin);
                    break;
                case JobMode::AssumptionSolve:
                    res.assumption = assumption_solve(*job.formula, job.weight_vars, job.num_sols, job_cfg, job.curriculum);
                    break;
                }
            } catch (const std::exception& e) {
                res.error = e.what();
            }
        }
    };

    const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.max_parallel), jobs.size());
    if (threads <= 1) {
        worker();
        return results;
    }
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    pool.clear();
    return results;
}

std::string format_job_manifest(std::span<const ManifestEntry> entries) {
    std::ostringstream out;
    for (const auto& e : entries) out << e.batch_id << ' ' << e.cnf_path.string() << ' ' << to_string(e.mode) << ' ' << e.seed << '\n';
    return out.str();
}

std::vector<ManifestEntry> parse_job_manifest(std::string_view text) {
    std::vector<ManifestEntry> entries;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        std::istringstream fields(line);
        ManifestEntry e;
        std::string path, mode;
        if (!(fields >> e.batch_id >> path >> mode >> e.seed))
            throw FormatError("job manifest line " + std::to_string(line_no) + " needs: batch_id cnf_path mode seed");
        e.cnf_path = path;
        e.mode = parse_job_mode(mode);
        entries.push_back(std::move(e));
    }
    return entries;
}

std::string format_lambda(const LearnedClauseSet& set, int var_count) {
    std::ostringstream out;
    out << "c origin " << set.origin << '\n';
    out << "p cnf " << var_count << ' ' << set.clauses.size() << '\n';
    for (const Clause& c : set.clauses) {
        for (Lit l : c) out << l.dimacs() << ' ';
        out << "0\n";
    }
    return out.str();
}

LearnedClauseSet parse_lambda(std::string_view text) {
    LearnedClauseSet set;
    std::istringstream in{std::string(text)};
    std::string line;
    Clause current;
    while (std::getline(in, line)) {
        if (line.rfind("c origin ", 0) == 0) {
            set.origin = std::stoi(line.substr(9));
            continue;
        }
        if (line.empty() || line.front() == 'c' || line.front() == 'p') continue;
        std::istringstream lits(line);
        int code = 0;
        while (lits >> code) {
            if (code == 0) {
                set.clauses.push_back(std::move(current));
                current.clear();
            } else {
                current.push_back(Lit::from_dimacs(code));
            }
        }
        if (!lits.eof()) throw FormatError("bad literal in lambda file: " + line);
    }
    if (!current.empty()) throw FormatError("unterminated clause in lambda file");
    return set;
}

} // namespace satnn
