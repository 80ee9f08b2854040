#include "support/local_sat.hpp"

#include "satnn/errors.hpp"
#include "satnn/random.hpp"
#include "satnn/solver.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

using namespace satnn;
namespace fs = std::filesystem;

namespace {

SolverConfig quick() {
    SolverConfig cfg;
    cfg.timeout_secs = 30;
    return cfg;
}

Curriculum small_curriculum(double initial) {
    Curriculum c;
    c.initial_fraction = initial;
    c.iterations_per_round = 2;
    c.max_rounds = 3;
    c.min_chunk = 1;
    return c;
}

// n+1 pigeons into n holes.
CnfFormula pigeonhole(int holes) {
    CnfFormula f;
    const int pigeons = holes + 1;
    std::vector<std::vector<Lit>> p(static_cast<std::size_t>(pigeons));
    for (auto& row : p)
        for (int h = 0; h < holes; ++h) row.push_back(f.fresh_var());
    for (auto& row : p) f.add_clause(row);
    for (int h = 0; h < holes; ++h)
        for (int i = 0; i < pigeons; ++i)
            for (int j = i + 1; j < pigeons; ++j)
                f.add_clause({~p[static_cast<std::size_t>(i)][static_cast<std::size_t>(h)],
                              ~p[static_cast<std::size_t>(j)][static_cast<std::size_t>(h)]});
    return f;
}

fs::path write_script(const std::string& name, const std::string& body) {
    const fs::path p = fs::temp_directory_path() / name;
    std::ofstream(p) << "#!/bin/sh\n" << body << "\n";
    fs::permissions(p, fs::perms::owner_all);
    return p;
}

} // namespace

TEST_CASE("solver output parsing") {
    auto r = parse_solver_output("c hi\ns SATISFIABLE\nv 1 -2\nv 3 0\n", 3);
    CHECK(r.status == SolveStatus::Sat);
    CHECK(r.assignment.value(1));
    CHECK_FALSE(r.assignment.value(2));
    CHECK(r.assignment.value(3));
    CHECK(parse_solver_output("s UNSATISFIABLE\n", 3).status == SolveStatus::Unsat);
    CHECK(parse_solver_output("s UNKNOWN\n", 3).status == SolveStatus::Timeout);
    CHECK_THROWS_AS(parse_solver_output("garbage\n", 3), EnvironmentError);
    CHECK(std::string(to_string(SolveStatus::Sat)) == "SAT");
}

TEST_CASE("solve with the bundled solver") {
    CnfFormula f;
    Lit a = f.fresh_var(), b = f.fresh_var();
    f.add_clause({a, b});
    f.add_clause({~a, b});
    const SolveResult r = solve(f, {}, quick());
    REQUIRE(r.status == SolveStatus::Sat);
    CHECK(f.satisfied_by(r.assignment));
    CHECK(r.assignment.value(b));

    const Lit as[] = {~b};
    CHECK(solve(f, as, quick()).status == SolveStatus::Unsat);
    const Lit f_as[] = {kFalse};
    CHECK(solve(f, f_as, quick()).status == SolveStatus::Unsat);

    CHECK(solve(CnfFormula{}, {}, quick()).status == SolveStatus::Sat);
}

TEST_CASE("timeouts kill the solver") {
    SolverConfig cfg = quick();
    cfg.solver_path = write_script("satnn_sleepy.sh", "sleep 20").string();
    cfg.command = "{solver} {input}";
    cfg.timeout_secs = 0.3;
    CnfFormula f;
    f.fresh_var();
    const SolveResult r = solve(f, {}, cfg);
    CHECK(r.status == SolveStatus::Timeout);
    CHECK(r.wall_time < 5.0);

    SolverConfig hard = quick();
    hard.timeout_secs = 0.5;
    CHECK(solve(pigeonhole(11), {}, hard).status == SolveStatus::Timeout);
}

TEST_CASE("solver failures are environment errors") {
    SolverConfig cfg = quick();
    cfg.solver_path = "/nonexistent/solver";
    CnfFormula f;
    f.fresh_var();
    CHECK_THROWS_AS(solve(f, {}, cfg), EnvironmentError);

    SolverConfig liar = quick();
    liar.solver_path = write_script("satnn_liar.sh", "echo 's SATISFIABLE'; echo 'v -1 0'").string();
    liar.command = "{solver} {input}";
    Lit a = f.fresh_var();
    f.add_clause({a});
    CHECK_THROWS_AS(solve(f, {}, liar), EnvironmentError);

    SolverConfig bad = quick();
    bad.timeout_secs = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("implied_clauses examples") {
    CnfFormula f;
    Lit a = f.fresh_var();
    f.add_clause({a});
    const int vars[] = {a.var()};
    const auto r = implied_clauses(f, vars, quick(), small_curriculum(1.0));
    REQUIRE(r.learned.clauses.size() == 1);
    CHECK(r.learned.clauses[0] == Clause{a});
    CHECK(r.stats.probes > 0);
    CHECK(r.stats.unsat > 0);

    CnfFormula g;
    Lit b = g.fresh_var();
    g.fresh_var();
    const int only_b[] = {b.var()};
    CHECK(implied_clauses(g, only_b, quick(), small_curriculum(1.0)).learned.clauses.empty());
}

TEST_CASE("learned clauses are implied by their formula") {
    // x1 xor x2 xor x3 = 1 plus x1 -> x4
    CnfFormula f;
    Lit x1 = f.fresh_var(), x2 = f.fresh_var(), x3 = f.fresh_var(), x4 = f.fresh_var();
    f.add_clause({f.emit_xor(f.emit_xor(x1, x2), x3)});
    f.add_clause({~x1, x4});
    const int vars[] = {x1.var(), x2.var(), x3.var(), x4.var()};
    SolverConfig cfg = quick();
    cfg.seed = 5;
    Curriculum c = small_curriculum(1.0);
    c.iterations_per_round = 8;
    const auto r = implied_clauses(f, vars, cfg, c, 2);
    CHECK(r.learned.origin == 2);
    CHECK_FALSE(r.learned.clauses.empty());
    for (const Clause& cl : r.learned.clauses) {
        CHECK(certify_clause(f, cl, cfg));
        std::vector<Lit> neg;
        for (Lit l : cl) neg.push_back(~l);
        CHECK_FALSE(satnn::testing::local_solve(f, neg));
    }
    CnfFormula g = f;
    g.conjoin(r.learned.clauses);
    CHECK(solve(g, {}, cfg).status == SolveStatus::Sat);
    CHECK_FALSE(certify_clause(f, Clause{x2}, cfg));
}

TEST_CASE("curriculum never grows and respects its floor") {
    CnfFormula f;
    std::vector<int> vars;
    for (int i = 0; i < 40; ++i) vars.push_back(f.fresh_var().var());
    Curriculum c;
    c.iterations_per_round = 1;
    c.max_rounds = 30;
    c.min_chunk = 10;
    c.decay = 0.2;
    const auto r = implied_clauses(f, vars, quick(), c);
    CHECK(r.stats.rounds == 30);
    CHECK(r.stats.final_chunk == doctest::Approx(10));
    CHECK(r.learned.clauses.empty());

    c.min_chunk = 100; // above the initial chunk: the chunk stays put
    c.max_rounds = 3;
    CHECK(implied_clauses(f, vars, quick(), c).stats.final_chunk == doctest::Approx(40));
}

TEST_CASE("merge_lambda") {
    LearnedClauseSet a{{{Lit::positive(1), Lit::negative(2)}, {Lit::positive(3)}}, 0};
    LearnedClauseSet b{{{Lit::negative(2), Lit::positive(1)}, {Lit::negative(4)}}, 1};
    const LearnedClauseSet one[] = {a};
    CHECK(merge_lambda(one).clauses == a.clauses);
    const LearnedClauseSet both[] = {a, b};
    CHECK(merge_lambda(both).clauses.size() == 3);
    LearnedClauseSet c{{{Lit::positive(5)}}, 2};
    const LearnedClauseSet disjoint[] = {a, c};
    CHECK(merge_lambda(disjoint).clauses.size() == 3);
}

TEST_CASE("assumption_solve examples") {
    CnfFormula empty;
    std::vector<int> vars;
    for (int i = 0; i < 10; ++i) vars.push_back(empty.fresh_var().var());
    auto r = assumption_solve(empty, vars, 1, quick(), small_curriculum(0.9));
    REQUIRE(r.solutions.size() == 1);
    CHECK(r.stats.probes == 1);
    CHECK_FALSE(r.shortfall);

    CnfFormula unique;
    std::vector<int> uv;
    for (int i = 0; i < 4; ++i) {
        Lit l = unique.fresh_var();
        uv.push_back(l.var());
        unique.add_clause({i % 2 ? l : ~l});
    }
    Curriculum c = small_curriculum(0.5);
    c.iterations_per_round = 20;
    auto u = assumption_solve(unique, uv, 1, quick(), c);
    REQUIRE(u.solutions.size() == 1);
    for (int i = 0; i < 4; ++i) CHECK(u.solutions[0].assignment.value(uv[static_cast<std::size_t>(i)]) == (i % 2 == 1));

    auto three = assumption_solve(empty, vars, 3, quick(), small_curriculum(0.9));
    REQUIRE(three.solutions.size() == 3);
    std::set<std::vector<bool>> distinct;
    for (const auto& s : three.solutions) {
        std::vector<bool> p;
        for (int v : vars) p.push_back(s.assignment.value(v));
        distinct.insert(p);
    }
    CHECK(distinct.size() == 3);

    CnfFormula unsat;
    Lit z = unsat.fresh_var();
    unsat.add_clause({z});
    unsat.add_clause({~z});
    const int zv[] = {z.var()};
    auto none = assumption_solve(unsat, zv, 1, quick(), small_curriculum(1.0));
    CHECK(none.shortfall);
    CHECK(none.solutions.empty());
    CHECK_THROWS_AS(assumption_solve(unsat, zv, 0, quick()), ConfigError);
}

TEST_CASE("batch jobs keep order, isolate failures and ignore pool size") {
    auto f = std::make_shared<CnfFormula>();
    std::vector<int> vars;
    for (int i = 0; i < 8; ++i) vars.push_back(f->fresh_var().var());
    f->add_clause({Lit::positive(1), Lit::positive(2)});
    std::vector<Job> jobs;
    for (int i = 0; i < 20; ++i) {
        Job j;
        j.formula = f;
        j.weight_vars = vars;
        j.mode = i % 2 ? JobMode::AssumptionSolve : JobMode::LearnClauses;
        j.curriculum = small_curriculum(0.9);
        j.origin = i;
        jobs.push_back(j);
    }
    SolverConfig cfg = quick();
    cfg.seed = 77;
    cfg.max_parallel = 1;
    const auto serial = run_batch_jobs(jobs, cfg);
    cfg.max_parallel = 8;
    const auto parallel = run_batch_jobs(jobs, cfg);
    REQUIRE(serial.size() == 20);
    for (std::size_t i = 0; i < 20; ++i) {
        CHECK_FALSE(serial[i].error);
        CHECK(serial[i].seed == derive_seed(77, i));
        CHECK(serial[i].seed == parallel[i].seed);
        if (i % 2) {
            REQUIRE(serial[i].assumption);
            REQUIRE(parallel[i].assumption);
            CHECK(serial[i].assumption->stats.probes == parallel[i].assumption->stats.probes);
        } else {
            REQUIRE(serial[i].learned);
            CHECK(serial[i].learned->learned.clauses == parallel[i].learned->learned.clauses);
            CHECK(serial[i].learned->learned.origin == static_cast<int>(i));
        }
    }

    std::vector<Job> mixed(jobs.begin(), jobs.begin() + 4);
    Job broken = mixed[0];
    broken.formula = nullptr;
    mixed[2] = broken;
    const auto mixed_results = run_batch_jobs(mixed, cfg);
    CHECK(mixed_results[2].error);
    CHECK_FALSE(mixed_results[0].error);
    CHECK_FALSE(mixed_results[3].error);

    SolverConfig missing = cfg;
    missing.solver_path = "/nonexistent/solver";
    const auto env = run_batch_jobs(std::span<const Job>(jobs.data(), 2), missing);
    CHECK(env[0].error);
    CHECK(env[1].error);
}

TEST_CASE("job manifest and lambda files round trip") {
    const std::vector<ManifestEntry> entries{{"0", "batch_0.cnf", JobMode::AssumptionSolve, 12},
                                             {"1", "batch_1.cnf", JobMode::LearnClauses, 99}};
    const std::string text = format_job_manifest(entries);
    CHECK(text.find("0 batch_0.cnf assume 12\n") != std::string::npos);
    CHECK(parse_job_manifest(text) == entries);
    CHECK(parse_job_mode("solve") == JobMode::Solve);
    CHECK_THROWS(parse_job_mode("fly"));

    LearnedClauseSet set{{{Lit::positive(1), Lit::negative(3)}, {Lit::positive(2)}}, 4};
    const LearnedClauseSet back = parse_lambda(format_lambda(set, 3));
    CHECK(back.origin == 4);
    CHECK(back.clauses == set.clauses);
}
