#include "support/local_sat.hpp"

#include "satnn/cnf.hpp"
#include "satnn/errors.hpp"
#include "satnn/random.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace satnn;
using satnn::testing::local_solve;
using satnn::testing::project_models;

TEST_CASE("fresh_var numbers from 1 and never repeats") {
    CnfFormula f;
    CHECK(f.fresh_var("w0_b0").var() == 1);
    for (int i = 0; i < 4; ++i) f.fresh_var();
    CHECK(f.fresh_var().var() == 6);
    CHECK(f.var_count() == 6);
    CHECK(f.labels().at(1) == "w0_b0");
}

TEST_CASE("literals") {
    Lit a = Lit::positive(3);
    CHECK((~a).var() == 3);
    CHECK((~a).is_negated());
    CHECK(~~a == a);
    CHECK(Lit::from_dimacs(-3) == ~a);
    CHECK(a.dimacs() == 3);
    CHECK(kTrue == ~kFalse);
    CHECK(kTrue.is_constant());
    CHECK_FALSE(a.is_constant());
}

namespace {

// Models over (a, b, y) of a freshly emitted gate.
std::vector<std::vector<bool>> gate_models(Lit (CnfFormula::*emit)(Lit, Lit), std::size_t* clauses = nullptr) {
    CnfFormula f;
    Lit a = f.fresh_var(), b = f.fresh_var();
    Lit y = (f.*emit)(a, b);
    if (clauses) *clauses = f.clauses().size();
    const std::vector<int> vars{a.var(), b.var(), y.var()};
    auto models = project_models(f, vars);
    // y may be a negated literal for hashed xor; fold polarity back in
    if (y.is_negated())
        for (auto& m : models) m[2] = !m[2];
    return models;
}

} // namespace

TEST_CASE("gate clauses define exactly the gate function") {
    std::size_t n = 0;
    auto and_models = gate_models(&CnfFormula::emit_and, &n);
    CHECK(n == 3);
    REQUIRE(and_models.size() == 4);
    for (auto& m : and_models) CHECK(m[2] == (m[0] && m[1]));

    auto or_models = gate_models(&CnfFormula::emit_or, &n);
    CHECK(n == 3);
    REQUIRE(or_models.size() == 4);
    for (auto& m : or_models) CHECK(m[2] == (m[0] || m[1]));

    auto xor_models = gate_models(&CnfFormula::emit_xor, &n);
    CHECK(n == 4);
    REQUIRE(xor_models.size() == 4);
    for (auto& m : xor_models) CHECK(m[2] == (m[0] != m[1]));
}

TEST_CASE("constant folding") {
    CnfFormula f;
    Lit x = f.fresh_var();
    CHECK(f.emit_and(x, kTrue) == x);
    CHECK(f.emit_and(x, kFalse) == kFalse);
    CHECK(f.emit_and(x, ~x) == kFalse);
    CHECK(f.emit_and(x, x) == x);
    CHECK(f.emit_or(x, kFalse) == x);
    CHECK(f.emit_or(x, kTrue) == kTrue);
    CHECK(f.emit_or(x, ~x) == kTrue);
    CHECK(f.emit_xor(x, x) == kFalse);
    CHECK(f.emit_xor(x, ~x) == kTrue);
    CHECK(f.emit_xor(x, kFalse) == x);
    CHECK(f.emit_xor(x, kTrue) == ~x);
    CHECK(f.clauses().empty());
    CHECK(f.var_count() == 1);
}

TEST_CASE("repeated gates are shared") {
    CnfFormula f;
    Lit a = f.fresh_var(), b = f.fresh_var();
    Lit y = f.emit_and(a, b);
    CHECK(f.emit_and(b, a) == y);
    Lit x = f.emit_xor(a, b);
    CHECK(f.emit_xor(~a, b) == ~x);
    CHECK(f.emit_xor(~a, ~b) == x);
    CHECK(f.emit_or(a, b) != y);
    CHECK(f.clauses().size() == 10);
}

TEST_CASE("assert_equal") {
    CnfFormula f;
    Lit x = f.fresh_var(), y = f.fresh_var();
    f.assert_equal(x, kTrue);
    REQUIRE(f.clauses().size() == 1);
    CHECK(f.clauses()[0] == Clause{x});

    CnfFormula g;
    x = g.fresh_var();
    g.assert_equal(x, kFalse);
    REQUIRE(g.clauses().size() == 1);
    CHECK(g.clauses()[0] == Clause{~x});

    CnfFormula h;
    x = h.fresh_var();
    y = h.fresh_var();
    h.assert_equal(x, y);
    CHECK(h.clauses().size() == 2);
    const Lit as[] = {x, ~y};
    CHECK_FALSE(local_solve(h, as));
}

TEST_CASE("clause simplification") {
    CnfFormula f;
    Lit a = f.fresh_var(), b = f.fresh_var();
    f.add_clause({a, ~a, b});
    CHECK(f.clauses().empty());
    f.add_clause({a, a, b, kFalse});
    REQUIRE(f.clauses().size() == 1);
    CHECK(f.clauses()[0] == Clause{a, b});
    f.add_clause({kTrue});
    CHECK(f.clauses().size() == 1);
    CHECK_THROWS_AS(f.add_clause({Lit::positive(7)}), RangeError);

    CHECK_FALSE(f.contradictory());
    f.add_clause({kFalse});
    CHECK(f.contradictory());
    CHECK_FALSE(local_solve(f));
    const auto before = f.clauses().size();
    f.add_clause({});
    CHECK(f.clauses().size() == before);
}

TEST_CASE("dimacs format") {
    CnfFormula f;
    Lit a = f.fresh_var(), b = f.fresh_var();
    f.add_clause({a, ~b});
    const std::string text = to_dimacs(f);
    CHECK(text.find("p cnf 2 1\n") != std::string::npos);
    CHECK(text.find("\n1 -2 0\n") != std::string::npos);

    CHECK(to_dimacs(CnfFormula{}) == "p cnf 0 0\n");

    CnfFormula labelled;
    labelled.fresh_var("w0_b0");
    CHECK(to_dimacs(labelled) == "c 1 w0_b0\np cnf 1 0\n");

    const Lit units[] = {~a, kTrue};
    CHECK(to_dimacs(f, units).find("p cnf 2 2\n1 -2 0\n-1 0\n") != std::string::npos);
    const Lit bad[] = {kFalse};
    CHECK_THROWS(to_dimacs(f, bad));
}

TEST_CASE("dimacs parse errors") {
    CHECK_THROWS_AS(parse_dimacs("1 2 0\n"), FormatError);
    CHECK_THROWS_AS(parse_dimacs("p cnf 2 1\n1 3 0\n"), FormatError);
    CHECK_THROWS_AS(parse_dimacs("p cnf 2 2\n1 0\n"), FormatError);
    CHECK_THROWS_AS(parse_dimacs("p cnf x 1\n"), FormatError);
}

TEST_CASE("dimacs round trip preserves clauses and verdicts on random formulas") {
    Rng rng(derive_seed(11, 0));
    int sat = 0;
    for (int trial = 0; trial < 100; ++trial) {
        CnfFormula f;
        const int vars = 3 + static_cast<int>(uniform_below(rng, 8));
        for (int v = 0; v < vars; ++v) f.fresh_var("v" + std::to_string(v));
        const int clauses = static_cast<int>(uniform_below(rng, 4 * static_cast<std::uint64_t>(vars)));
        for (int c = 0; c < clauses; ++c) {
            Clause cl;
            const int len = 1 + static_cast<int>(uniform_below(rng, 3));
            for (int i = 0; i < len; ++i) {
                const int v = 1 + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(vars)));
                cl.push_back(coin(rng) ? Lit::positive(v) : Lit::negative(v));
            }
            f.add_clause(cl);
        }
        const CnfFormula g = parse_dimacs(to_dimacs(f));
        CHECK(g.var_count() == f.var_count());
        CHECK(g.labels() == f.labels());
        auto sorted = [](std::vector<Clause> cs) {
            for (auto& c : cs) std::sort(c.begin(), c.end());
            std::sort(cs.begin(), cs.end());
            return cs;
        };
        CHECK(sorted(g.clauses()) == sorted(f.clauses()));
        const bool fs = local_solve(f).has_value();
        CHECK(fs == local_solve(g).has_value());
        sat += fs;
    }
    CHECK(sat > 0);
    CHECK(sat < 100);
}

TEST_CASE("satisfied_by and conjoin") {
    CnfFormula f;
    Lit a = f.fresh_var(), b = f.fresh_var();
    f.add_clause({a, b});
    Assignment m(2);
    CHECK_FALSE(f.satisfied_by(m));
    m.set(2, true);
    CHECK(f.satisfied_by(m));
    const Clause extra[] = {{~b}};
    f.conjoin(extra);
    CHECK_FALSE(f.satisfied_by(m));
    CHECK_FALSE(f.satisfied_by(Assignment(1)));
}
