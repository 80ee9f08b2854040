#pragma once

#include <compare>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace satnn {

/// A boolean literal in DIMACS convention: +v is the positive occurrence of
/// variable v, -v its negation. The code 0 is reserved for the constant
/// pseudo-literals (see `Lit::constant`), which never reach the clause
/// database because every emitter folds them away.
class Lit {
public:
    constexpr Lit() = default;

    static constexpr Lit positive(int var) { return Lit{var, false}; }
    static constexpr Lit negative(int var) { return Lit{var, true}; }
    static constexpr Lit from_dimacs(int code) { return Lit{std::abs(code), code < 0}; }
    static constexpr Lit constant(bool value) { return Lit{0, !value}; }

    [[nodiscard]] constexpr int var() const { return var_; }
    [[nodiscard]] constexpr bool is_negated() const { return negated_; }
    [[nodiscard]] constexpr bool is_constant() const { return var_ == 0; }
    [[nodiscard]] constexpr bool is_true() const { return var_ == 0 && !negated_; }
    [[nodiscard]] constexpr bool is_false() const { return var_ == 0 && negated_; }
    [[nodiscard]] constexpr int dimacs() const { return negated_ ? -var_ : var_; }

    constexpr Lit operator~() const { return Lit{var_, !negated_}; }

    friend constexpr bool operator==(Lit, Lit) = default;
    friend constexpr auto operator<=>(Lit a, Lit b) {
        return std::pair{a.var_, a.negated_} <=> std::pair{b.var_, b.negated_};
    }

private:
    constexpr Lit(int var, bool negated) : var_{var}, negated_{negated} {}

    int var_ = 0;
    bool negated_ = true;
};

inline constexpr Lit kTrue = Lit::constant(true);
inline constexpr Lit kFalse = Lit::constant(false);

using Clause = std::vector<Lit>;

/// Total assignment indexed by variable id. Index 0 is unused.
class Assignment {
public:
    Assignment() = default;
    explicit Assignment(int var_count) : values_(static_cast<std::size_t>(var_count) + 1, false) {}

    [[nodiscard]] int var_count() const { return static_cast<int>(values_.size()) - 1; }
    [[nodiscard]] bool value(int var) const { return values_.at(static_cast<std::size_t>(var)); }
    [[nodiscard]] bool value(Lit lit) const {
        if (lit.is_constant()) return lit.is_true();
        return value(lit.var()) != lit.is_negated();
    }
    void set(int var, bool v) { values_.at(static_cast<std::size_t>(var)) = v; }

    friend bool operator==(const Assignment&, const Assignment&) = default;

private:
    std::vector<bool> values_;
};

/// Growing clause database with fresh-variable allocation and labels.
///
/// Clauses are simplified on insertion: constants are folded, duplicate
/// literals merged, tautologies dropped. A clause that folds to empty marks
/// the formula contradictory; this is materialised once as the pair
/// (c) (-c) over a dedicated variable so the DIMACS stays well formed.
///
/// Gates are hashed: emitting the same gate over the same inputs twice
/// returns the first output and adds no clauses.
class CnfFormula {
public:
    Lit fresh_var(std::string label = {});

    void add_clause(std::span<const Lit> lits);
    void add_clause(std::initializer_list<Lit> lits) { add_clause(std::span{lits.begin(), lits.size()}); }

    Lit emit_and(Lit a, Lit b);
    Lit emit_or(Lit a, Lit b);
    Lit emit_xor(Lit a, Lit b);
    void assert_equal(Lit a, Lit b);

    [[nodiscard]] int var_count() const { return var_count_; }
    [[nodiscard]] const std::vector<Clause>& clauses() const { return clauses_; }
    [[nodiscard]] const std::map<int, std::string>& labels() const { return labels_; }
    [[nodiscard]] bool contradictory() const { return contradictory_; }

    /// True iff every clause holds under `assignment`.
    [[nodiscard]] bool satisfied_by(const Assignment& assignment) const;

    /// Appends clauses over already allocated variables.
    void conjoin(std::span<const Clause> extra);

private:
    int var_count_ = 0;
    std::vector<Clause> clauses_;
    std::map<int, std::string> labels_;
    bool contradictory_ = false;
    std::unordered_map<std::uint64_t, Lit> gates_;

    std::optional<Lit> cached_gate(std::uint64_t key) const;
};

/// DIMACS text: "c <id> <label>" comments, "p cnf" header, one clause per
/// line terminated by 0.
std::string to_dimacs(const CnfFormula& formula);

/// Same body as `to_dimacs`, with `units` appended as one-literal clauses.
std::string to_dimacs(const CnfFormula& formula, std::span<const Lit> units);

/// Parses DIMACS CNF. Labels are restored from "c <id> <label>" comments.
CnfFormula parse_dimacs(std::string_view text);

} // namespace satnn
