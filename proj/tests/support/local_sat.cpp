#include "local_sat.hpp"

#include <cstdint>

namespace satnn::testing {

namespace {

// 0 unassigned, 1 true, -1 false
class Dpll {
public:
    Dpll(const CnfFormula& f) : f_(f), value_(static_cast<std::size_t>(f.var_count()) + 1, 0) {
        occurs_.resize(value_.size());
        for (std::size_t c = 0; c < f.clauses().size(); ++c)
            for (Lit l : f.clauses()[c]) occurs_[static_cast<std::size_t>(l.var())].push_back(c);
    }

    bool assume(Lit l) { return assign(l) && propagate(); }

    bool search() {
        int var = pick();
        if (var == 0) return true;
        for (bool polarity : {false, true}) {
            const std::size_t mark = trail_.size();
            if (assign(polarity ? Lit::positive(var) : Lit::negative(var)) && propagate() && search()) return true;
            undo(mark);
        }
        return false;
    }

    Assignment model() const {
        Assignment a(f_.var_count());
        for (int v = 1; v <= f_.var_count(); ++v) a.set(v, value_[static_cast<std::size_t>(v)] > 0);
        return a;
    }

    bool satisfies_all() const {
        for (const Clause& c : f_.clauses()) {
            bool sat = false;
            for (Lit l : c) sat = sat || lit_value(l) > 0;
            if (!sat) return false;
        }
        return true;
    }

private:
    int lit_value(Lit l) const {
        const int v = value_[static_cast<std::size_t>(l.var())];
        return l.is_negated() ? -v : v;
    }

    bool assign(Lit l) {
        if (l.is_constant()) return l.is_true();
        const int cur = lit_value(l);
        if (cur != 0) return cur > 0;
        value_[static_cast<std::size_t>(l.var())] = l.is_negated() ? -1 : 1;
        trail_.push_back(l.var());
        pending_.push_back(l.var());
        return true;
    }

    void undo(std::size_t mark) {
        while (trail_.size() > mark) {
            value_[static_cast<std::size_t>(trail_.back())] = 0;
            trail_.pop_back();
        }
        pending_.clear();
    }

    bool propagate() {
        while (!pending_.empty()) {
            const int var = pending_.back();
            pending_.pop_back();
            for (std::size_t ci : occurs_[static_cast<std::size_t>(var)]) {
                const Clause& c = f_.clauses()[ci];
                Lit unit;
                int open = 0;
                bool sat = false;
                for (Lit l : c) {
                    const int v = lit_value(l);
                    if (v > 0) {
                        sat = true;
                        break;
                    }
                    if (v == 0) {
                        ++open;
                        unit = l;
                    }
                }
                if (sat) continue;
                if (open == 0) {
                    pending_.clear();
                    return false;
                }
                if (open == 1 && !assign(unit)) {
                    pending_.clear();
                    return false;
                }
            }
        }
        return true;
    }

    int pick() const {
        for (const Clause& c : f_.clauses()) {
            bool sat = false;
            int open = 0;
            for (Lit l : c) {
                const int v = lit_value(l);
                if (v > 0) sat = true;
                if (v == 0 && open == 0) open = l.var();
            }
            if (!sat && open != 0) return open;
        }
        return 0;
    }

    const CnfFormula& f_;
    std::vector<int> value_;
    std::vector<std::vector<std::size_t>> occurs_;
    std::vector<int> trail_;
    std::vector<int> pending_;
};

bool initial_units(Dpll& d, const CnfFormula& f) {
    for (const Clause& c : f.clauses())
        if (c.size() == 1 && !d.assume(c.front())) return false;
    return true;
}

} // namespace

std::optional<Assignment> local_solve(const CnfFormula& f, std::span<const Lit> assumptions) {
    Dpll d(f);
    if (!initial_units(d, f)) return std::nullopt;
    for (Lit l : assumptions)
        if (!d.assume(l)) return std::nullopt;
    if (!d.search()) return std::nullopt;
    if (!d.satisfies_all()) return std::nullopt;
    return d.model();
}

std::vector<std::vector<bool>> project_models(const CnfFormula& f, std::span<const int> vars) {
    std::vector<std::vector<bool>> out;
    const std::uint64_t total = std::uint64_t{1} << vars.size();
    for (std::uint64_t code = 0; code < total; ++code) {
        std::vector<Lit> as;
        std::vector<bool> proj;
        for (std::size_t i = 0; i < vars.size(); ++i) {
            const bool bit = (code >> (vars.size() - 1 - i)) & 1;
            proj.push_back(bit);
            as.push_back(bit ? Lit::positive(vars[i]) : Lit::negative(vars[i]));
        }
        if (local_solve(f, as)) out.push_back(proj);
    }
    return out;
}

std::vector<Lit> assume_value(const std::vector<Lit>& bits, std::int64_t value) {
    std::vector<Lit> out;
    const int w = static_cast<int>(bits.size());
    for (int i = 0; i < w; ++i) {
        const bool bit = (static_cast<std::uint64_t>(value) >> (w - 1 - i)) & 1;
        out.push_back(bit ? bits[static_cast<std::size_t>(i)] : ~bits[static_cast<std::size_t>(i)]);
    }
    return out;
}

} // namespace satnn::testing
