#include "satnn/cnf.hpp"

#include "satnn/errors.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace satnn {

Lit CnfFormula::fresh_var(std::string label) {
    ++var_count_;
    if (!label.empty()) labels_.emplace(var_count_, std::move(label));
    return Lit::positive(var_count_);
}

void CnfFormula::add_clause(std::span<const Lit> lits) {
    Clause clause;
    clause.reserve(lits.size());
    for (Lit lit : lits) {
        if (lit.is_true()) return;
        if (lit.is_false()) continue;
        if (lit.var() > var_count_) throw RangeError("clause mentions unallocated variable " + std::to_string(lit.var()));
        if (std::find(clause.begin(), clause.end(), ~lit) != clause.end()) return;
        if (std::find(clause.begin(), clause.end(), lit) == clause.end()) clause.push_back(lit);
    }
    if (clause.empty()) {
        if (contradictory_) return;
        contradictory_ = true;
        Lit c = fresh_var("CONFLICT");
        clauses_.push_back({c});
        clauses_.push_back({~c});
        return;
    }
    clauses_.push_back(std::move(clause));
}

namespace {

enum class Gate : std::uint64_t { And = 1, Or = 2, Xor = 3 };

std::uint64_t lit_code(Lit l) { return (static_cast<std::uint64_t>(l.var()) << 1) | (l.is_negated() ? 1u : 0u); }

// Inputs are ordered so commuted calls share one entry.
std::uint64_t gate_key(Gate g, Lit a, Lit b) {
    std::uint64_t x = lit_code(a), y = lit_code(b);
    if (x > y) std::swap(x, y);
    return (static_cast<std::uint64_t>(g) << 62) | (x << 31) | y;
}

} // namespace

std::optional<Lit> CnfFormula::cached_gate(std::uint64_t key) const {
    if (auto it = gates_.find(key); it != gates_.end()) return it->second;
    return std::nullopt;
}

Lit CnfFormula::emit_and(Lit a, Lit b) {
    if (a.is_false() || b.is_false() || a == ~b) return kFalse;
    if (a.is_true()) return b;
    if (b.is_true() || a == b) return a;
    const auto key = gate_key(Gate::And, a, b);
    if (auto hit = cached_gate(key)) return *hit;
    Lit y = fresh_var();
    gates_.emplace(key, y);
    add_clause({~y, a});
    add_clause({~y, b});
    add_clause({y, ~a, ~b});
    return y;
}

Lit CnfFormula::emit_or(Lit a, Lit b) {
    if (a.is_true() || b.is_true() || a == ~b) return kTrue;
    if (a.is_false()) return b;
    if (b.is_false() || a == b) return a;
    const auto key = gate_key(Gate::Or, a, b);
    if (auto hit = cached_gate(key)) return *hit;
    Lit y = fresh_var();
    gates_.emplace(key, y);
    add_clause({y, ~a});
    add_clause({y, ~b});
    add_clause({~y, a, b});
    return y;
}

Lit CnfFormula::emit_xor(Lit a, Lit b) {
    if (a == b) return kFalse;
    if (a == ~b) return kTrue;
    if (a.is_constant()) return a.is_true() ? ~b : b;
    if (b.is_constant()) return b.is_true() ? ~a : a;
    // xor(~a, b) == ~xor(a, b): cache on positive inputs only.
    const bool flip = a.is_negated() != b.is_negated();
    const Lit pa = a.is_negated() ? ~a : a;
    const Lit pb = b.is_negated() ? ~b : b;
    const auto key = gate_key(Gate::Xor, pa, pb);
    if (auto hit = cached_gate(key)) return flip ? ~*hit : *hit;
    Lit y = fresh_var();
    gates_.emplace(key, flip ? ~y : y);
    add_clause({~y, a, b});
    add_clause({~y, ~a, ~b});
    add_clause({y, ~a, b});
    add_clause({y, a, ~b});
    return y;
}

void CnfFormula::assert_equal(Lit a, Lit b) {
    if (a == b) return;
    add_clause({~a, b});
    add_clause({a, ~b});
}

bool CnfFormula::satisfied_by(const Assignment& assignment) const {
    if (assignment.var_count() < var_count_) return false;
    return std::all_of(clauses_.begin(), clauses_.end(), [&](const Clause& c) {
        return std::any_of(c.begin(), c.end(), [&](Lit l) { return assignment.value(l); });
    });
}

void CnfFormula::conjoin(std::span<const Clause> extra) {
    for (const Clause& c : extra) add_clause(c);
}

namespace {

void write_body(std::ostringstream& out, const CnfFormula& formula, std::span<const Lit> units) {
    for (const auto& [id, label] : formula.labels()) out << "c " << id << ' ' << label << '\n';
    std::size_t extra = 0;
    for (Lit u : units)
        if (!u.is_true()) ++extra;
    out << "p cnf " << formula.var_count() << ' ' << formula.clauses().size() + extra << '\n';
    for (const Clause& clause : formula.clauses()) {
        for (Lit l : clause) out << l.dimacs() << ' ';
        out << "0\n";
    }
    for (Lit u : units) {
        if (u.is_true()) continue;
        if (u.is_false()) throw RangeError("cannot write constant FALSE as a DIMACS unit");
        out << u.dimacs() << " 0\n";
    }
}

bool parse_int(std::string_view token, int& value) {
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    return ec == std::errc{} && ptr == token.data() + token.size();
}

} // namespace

std::string to_dimacs(const CnfFormula& formula) { return to_dimacs(formula, {}); }

std::string to_dimacs(const CnfFormula& formula, std::span<const Lit> units) {
    std::ostringstream out;
    write_body(out, formula, units);
    return out.str();
}

CnfFormula parse_dimacs(std::string_view text) {
    CnfFormula formula;
    std::map<int, std::string> labels;
    std::vector<Clause> clauses;
    Clause current;
    int declared_vars = -1;
    long long declared_clauses = -1;
    std::size_t line_no = 0;

    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        if (line.front() == 'c') {
            std::istringstream in{std::string(line.substr(1))};
            std::string id_token;
            std::string label;
            int id = 0;
            if (in >> id_token >> label && parse_int(id_token, id) && id > 0) labels[id] = label;
            continue;
        }
        if (line.front() == 'p') {
            std::istringstream in{std::string(line)};
            std::string p, fmt;
            long long vars = -1, count = -1;
            if (!(in >> p >> fmt >> vars >> count) || fmt != "cnf" || vars < 0 || count < 0)
                throw FormatError("bad DIMACS header at line " + std::to_string(line_no));
            declared_vars = static_cast<int>(vars);
            declared_clauses = count;
            continue;
        }
        if (declared_vars < 0) throw FormatError("clause before DIMACS header at line " + std::to_string(line_no));
        std::istringstream in{std::string(line)};
        std::string token;
        while (in >> token) {
            int code = 0;
            if (!parse_int(token, code)) throw FormatError("bad literal '" + token + "' at line " + std::to_string(line_no));
            if (code == 0) {
                clauses.push_back(std::move(current));
                current.clear();
                continue;
            }
            if (std::abs(code) > declared_vars)
                throw FormatError("literal " + token + " exceeds declared variable count at line " + std::to_string(line_no));
            current.push_back(Lit::from_dimacs(code));
        }
    }
    if (!current.empty()) throw FormatError("unterminated clause at end of DIMACS input");
    if (declared_vars < 0) throw FormatError("missing DIMACS header");
    if (static_cast<long long>(clauses.size()) != declared_clauses)
        throw FormatError("DIMACS header declares " + std::to_string(declared_clauses) + " clauses, found " +
                          std::to_string(clauses.size()));

    for (int v = 1; v <= declared_vars; ++v) {
        auto it = labels.find(v);
        formula.fresh_var(it == labels.end() ? std::string{} : it->second);
    }
    for (const Clause& c : clauses) {
        if (c.empty()) throw FormatError("empty clause in DIMACS input");
        formula.add_clause(c);
    }
    return formula;
}

} // namespace satnn
