#pragma once
// Small DPLL used only by tests: exact verdicts on formulas with a few
// hundred variables, no external process.

#include "satnn/cnf.hpp"

#include <optional>
#include <span>
#include <vector>

namespace satnn::testing {

/// A model of `f` under `assumptions`, or nullopt when none exists.
std::optional<Assignment> local_solve(const CnfFormula& f, std::span<const Lit> assumptions = {});

/// Every model of `f` projected onto `vars` (each projection once).
std::vector<std::vector<bool>> project_models(const CnfFormula& f, std::span<const int> vars);

/// Assumptions fixing `bv` to `value` (two's complement, MSB first).
std::vector<Lit> assume_value(const std::vector<Lit>& bits, std::int64_t value);

} // namespace satnn::testing
