#pragma once

#include <optional>
#include <string>
#include <variant>

#include "entryexit/entry_solver.hpp"
#include "entryexit/exit_solver.hpp"
#include "entryexit/model.hpp"
#include "entryexit/rules.hpp"
#include "entryexit/transform.hpp"

namespace entryexit {

/// Full finite-value answer: both sub-problem solutions, the executable
/// stopping rules, and the value J(p) = H(p).
struct Solution {
    ProjectParams params;
    Regime regime;
    LambdaPair lambdas;
    TransformCoeffs coeffs;
    ExitSolution exit;
    EntrySolution entry;
    EntryRule entry_rule;
    ExitRule exit_rule;

    double value(double p) const { return entry.value(p); }
};

/// r <= mu: the value is infinite, the firm enters immediately and never
/// exits. A distinct variant, never a sentinel number.
struct InfiniteValue {
    EntryRule entry_rule = EntryRule::immediately();
    ExitRule exit_rule = ExitRule::never();
};

using SolveResult = std::variant<InfiniteValue, Solution>;

/// Full pipeline: validate, characteristic roots, transform, exit solve,
/// classify, entry solve, rule assembly. Propagates ConvergenceError from
/// the double-trigger solver.
SolveResult solve(const ProjectParams& params);

/// Machine-readable summary of a solve: regime, triggers, coefficients and
/// the value at p0. Absent fields are regimes that do not define them.
struct DecisionReport {
    std::string regime;
    std::optional<double> p_O;
    std::optional<double> p_I;
    std::optional<double> p_I1;
    std::optional<double> p_I2;
    std::optional<double> A;
    std::optional<double> B;
    std::optional<double> B1;
    std::optional<double> B2;
    std::optional<double> lambda1;
    std::optional<double> lambda2;
    std::optional<double> k1;
    std::optional<double> k0;
    std::optional<double> l1;
    std::optional<double> l0;
    std::optional<double> J_at_p0;

    bool operator==(const DecisionReport&) const = default;
};

DecisionReport describe(const Solution& sol);
DecisionReport describe(const SolveResult& result);

/// Lossless JSON round-trip of the report (field names are part of the
/// external interface).
std::string report_to_json(const DecisionReport& report);
DecisionReport report_from_json(const std::string& text);

}  // namespace entryexit
