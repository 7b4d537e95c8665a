#pragma once

#include <optional>
#include <string>

#include "entryexit/fd.hpp"
#include "entryexit/mc.hpp"
#include "entryexit/model.hpp"
#include "entryexit/policy.hpp"

namespace entryexit::cli {

/// Parses the flat JSON parameter config. All eight keys are required and
/// unknown keys are rejected: r, mu, sigma, delta, C, K_I, K_O, p0.
ProjectParams params_from_json_text(const std::string& text);

/// Formats a double with 9 significant digits (the CLI number contract).
std::string fmt9(double x);

/// Rounds through the 9-significant-digit representation so JSON output
/// carries the printed precision.
double round9(double x);

struct TableOptions {
    double p_min = 0.0;
    double p_max = 0.0;
    int n_steps = 100;
};

struct VerifyOptions {
    McConfig mc;
    int fd_nodes = 2000;
    std::optional<double> override_pI2;
};

std::string render_solve(const SolveResult& result, const std::string& format);
std::string render_table(const Solution& sol, const TableOptions& opts,
                         const std::string& format);
std::string render_simulate(const ProjectParams& params, const Solution& sol,
                            const McConfig& mc,
                            std::optional<double> override_pI2);

struct VerifyResult {
    std::string report;
    bool all_pass = false;
};

VerifyResult run_verification(const ProjectParams& params,
                              const VerifyOptions& opts);

/// Maps library errors onto the documented process exit codes:
/// 2 domain/config errors, 3 convergence errors.
int exit_code_for(const std::exception& e);

}  // namespace entryexit::cli
