#pragma once

#include <vector>

#include "entryexit/exit_solver.hpp"
#include "entryexit/model.hpp"

namespace entryexit {

/// Projected-SOR grid configuration. The obstacle problem
///   min{ rV - LV - f, V - g } = 0,  L = mu p d/dp + sigma^2/2 p^2 d^2/dp^2
/// is discretized with central differences on a uniform log-price grid.
struct FdConfig {
    int n_nodes = 1000;
    double p_min = 0.1;
    double p_max = 100.0;
    double psor_omega = 0.0;  ///< relaxation in (0,2); 0 picks the tuned value
    double tol = 1e-8;        ///< complementarity residual tolerance
    long max_sweeps = 0;      ///< 0: scaled with the grid
};

enum class FdStage {
    ExitValue,   ///< obstacle -(l1 p + l0), source p - C; solves G
    EntryValue,  ///< obstacle G(p) - k1 p - k0, source 0; solves H
};

struct FdResult {
    std::vector<double> prices;
    std::vector<double> values;
    std::vector<double> obstacle;
    long sweeps = 0;
    double residual = 0.0;
};

/// Solves one stage of the variational inequality numerically, as an
/// oracle independent of the closed-form trigger algebra. The entry stage
/// consumes the exit solution for its obstacle, so `exit_sol` is required
/// there and ignored for the exit stage. Boundaries: exercise-region ends
/// carry exact Dirichlet values from the obstacle; continuation-region
/// ends carry shape closures (linear in p at the top of the exit stage,
/// the p^lambda2 power at the bottom of a single-trigger entry stage).
FdResult fd_value_function(const ProjectParams& params, FdStage stage,
                           const ExitSolution* exit_sol, const FdConfig& cfg);

}  // namespace entryexit
