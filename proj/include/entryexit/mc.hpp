#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "entryexit/model.hpp"
#include "entryexit/rules.hpp"

namespace entryexit {

/// Monte Carlo budget. Paths use exact-distribution GBM steps on a uniform
/// grid of spacing dt; hitting times are detected on the grid (no bridge
/// correction). The delay is snapped to a whole number of steps.
struct McConfig {
    long n_paths = 10000;
    double dt = 1e-3;
    double t_max = 50.0;
    uint64_t seed = 1;
    bool antithetic = false;
    int n_threads = 0;  ///< 0: hardware concurrency
};

/// Estimate of the expected discounted payoff under a fixed rule pair.
/// With antithetic pairing, one pair counts as one sample in n_effective
/// and the standard error. Bit-exact for a fixed seed; invariant to the
/// worker count.
struct PolicyOutcome {
    double mean = 0.0;
    double std_error = 0.0;
    long n_effective = 0;
    double truncation_bound = 0.0;
    long n_overflow = 0;
};

/// Analytic cap on the discounted value ignored beyond t_max:
/// p0 e^{(mu-r) t_max}/(r-mu) + (|C|/r) e^{-r t_max}.
double truncation_bound(const ProjectParams& params, double t_max);

/// Smallest whole t_max with truncation_bound < 0.1% of |value_scale| + 1.
double choose_t_max(const ProjectParams& params, double value_scale);

/// Simulates one rule pair. Cash flows accrue on [tau_I+delta, tau_O+delta]
/// via a per-step trapezoid of e^{-rt}(P(t)-C); lump costs are discounted
/// at tau_I+delta and tau_O+delta.
PolicyOutcome simulate_policy(const ProjectParams& params, const EntryRule& entry,
                              const ExitRule& exit, const McConfig& cfg);

/// Simulates several rule pairs on common random paths (one pass, shared
/// noise). Returns per-rule per-path payoffs; `summarize` reduces a row to
/// a PolicyOutcome.
std::vector<std::vector<double>> simulate_policy_payoffs(
    const ProjectParams& params,
    const std::vector<std::pair<EntryRule, ExitRule>>& rules,
    const McConfig& cfg);

PolicyOutcome summarize(const std::vector<double>& payoffs,
                        const ProjectParams& params, const McConfig& cfg);

/// Couples the delayed payoff and the transformed instant payoff on common
/// paths (same decision times); their means agree within noise, and for
/// delta = 0 the per-path difference is exactly zero.
struct EquivalenceOutcome {
    double mean_delayed = 0.0;
    double mean_instant = 0.0;
    double residual_mean = 0.0;
    double residual_se = 0.0;
    double max_abs_path_residual = 0.0;
    long n_effective = 0;
};

EquivalenceOutcome delayed_payoff_equivalence_residual(const ProjectParams& params,
                                                       const EntryRule& entry,
                                                       const ExitRule& exit,
                                                       const McConfig& cfg);

/// Simulates the optimal rule against perturbed competitors on common
/// paths and checks mean(optimal) >= mean(competitor) - 3*SE(paired diff).
struct DominanceReport {
    struct Competitor {
        std::string label;
        PolicyOutcome outcome;
        double diff_mean = 0.0;  ///< optimal - competitor
        double diff_se = 0.0;
        bool pass = false;
    };
    PolicyOutcome optimal;
    std::vector<Competitor> competitors;
    bool all_pass = false;
};

DominanceReport policy_dominance_check(const ProjectParams& params,
                                       const McConfig& cfg);

/// Same check with the baseline rules given explicitly (e.g. deliberately
/// corrupted triggers); competitors perturb the given baseline.
DominanceReport policy_dominance_check(const ProjectParams& params,
                                       const EntryRule& base_entry,
                                       const ExitRule& base_exit,
                                       const McConfig& cfg);

/// Engine sanity: sample mean of e^{-mu t} P(t)/p0, which is 1 in
/// expectation at any horizon.
PolicyOutcome martingale_check(const ProjectParams& params, double t,
                               const McConfig& cfg);

}  // namespace entryexit
