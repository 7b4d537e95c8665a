#pragma once

#include "entryexit/model.hpp"
#include "entryexit/transform.hpp"

namespace entryexit {

/// Solution of the exit sub-problem
///   G(p) = sup_tau E[ int_0^tau e^{-rt}(P(t)-C) dt - e^{-r tau}(l1 P + l0) ].
/// A trigger exists iff C > r*K_O; below it stopping is optimal and G equals
/// the stopping payoff, above it G = A p^{lambda1} + p/(r-mu) - C/r. Without
/// a trigger the project is never abandoned and G(p) = p/(r-mu) - C/r.
struct ExitSolution {
    bool has_trigger = false;
    double p_O = 0.0;  ///< exit trigger price (valid iff has_trigger)
    double A = 0.0;    ///< coefficient of p^{lambda1} (valid iff has_trigger)

    // evaluation context
    double r = 0.0;
    double mu = 0.0;
    double C = 0.0;
    double lambda1 = 0.0;
    double l1 = 0.0;
    double l0 = 0.0;

    /// G(p). Throws DomainError for p <= 0.
    double value(double p) const;

    /// G'(p), taken from the continuation-side formula at the trigger
    /// (both sides agree there by smooth pasting).
    double derivative(double p) const;

    /// Stopping payoff -(l1 p + l0).
    double stop_payoff(double p) const { return -(l1 * p + l0); }
};

/// Solves the exit sub-problem in closed form. Requires r > mu.
ExitSolution solve_exit(const ProjectParams& params, const LambdaPair& lambdas);

}  // namespace entryexit
