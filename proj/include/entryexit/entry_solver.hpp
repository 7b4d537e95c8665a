#pragma once

#include <optional>

#include "entryexit/exit_solver.hpp"
#include "entryexit/model.hpp"
#include "entryexit/transform.hpp"

namespace entryexit {

/// Solution of the entry sub-problem
///   H(p) = sup_tau E[ e^{-r tau}(G(P(tau)) - k1 P(tau) - k0) ].
/// Depending on the regime the exercise region is everything (enter now),
/// an upper ray [p_I, inf), or the two-sided set (0, p_I1] u [p_I2, inf).
struct EntrySolution {
    Regime regime = Regime::I_EnterNow_NeverExit;

    std::optional<double> p_I;   ///< single entry trigger (cases II, IV)
    std::optional<double> p_I1;  ///< lower entry trigger (case VI)
    std::optional<double> p_I2;  ///< upper entry trigger (case VI)
    std::optional<double> B;     ///< p^{lambda2} coefficient (cases II, IV)
    std::optional<double> B1;    ///< p^{lambda1} coefficient (case VI)
    std::optional<double> B2;    ///< p^{lambda2} coefficient (case VI)

    // evaluation context
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double A = 0.0;        ///< exit-solution coefficient (0 without trigger)
    double q = 0.0;        ///< e^{(mu-r)delta} / (r-mu)
    double w = 0.0;        ///< e^{-r delta} (C/r + K_I)
    double pay_low = 0.0;  ///< -e^{-r delta}(K_I + K_O), payoff below p_O
    bool exit_has_trigger = false;
    double p_O = 0.0;

    /// H(p). Throws DomainError for p <= 0.
    double value(double p) const;

    /// H'(p); at a trigger the continuation-side formula (sides agree by
    /// smooth pasting).
    double derivative(double p) const;
};

/// Scalar residual picking the single-trigger location in case IV:
///   E(p) = A(lambda2-lambda1) p^{lambda1}
///        + e^{(mu-r)delta}/(r-mu) (lambda2-1) p
///        - lambda2 e^{-r delta}(C/r + K_I).
/// E(p_O) = -lambda2 e^{-r delta}(K_I+K_O), E'(p_O) < 0, and E -> +inf at
/// both ends, so E has exactly two roots and the entry trigger is the
/// larger one. Throws DomainError for p <= 0.
double entry_residual(const ProjectParams& params, const LambdaPair& lambdas,
                      double A, double p);

/// The double-trigger pair of case VI together with its band coefficients.
struct DoubleTrigger {
    double p_I1;
    double p_I2;
    double B1;
    double B2;
};

/// Solves the four value-matching / smooth-pasting equations of the
/// double-trigger case: damped Newton in log coordinates with analytic
/// Jacobian, nested-bisection fallback. Requires the regime-VI sign
/// conditions; throws ConvergenceError with diagnostics on failure.
DoubleTrigger solve_double_trigger(const ProjectParams& params,
                                   const LambdaPair& lambdas, double A,
                                   double p_O);

/// Cross-checks Newton against the nested-bisection route and throws
/// ConvergenceError if they disagree beyond 1e-6 relative (used by the
/// verification workflow; solve_double_trigger itself falls back only on
/// failure).
DoubleTrigger solve_double_trigger_checked(const ProjectParams& params,
                                           const LambdaPair& lambdas, double A,
                                           double p_O);

/// Dispatches on the regime and solves the entry sub-problem. Requires
/// r > mu and an exit solution consistent with params.
EntrySolution solve_entry(const ProjectParams& params, const LambdaPair& lambdas,
                          const ExitSolution& exit_sol,
                          const TransformCoeffs& coeffs);

}  // namespace entryexit
