#pragma once

#include <optional>
#include <string_view>

namespace entryexit {

/// Model constants of the investment problem. The output price follows a
/// geometric Brownian motion dP = mu*P dt + sigma*P dB starting from p0;
/// entering costs K_I, running the project earns P - C per unit time,
/// exiting costs K_O, and every decision takes effect after a fixed lag
/// delta. Costs are unrestricted in sign.
struct ProjectParams {
    double r;      ///< discount rate, > 0
    double mu;     ///< price drift
    double sigma;  ///< price volatility, > 0
    double delta;  ///< implementation delay, >= 0
    double C;      ///< running cost per unit time
    double K_I;    ///< entry cost
    double K_O;    ///< exit cost
    double p0;     ///< initial price, > 0
};

/// Returns `params` unchanged if all field constraints hold, otherwise
/// throws DomainError naming the first violated constraint.
ProjectParams validate(const ProjectParams& params);

/// Roots of r - mu*lambda - sigma^2/2 * lambda*(lambda-1) = 0. When r > mu
/// they straddle the unit interval: lambda1 < 0 and lambda2 > 1.
struct LambdaPair {
    double lambda1;
    double lambda2;
};

/// Closed-form characteristic roots. Requires r > mu (PreconditionError).
LambdaPair lambda_roots(const ProjectParams& params);

/// Residual of the characteristic quadratic at `lambda`, relative to the
/// magnitude of its largest term. Both roots satisfy <= 1e-12.
double characteristic_residual(const ProjectParams& params, double lambda);

/// The seven qualitative shapes the solution can take. InfiniteValue covers
/// r <= mu; cases I-VI follow the sign pattern of C - r*K_O, C + r*K_I,
/// K_I + K_O and the position of the exit trigger.
enum class Regime {
    InfiniteValue,
    I_EnterNow_NeverExit,
    II_SingleEntry_NeverExit,
    III_EnterNow_Exit,
    IV_SingleEntry_Exit,
    V_EnterNow_Exit_NegSum,
    VI_DoubleEntry_Exit,
};

std::string_view regime_name(Regime regime);

/// Maps params to their unique regime. Cases V and VI split on the exit
/// trigger, so p_O must be supplied whenever C - r*K_O > 0, C + r*K_I > 0
/// and K_I + K_O < 0; otherwise MissingTriggerError is thrown. Boundary
/// equalities resolve exactly as written: <= picks the no-trigger side,
/// K_I + K_O = 0 belongs to case IV.
Regime classify(const ProjectParams& params,
                std::optional<double> p_O = std::nullopt);

}  // namespace entryexit
