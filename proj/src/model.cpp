#include "entryexit/model.hpp"

#include <cmath>
#include <string>

#include "entryexit/errors.hpp"

namespace entryexit {

ProjectParams validate(const ProjectParams& params) {
    const auto bad = [](const char* field, double value) {
        throw DomainError(std::string("invalid parameter ") + field + " = " +
                          std::to_string(value));
    };
    if (!(params.r > 0.0) || !std::isfinite(params.r)) bad("r", params.r);
    if (!std::isfinite(params.mu)) bad("mu", params.mu);
    if (!(params.sigma > 0.0) || !std::isfinite(params.sigma))
        bad("sigma", params.sigma);
    if (!(params.delta >= 0.0) || !std::isfinite(params.delta))
        bad("delta", params.delta);
    if (!std::isfinite(params.C)) bad("C", params.C);
    if (!std::isfinite(params.K_I)) bad("K_I", params.K_I);
    if (!std::isfinite(params.K_O)) bad("K_O", params.K_O);
    if (!(params.p0 > 0.0) || !std::isfinite(params.p0)) bad("p0", params.p0);
    return params;
}

LambdaPair lambda_roots(const ProjectParams& params) {
    if (!(params.r > params.mu))
        throw PreconditionError("lambda_roots requires r > mu");
    // sigma^2/2 * l^2 + (mu - sigma^2/2) * l - r = 0. The discriminant is
    // b^2 + 2 sigma^2 r > 0. Compute the larger-magnitude root first and
    // the other from the product of roots -2r/sigma^2 to avoid cancellation.
    const double a = 0.5 * params.sigma * params.sigma;
    const double b = params.mu - a;
    const double c = -params.r;
    const double disc = std::sqrt(b * b - 4.0 * a * c);
    const double q = -0.5 * (b + std::copysign(disc, b));
    double r1 = q / a;
    double r2 = c / q;
    if (r1 > r2) std::swap(r1, r2);
    return {r1, r2};
}

double characteristic_residual(const ProjectParams& params, double lambda) {
    const double t1 = params.r;
    const double t2 = -params.mu * lambda;
    const double t3 =
        -0.5 * params.sigma * params.sigma * lambda * (lambda - 1.0);
    const double scale =
        std::max({std::abs(t1), std::abs(t2), std::abs(t3), 1e-300});
    return std::abs(t1 + t2 + t3) / scale;
}

std::string_view regime_name(Regime regime) {
    switch (regime) {
        case Regime::InfiniteValue: return "InfiniteValue";
        case Regime::I_EnterNow_NeverExit: return "I_EnterNow_NeverExit";
        case Regime::II_SingleEntry_NeverExit: return "II_SingleEntry_NeverExit";
        case Regime::III_EnterNow_Exit: return "III_EnterNow_Exit";
        case Regime::IV_SingleEntry_Exit: return "IV_SingleEntry_Exit";
        case Regime::V_EnterNow_Exit_NegSum: return "V_EnterNow_Exit_NegSum";
        case Regime::VI_DoubleEntry_Exit: return "VI_DoubleEntry_Exit";
    }
    return "?";
}

Regime classify(const ProjectParams& params, std::optional<double> p_O) {
    if (params.r <= params.mu) return Regime::InfiniteValue;
    const bool exit_trigger = params.C - params.r * params.K_O > 0.0;
    const bool entry_cost_positive = params.C + params.r * params.K_I > 0.0;
    if (!exit_trigger)
        return entry_cost_positive ? Regime::II_SingleEntry_NeverExit
                                   : Regime::I_EnterNow_NeverExit;
    if (!entry_cost_positive) return Regime::III_EnterNow_Exit;
    if (params.K_I + params.K_O >= 0.0) return Regime::IV_SingleEntry_Exit;
    if (!p_O)
        throw MissingTriggerError(
            "classify: cases V/VI split on the exit trigger; supply p_O");
    const double gate =
        std::exp(-params.mu * params.delta) * (params.C + params.r * params.K_I);
    return *p_O >= gate ? Regime::V_EnterNow_Exit_NegSum
                        : Regime::VI_DoubleEntry_Exit;
}

}  // namespace entryexit
