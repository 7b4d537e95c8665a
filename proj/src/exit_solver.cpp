#include "entryexit/exit_solver.hpp"

#include <cmath>
#include <string>

#include "entryexit/errors.hpp"

namespace entryexit {

double ExitSolution::value(double p) const {
    if (!(p > 0.0))
        throw DomainError("G is defined for p > 0, got p = " + std::to_string(p));
    if (!has_trigger) return p / (r - mu) - C / r;
    if (p <= p_O) return stop_payoff(p);
    return A * std::pow(p, lambda1) + p / (r - mu) - C / r;
}

double ExitSolution::derivative(double p) const {
    if (!(p > 0.0))
        throw DomainError("G' is defined for p > 0, got p = " + std::to_string(p));
    if (!has_trigger) return 1.0 / (r - mu);
    if (p < p_O) return -l1;
    return lambda1 * A * std::pow(p, lambda1 - 1.0) + 1.0 / (r - mu);
}

ExitSolution solve_exit(const ProjectParams& params, const LambdaPair& lambdas) {
    if (!(params.r > params.mu))
        throw PreconditionError("solve_exit requires r > mu");
    const TransformCoeffs tc = transform_coeffs(params);
    ExitSolution sol;
    sol.r = params.r;
    sol.mu = params.mu;
    sol.C = params.C;
    sol.lambda1 = lambdas.lambda1;
    sol.l1 = tc.l1;
    sol.l0 = tc.l0;
    if (params.C <= params.r * params.K_O) return sol;  // never exit

    const double l1 = lambdas.lambda1;
    sol.has_trigger = true;
    sol.p_O = std::exp(-params.mu * params.delta) * (l1 / (l1 - 1.0)) *
              (params.r - params.mu) * (params.C / params.r - params.K_O);
    sol.A = std::exp((params.mu - params.r) * params.delta) *
            std::pow(sol.p_O, 1.0 - l1) / (l1 * (params.mu - params.r));
    return sol;
}

}  // namespace entryexit
