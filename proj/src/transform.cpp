#include "entryexit/transform.hpp"

#include <cmath>

#include "entryexit/errors.hpp"

namespace entryexit {

TransformCoeffs transform_coeffs(const ProjectParams& params) {
    if (!(params.r > params.mu))
        throw PreconditionError("transform_coeffs requires r > mu");
    const double r = params.r;
    const double mu = params.mu;
    const double d = params.delta;
    // expm1 keeps delta = 0 exact: k1 = 0, k0 = K_I, l0 = K_O.
    const double k1 = std::expm1((mu - r) * d) / (mu - r);
    const double em = std::expm1(-r * d);
    const double ed = std::exp(-r * d);
    const double k0 = params.C / r * em + ed * params.K_I;
    const double l0 = -params.C / r * em + ed * params.K_O;
    return {k1, k0, -k1, l0};
}

}  // namespace entryexit
