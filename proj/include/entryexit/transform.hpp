#pragma once

#include "entryexit/model.hpp"

namespace entryexit {

/// Coefficients of the linear stopping payoffs that turn the delayed
/// problem into an instant one: the entry payoff becomes -(k1*p + k0) and
/// the exit payoff -(l1*p + l0). Always l1 = -k1, and delta = 0 reduces to
/// k1 = l1 = 0, k0 = K_I, l0 = K_O.
struct TransformCoeffs {
    double k1;
    double k0;
    double l1;
    double l0;
};

/// Closed-form delay-transformation coefficients:
///   k1 = (e^{(mu-r)delta} - 1) / (mu - r)
///   k0 = (C/r)(e^{-r delta} - 1) + e^{-r delta} K_I
///   l1 = -k1
///   l0 = -(C/r)(e^{-r delta} - 1) + e^{-r delta} K_O
/// Requires r > mu (PreconditionError).
TransformCoeffs transform_coeffs(const ProjectParams& params);

}  // namespace entryexit
