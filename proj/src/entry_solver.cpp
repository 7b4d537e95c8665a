#include "entryexit/entry_solver.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "entryexit/errors.hpp"

namespace entryexit {

namespace {

// Shared constants of the double-trigger system. The band coefficients
// follow from the left boundary p1 in closed form:
//   B1(p1) = -lambda2 p1^{-lambda1} c / (lambda2 - lambda1)
//   B2(p1) =  lambda1 p1^{-lambda2} c / (lambda2 - lambda1)
// with c = e^{-r delta}(K_I + K_O) < 0, and the two residuals are the
// value and scaled-derivative mismatches against the upper payoff
// A p^{lambda1} + q p - w at p2.
struct BandSystem {
    double l1, l2, A, q, w, c;

    void coeffs(double p1, double& B1, double& B2) const {
        B1 = -l2 * std::pow(p1, -l1) * c / (l2 - l1);
        B2 = l1 * std::pow(p1, -l2) * c / (l2 - l1);
    }

    // F1: value matching at p2; F2: p2 H'(p2) matching. Also reports the
    // band terms t1 = B1 p2^l1, t2 = B2 p2^l2 used by the Jacobian.
    void residuals(double p1, double p2, double& F1, double& F2, double& t1,
                   double& t2) const {
        double B1, B2;
        coeffs(p1, B1, B2);
        t1 = B1 * std::pow(p2, l1);
        t2 = B2 * std::pow(p2, l2);
        const double Ap = A * std::pow(p2, l1);
        F1 = t1 + t2 - (Ap + q * p2 - w);
        F2 = l1 * t1 + l2 * t2 - (l1 * Ap + q * p2);
    }

    double scale() const { return std::max({1.0, std::abs(w), std::abs(c)}); }
};

std::string diag(const char* what, double p1, double p2, double F1, double F2) {
    std::ostringstream os;
    os << what << ": last iterate p_I1=" << p1 << " p_I2=" << p2
       << " residuals F1=" << F1 << " F2=" << F2;
    return os.str();
}

// Damped Newton on (ln p1, ln p2). Returns false if it leaves the feasible
// box or stalls.
bool newton_band(const BandSystem& sys, double p_O, double lb2, double& p1,
                 double& p2) {
    const double s = sys.scale();
    double u = std::log(p1), v = std::log(p2);
    const double u_max = std::log(p_O);
    const double v_min = std::log(lb2);
    for (int it = 0; it < 200; ++it) {
        double F1, F2, t1, t2;
        sys.residuals(std::exp(u), std::exp(v), F1, F2, t1, t2);
        if (!std::isfinite(F1) || !std::isfinite(F2)) return false;
        const double Ap = sys.A * std::pow(std::exp(v), sys.l1);
        const double qp = sys.q * std::exp(v);
        // d/d(ln p1), d/d(ln p2) of both residuals
        const double J11 = -(sys.l1 * t1 + sys.l2 * t2);
        const double J12 = sys.l1 * t1 + sys.l2 * t2 - (sys.l1 * Ap + qp);
        const double J21 = -(sys.l1 * sys.l1 * t1 + sys.l2 * sys.l2 * t2);
        const double J22 = sys.l1 * sys.l1 * t1 + sys.l2 * sys.l2 * t2 -
                           (sys.l1 * sys.l1 * Ap + qp);
        const double det = J11 * J22 - J12 * J21;
        if (!(std::abs(det) > 1e-300)) return false;
        double du = -(F1 * J22 - F2 * J12) / det;
        double dv = -(J11 * F2 - J21 * F1) / det;

        // Backtrack while the step leaves the box or grows the residual.
        const double norm0 = std::abs(F1) + std::abs(F2);
        double step = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            const double un = u + step * du, vn = v + step * dv;
            if (un <= u_max + 1e-12 && vn >= v_min - 1e-12 && un > -700.0 &&
                vn < 700.0) {
                double G1, G2, s1, s2;
                sys.residuals(std::exp(un), std::exp(vn), G1, G2, s1, s2);
                if (std::isfinite(G1) && std::isfinite(G2) &&
                    std::abs(G1) + std::abs(G2) <= norm0 * (1.0 - 0.25 * step) +
                                                       1e-14 * s) {
                    u = un;
                    v = vn;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!accepted) return false;
        double F1n, F2n, t1n, t2n;
        sys.residuals(std::exp(u), std::exp(v), F1n, F2n, t1n, t2n);
        if (std::abs(F1n) <= 1e-12 * s && std::abs(F2n) <= 1e-12 * s &&
            std::abs(step * du) <= 1e-13 * (1.0 + std::abs(u)) &&
            std::abs(step * dv) <= 1e-13 * (1.0 + std::abs(v))) {
            p1 = std::exp(u);
            p2 = std::exp(v);
            return true;
        }
    }
    // Accept a fully converged residual even if the step never got tiny.
    double F1, F2, t1, t2;
    sys.residuals(std::exp(u), std::exp(v), F1, F2, t1, t2);
    if (std::abs(F1) <= 1e-11 * s && std::abs(F2) <= 1e-11 * s) {
        p1 = std::exp(u);
        p2 = std::exp(v);
        return true;
    }
    return false;
}

// In the continuation band H >= stopping payoff, so the upper boundary is
// a tangency of the gap D(p2) = H_band(p2) - payoff(p2). The fallback
// exploits that structure: for fixed p1, m(p1) := min_{p2 >= gate} D is
// monotone decreasing in p1 (+inf at 0+, <= 0 at p_O), so the outer
// problem m(p1) = 0 bisects cleanly; the inner minimizer is the upper
// trigger. A Newton polish finishes to machine precision.
struct BandGap {
    const BandSystem& sys;
    double B1 = 0, B2 = 0;

    explicit BandGap(const BandSystem& s, double p1) : sys(s) {
        sys.coeffs(p1, B1, B2);
    }
    double value(double p2) const {
        return (B1 - sys.A) * std::pow(p2, sys.l1) + B2 * std::pow(p2, sys.l2) -
               sys.q * p2 + sys.w;
    }
    double slope(double p2) const {
        return sys.l1 * (B1 - sys.A) * std::pow(p2, sys.l1 - 1.0) +
               sys.l2 * B2 * std::pow(p2, sys.l2 - 1.0) - sys.q;
    }
};

// Minimizes the gap over p2 in [lb2, inf): log-grid scan, then golden
// section on the bracketing cells. Returns the minimum; argmin via out.
double band_gap_min(const BandSystem& sys, double p1, double lb2,
                    double& argmin) {
    const BandGap gap(sys, p1);
    double hi = lb2 * 1e8;
    if (gap.B2 > 0.0 && std::isfinite(gap.B2)) {
        const double balance =
            std::pow(sys.q / (sys.l2 * gap.B2), 1.0 / (sys.l2 - 1.0));
        if (std::isfinite(balance)) hi = std::max(hi, 10.0 * balance);
    }
    const int n = 1600;
    const double la = std::log(lb2), lb = std::log(hi);
    int best = 0;
    double best_v = gap.value(lb2);
    for (int k = 1; k <= n; ++k) {
        const double v = gap.value(std::exp(la + (lb - la) * k / n));
        if (v < best_v) {
            best_v = v;
            best = k;
        }
    }
    if (best == 0 && gap.slope(lb2) >= 0.0) {
        argmin = lb2;
        return best_v;
    }
    // golden section on the neighboring cells
    double a = la + (lb - la) * std::max(0, best - 1) / n;
    double b = la + (lb - la) * std::min(n, best + 1) / n;
    const double gr = 0.6180339887498949;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = gap.value(std::exp(x1)), f2 = gap.value(std::exp(x2));
    for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = gap.value(std::exp(x1));
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = gap.value(std::exp(x2));
        }
    }
    argmin = std::exp(0.5 * (a + b));
    return gap.value(argmin);
}

bool nested_band(const BandSystem& sys, double p_O, double lb2, double& p1_out,
                 double& p2_out, std::string& why) {
    const double s = sys.scale();
    const auto outer = [&](double p1, double& argmin) {
        const double m = band_gap_min(sys, p1, lb2, argmin);
        return std::isfinite(m) ? m : 1e300;  // overflow means far positive
    };

    double arg_hi = 0.0;
    const double m_at_pO = outer(p_O, arg_hi);
    if (m_at_pO > 0.0) {
        std::ostringstream os;
        os << "band gap at p_O is positive (" << m_at_pO
           << "); no tangency below the exit trigger";
        why = os.str();
        return false;
    }
    // walk down until the gap turns positive
    double lo = p_O, hi_p1 = p_O;
    double unused = 0.0;
    bool bracketed = false;
    for (int k = 1; k <= 900; ++k) {
        lo = p_O * std::ldexp(1.0, -k);
        if (outer(lo, unused) > 0.0) {
            bracketed = true;
            break;
        }
        hi_p1 = lo;
    }
    if (!bracketed) {
        why = "band gap never turned positive while shrinking p_I1";
        return false;
    }
    // log-space bisection: gap(lo) > 0 >= gap(hi_p1)
    double ul = std::log(lo), uh = std::log(hi_p1);
    for (int it = 0; it < 300 && uh - ul > 1e-15; ++it) {
        const double um = 0.5 * (ul + uh);
        if (outer(std::exp(um), unused) > 0.0)
            ul = um;
        else
            uh = um;
    }
    double p1 = std::exp(uh);
    double p2 = 0.0;
    outer(p1, p2);

    // Newton polish from the near-solution start
    double q1 = p1, q2 = p2;
    if (newton_band(sys, p_O, lb2, q1, q2)) {
        p1_out = q1;
        p2_out = q2;
        return true;
    }
    double F1, F2, t1, t2;
    sys.residuals(p1, p2, F1, F2, t1, t2);
    if (std::abs(F1) > 1e-8 * s || std::abs(F2) > 1e-8 * s) {
        why = diag("tangency solve residuals too large", p1, p2, F1, F2);
        return false;
    }
    p1_out = p1;
    p2_out = p2;
    return true;
}

BandSystem make_band_system(const ProjectParams& params,
                            const LambdaPair& lambdas, double A) {
    const double erd = std::exp(-params.r * params.delta);
    return BandSystem{
        lambdas.lambda1,
        lambdas.lambda2,
        A,
        std::exp((params.mu - params.r) * params.delta) / (params.r - params.mu),
        erd * (params.C / params.r + params.K_I),
        erd * (params.K_I + params.K_O),
    };
}

DoubleTrigger finish_band(const BandSystem& sys, double p1, double p2) {
    double B1, B2;
    sys.coeffs(p1, B1, B2);
    return {p1, p2, B1, B2};
}

// Largest root of E(p) = 0 for case IV, bracketed on [p_O, inf) by doubling.
double largest_entry_root(const ProjectParams& params, const LambdaPair& lambdas,
                          double A, double p_O) {
    const auto E = [&](double p) { return entry_residual(params, lambdas, A, p); };
    // E(p_O) <= 0 (it equals -lambda2 e^{-r delta}(K_I+K_O)); when it is
    // exactly 0 (K_I + K_O = 0) the largest root lies strictly to the
    // right, where E dips negative first (E'(p_O) < 0).
    double a = p_O;
    double fa = E(a);
    if (fa >= 0.0) {
        for (int k = 0; k < 200 && fa >= 0.0; ++k) {
            a *= 1.0 + 1e-6 * std::pow(2.0, k);
            fa = E(a);
        }
        if (fa >= 0.0)
            throw ConvergenceError(
                "case IV root: no negative region found right of p_O");
    }
    double b = a;
    double fb = fa;
    for (int k = 0; k < 600 && fb <= 0.0; ++k) {
        b *= 2.0;
        fb = E(b);
    }
    if (fb <= 0.0)
        throw ConvergenceError("case IV root: E stayed negative while doubling");
    // Bisection: unconditionally convergent on the guaranteed bracket.
    for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (a + b);
        if (b - a <= 1e-12 * std::max(1.0, std::abs(m))) break;
        const double fm = E(m);
        if (fm == 0.0) return m;
        if (fm < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

double entry_residual(const ProjectParams& params, const LambdaPair& lambdas,
                      double A, double p) {
    if (!(p > 0.0))
        throw DomainError("entry_residual is defined for p > 0");
    const double l1 = lambdas.lambda1;
    const double l2 = lambdas.lambda2;
    const double q =
        std::exp((params.mu - params.r) * params.delta) / (params.r - params.mu);
    const double w = std::exp(-params.r * params.delta) *
                     (params.C / params.r + params.K_I);
    return A * (l2 - l1) * std::pow(p, l1) + q * (l2 - 1.0) * p - l2 * w;
}

DoubleTrigger solve_double_trigger(const ProjectParams& params,
                                   const LambdaPair& lambdas, double A,
                                   double p_O) {
    const BandSystem sys = make_band_system(params, lambdas, A);
    const double lb2 = std::exp(-params.mu * params.delta) *
                       (params.C + params.r * params.K_I);
    double p1 = 0.5 * p_O;
    double p2 = std::max(2.0 * lb2, 1.5 * p_O);
    if (newton_band(sys, p_O, lb2, p1, p2)) return finish_band(sys, p1, p2);

    std::string why;
    double q1 = 0, q2 = 0;
    if (nested_band(sys, p_O, lb2, q1, q2, why)) return finish_band(sys, q1, q2);
    throw ConvergenceError("double-trigger solve failed: " + why);
}

DoubleTrigger solve_double_trigger_checked(const ProjectParams& params,
                                           const LambdaPair& lambdas, double A,
                                           double p_O) {
    const BandSystem sys = make_band_system(params, lambdas, A);
    const double lb2 = std::exp(-params.mu * params.delta) *
                       (params.C + params.r * params.K_I);
    double p1 = 0.5 * p_O;
    double p2 = std::max(2.0 * lb2, 1.5 * p_O);
    const bool newton_ok = newton_band(sys, p_O, lb2, p1, p2);
    std::string why;
    double q1 = 0, q2 = 0;
    const bool nested_ok = nested_band(sys, p_O, lb2, q1, q2, why);
    if (!newton_ok && !nested_ok)
        throw ConvergenceError("double-trigger solve failed: " + why);
    if (newton_ok && nested_ok) {
        const double d1 = std::abs(p1 - q1) / std::max(1.0, std::abs(p1));
        const double d2 = std::abs(p2 - q2) / std::max(1.0, std::abs(p2));
        if (d1 > 1e-6 || d2 > 1e-6) {
            std::ostringstream os;
            os << "double-trigger strategies disagree: newton (" << p1 << ", "
               << p2 << ") vs nested (" << q1 << ", " << q2 << ")";
            throw ConvergenceError(os.str());
        }
    }
    return finish_band(sys, newton_ok ? p1 : q1, newton_ok ? p2 : q2);
}

EntrySolution solve_entry(const ProjectParams& params, const LambdaPair& lambdas,
                          const ExitSolution& exit_sol,
                          const TransformCoeffs& coeffs) {
    if (!(params.r > params.mu))
        throw PreconditionError("solve_entry requires r > mu");
    const double l1 = lambdas.lambda1;
    const double l2 = lambdas.lambda2;
    const double erd = std::exp(-params.r * params.delta);

    EntrySolution sol;
    sol.regime = classify(params, exit_sol.has_trigger
                                      ? std::optional<double>(exit_sol.p_O)
                                      : std::nullopt);
    sol.lambda1 = l1;
    sol.lambda2 = l2;
    sol.A = exit_sol.has_trigger ? exit_sol.A : 0.0;
    sol.q = std::exp((params.mu - params.r) * params.delta) /
            (params.r - params.mu);
    sol.w = erd * (params.C / params.r + params.K_I);
    sol.pay_low = -erd * (params.K_I + params.K_O);
    sol.exit_has_trigger = exit_sol.has_trigger;
    sol.p_O = exit_sol.p_O;
    (void)coeffs;

    switch (sol.regime) {
        case Regime::InfiniteValue:
            throw PreconditionError("solve_entry requires a finite-value regime");
        case Regime::I_EnterNow_NeverExit:
        case Regime::III_EnterNow_Exit:
        case Regime::V_EnterNow_Exit_NegSum:
            break;  // enter immediately, no trigger
        case Regime::II_SingleEntry_NeverExit: {
            const double pI = std::exp(-params.mu * params.delta) *
                              (l2 / (l2 - 1.0)) * (params.r - params.mu) *
                              (params.C / params.r + params.K_I);
            sol.p_I = pI;
            sol.B = std::exp((params.mu - params.r) * params.delta) *
                    std::pow(pI, 1.0 - l2) / (l2 * (params.r - params.mu));
            break;
        }
        case Regime::IV_SingleEntry_Exit: {
            const double pI =
                largest_entry_root(params, lambdas, exit_sol.A, exit_sol.p_O);
            sol.p_I = pI;
            sol.B = (l1 * exit_sol.A * std::pow(pI, l1) + sol.q * pI) /
                    (l2 * std::pow(pI, l2));
            break;
        }
        case Regime::VI_DoubleEntry_Exit: {
            const DoubleTrigger dt =
                solve_double_trigger(params, lambdas, exit_sol.A, exit_sol.p_O);
            sol.p_I1 = dt.p_I1;
            sol.p_I2 = dt.p_I2;
            sol.B1 = dt.B1;
            sol.B2 = dt.B2;
            break;
        }
    }
    return sol;
}

double EntrySolution::value(double p) const {
    if (!(p > 0.0))
        throw DomainError("H is defined for p > 0, got p = " + std::to_string(p));
    switch (regime) {
        case Regime::I_EnterNow_NeverExit:
            return q * p - w;
        case Regime::II_SingleEntry_NeverExit:
            if (p < *p_I) return *B * std::pow(p, lambda2);
            return q * p - w;
        case Regime::III_EnterNow_Exit:
        case Regime::V_EnterNow_Exit_NegSum:
            if (p <= p_O) return pay_low;
            return A * std::pow(p, lambda1) + q * p - w;
        case Regime::IV_SingleEntry_Exit:
            if (p < *p_I) return *B * std::pow(p, lambda2);
            return A * std::pow(p, lambda1) + q * p - w;
        case Regime::VI_DoubleEntry_Exit:
            if (p <= *p_I1) return pay_low;
            if (p >= *p_I2) return A * std::pow(p, lambda1) + q * p - w;
            return *B1 * std::pow(p, lambda1) + *B2 * std::pow(p, lambda2);
        case Regime::InfiniteValue:
            break;
    }
    throw PreconditionError("EntrySolution::value on InfiniteValue regime");
}

double EntrySolution::derivative(double p) const {
    if (!(p > 0.0))
        throw DomainError("H' is defined for p > 0, got p = " + std::to_string(p));
    switch (regime) {
        case Regime::I_EnterNow_NeverExit:
            return q;
        case Regime::II_SingleEntry_NeverExit:
            if (p < *p_I) return lambda2 * *B * std::pow(p, lambda2 - 1.0);
            return q;
        case Regime::III_EnterNow_Exit:
        case Regime::V_EnterNow_Exit_NegSum:
            if (p <= p_O) return 0.0;
            return lambda1 * A * std::pow(p, lambda1 - 1.0) + q;
        case Regime::IV_SingleEntry_Exit:
            if (p < *p_I) return lambda2 * *B * std::pow(p, lambda2 - 1.0);
            return lambda1 * A * std::pow(p, lambda1 - 1.0) + q;
        case Regime::VI_DoubleEntry_Exit:
            if (p <= *p_I1) return 0.0;
            if (p >= *p_I2) return lambda1 * A * std::pow(p, lambda1 - 1.0) + q;
            return lambda1 * *B1 * std::pow(p, lambda1 - 1.0) +
                   lambda2 * *B2 * std::pow(p, lambda2 - 1.0);
        case Regime::InfiniteValue:
            break;
    }
    throw PreconditionError("EntrySolution::derivative on InfiniteValue regime");
}

}  // namespace entryexit
