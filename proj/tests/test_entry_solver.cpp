#include <doctest.h>

#include <cmath>

#include "entryexit/entry_solver.hpp"
#include "entryexit/errors.hpp"
#include "testutil.hpp"

using namespace entryexit;
using namespace testutil;

namespace {

struct Solved {
    ProjectParams p;
    LambdaPair l;
    ExitSolution ex;
    EntrySolution en;
};

Solved full_solve(const ProjectParams& p) {
    Solved s;
    s.p = p;
    s.l = lambda_roots(p);
    s.ex = solve_exit(p, s.l);
    s.en = solve_entry(p, s.l, s.ex, transform_coeffs(p));
    return s;
}

// residuals of the four value-matching / smooth-pasting equations of the
// double-trigger band, scaled
double band_system_residual(const Solved& s) {
    const double l1 = s.l.lambda1, l2 = s.l.lambda2;
    const double p1 = *s.en.p_I1, p2 = *s.en.p_I2;
    const double B1 = *s.en.B1, B2 = *s.en.B2;
    const double q = s.en.q, w = s.en.w;
    const double c = -s.en.pay_low;  // e^{-r d}(K_I+K_O)
    const double A = s.en.A;
    const double scale = std::max({1.0, std::abs(w), std::abs(c)});
    const double e1 =
        B1 * std::pow(p1, l1) + B2 * std::pow(p1, l2) - (-c);
    const double e2 =
        l1 * B1 * std::pow(p1, l1) + l2 * B2 * std::pow(p1, l2);
    const double e3 = B1 * std::pow(p2, l1) + B2 * std::pow(p2, l2) -
                      (A * std::pow(p2, l1) + q * p2 - w);
    const double e4 = l1 * B1 * std::pow(p2, l1) + l2 * B2 * std::pow(p2, l2) -
                      (l1 * A * std::pow(p2, l1) + q * p2);
    return std::max({std::abs(e1), std::abs(e2), std::abs(e3), std::abs(e4)}) /
           scale;
}

double pasting_gap(double a, double b) {
    return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace

TEST_CASE("running example: double trigger matches the published figures") {
    const Solved s = full_solve(golden());
    REQUIRE(s.en.regime == Regime::VI_DoubleEntry_Exit);
    CHECK(std::abs(*s.en.p_I1 - 1.96101) < 1e-4);
    CHECK(std::abs(*s.en.p_I2 - 6.94641) < 1e-4);
    CHECK(rel_err(*s.en.p_I1, oracle::p_I1) < 1e-9);
    CHECK(rel_err(*s.en.p_I2, oracle::p_I2) < 1e-9);
    CHECK(rel_err(*s.en.B1, oracle::B1) < 1e-8);
    CHECK(rel_err(*s.en.B2, oracle::B2) < 1e-8);
    CHECK(*s.en.B1 > 0.0);
    CHECK(*s.en.B2 > 0.0);
    CHECK(*s.en.p_I1 <= s.ex.p_O);
    CHECK(s.ex.p_O < *s.en.p_I2);
    CHECK(band_system_residual(s) < 1e-10);
}

TEST_CASE("entry residual identity at the exit trigger") {
    const Solved s = full_solve(golden());
    const double got = entry_residual(s.p, s.l, s.ex.A, s.ex.p_O);
    const double want = -s.l.lambda2 * std::exp(-s.p.r * s.p.delta) *
                        (s.p.K_I + s.p.K_O);
    CHECK(rel_err(got, want) < 1e-10);
    CHECK(rel_err(got, oracle::E_at_pO) < 1e-10);
}

TEST_CASE("entry residual is positive far out") {
    const Solved s = full_solve(case_iv());
    CHECK(entry_residual(s.p, s.l, s.ex.A, 1e4 * s.ex.p_O) > 0.0);
    CHECK_THROWS_AS(entry_residual(s.p, s.l, s.ex.A, 0.0), DomainError);
}

TEST_CASE("case II: closed-form trigger") {
    const Solved s = full_solve(case_ii());
    REQUIRE(s.en.regime == Regime::II_SingleEntry_NeverExit);
    CHECK(rel_err(*s.en.p_I, case_ii_p_I) < 1e-12);
    CHECK(rel_err(*s.en.B, case_ii_B) < 1e-12);
    // smooth pasting at the trigger
    const double pI = *s.en.p_I;
    const double below = *s.en.B * std::pow(pI, s.l.lambda2);
    const double above = s.en.q * pI - s.en.w;
    CHECK(pasting_gap(below, above) < 1e-12);
    const double d_below =
        s.l.lambda2 * *s.en.B * std::pow(pI, s.l.lambda2 - 1.0);
    CHECK(pasting_gap(d_below, s.en.q) < 1e-12);
    // trigger bound
    CHECK(pI > std::exp(-s.p.mu * s.p.delta) * (s.p.C + s.p.r * s.p.K_I));
}

TEST_CASE("case IV: largest root of the entry equation") {
    const Solved s = full_solve(case_iv());
    REQUIRE(s.en.regime == Regime::IV_SingleEntry_Exit);
    CHECK(rel_err(s.ex.p_O, case_iv_p_O) < 1e-12);
    CHECK(rel_err(*s.en.p_I, case_iv_p_I) < 1e-9);
    const double resid = entry_residual(s.p, s.l, s.ex.A, *s.en.p_I);
    CHECK(std::abs(resid) < 1e-10 * std::max(1.0, std::abs(s.en.w)));
    CHECK(*s.en.p_I > case_iv_gate_entry);
    CHECK(*s.en.p_I > s.ex.p_O);
}

TEST_CASE("case IV: the entry equation has exactly two sign changes") {
    Fuzzer fz(41);
    int seen = 0;
    while (seen < 200) {
        const ProjectParams p = fz.regime_iv();
        if (classify(p, solve_exit(p, lambda_roots(p)).p_O) !=
            Regime::IV_SingleEntry_Exit)
            continue;
        ++seen;
        const Solved s = full_solve(p);
        // scan from where the power term alone exceeds the constant term
        // (E > 0 there) to where the linear term alone does
        const double l1 = s.l.lambda1, l2 = s.l.lambda2;
        const double cw = l2 * s.en.w;
        const double lo =
            0.5 * std::pow(cw / (s.ex.A * (l2 - l1)), 1.0 / l1);
        const double hi =
            2.0 * std::max(2.0 * cw / (s.en.q * (l2 - 1.0)), *s.en.p_I);
        int changes = 0;
        double prev = entry_residual(s.p, s.l, s.ex.A, lo);
        CHECK(prev > 0.0);
        for (int k = 1; k <= 6000; ++k) {
            const double x = lo * std::pow(hi / lo, k / 6000.0);
            const double cur = entry_residual(s.p, s.l, s.ex.A, x);
            if ((prev < 0.0) != (cur < 0.0)) ++changes;
            prev = cur;
        }
        CHECK(changes == 2);
    }
}

TEST_CASE("degenerate cost sum: the band collapses onto the single trigger") {
    ProjectParams vi = case_iv();
    vi.K_I = -vi.K_O - 1e-6;  // sum just below zero
    const Solved sv = full_solve(vi);
    REQUIRE(sv.en.regime == Regime::VI_DoubleEntry_Exit);

    ProjectParams iv = case_iv();
    iv.K_I = -iv.K_O;  // sum exactly zero -> case IV
    const Solved si = full_solve(iv);
    REQUIRE(si.en.regime == Regime::IV_SingleEntry_Exit);

    CHECK(std::abs(*sv.en.p_I2 - *si.en.p_I) < 1e-3);
    CHECK(*sv.en.p_I1 < 0.05 * sv.ex.p_O);
    CHECK(*sv.en.B1 < 1e-4);
}

TEST_CASE("cross-checked double-trigger solve agrees with the default") {
    const Solved s = full_solve(golden());
    const DoubleTrigger dt =
        solve_double_trigger_checked(s.p, s.l, s.ex.A, s.ex.p_O);
    CHECK(rel_err(dt.p_I1, *s.en.p_I1) < 1e-9);
    CHECK(rel_err(dt.p_I2, *s.en.p_I2) < 1e-9);
}

TEST_CASE("eval: immediate-entry regimes") {
    ProjectParams p = golden();
    p.K_O = 60.0;
    p.K_I = -60.0;  // regime I
    const Solved s = full_solve(p);
    REQUIRE(s.en.regime == Regime::I_EnterNow_NeverExit);
    for (double x : {0.5, 1.0, 4.0, 9.0})
        CHECK(rel_err(s.en.value(x), s.en.q * x - s.en.w) < 1e-14);

    ProjectParams p3 = golden();
    p3.K_I = -60.0;  // regime III
    const Solved s3 = full_solve(p3);
    REQUIRE(s3.en.regime == Regime::III_EnterNow_Exit);
    const double below = s3.en.value(0.5 * s3.ex.p_O);
    CHECK(below ==
          doctest::Approx(-std::exp(-p3.r * p3.delta) * (p3.K_I + p3.K_O))
              .epsilon(1e-14));
}

TEST_CASE("eval: band interior and flat segment") {
    const Solved s = full_solve(golden());
    const double flat = s.en.value(0.5 * *s.en.p_I1);
    CHECK(flat == doctest::Approx(-std::exp(-0.2) * (-10.0)).epsilon(1e-12));
    const double mid = s.en.value(3.0);
    CHECK(rel_err(mid, oracle::H_at_3) < 1e-9);
    CHECK(rel_err(s.en.value(1.0), oracle::H_at_1) < 1e-12);
    CHECK(rel_err(s.en.value(10.0), oracle::H_at_10) < 1e-9);
    CHECK_THROWS_AS(s.en.value(0.0), DomainError);
    CHECK_THROWS_AS(s.en.value(-3.0), DomainError);
}

TEST_CASE("fuzz: smooth pasting, bounds, arbitrage remark across regimes") {
    Fuzzer fz(92);
    int n_ii = 0, n_iv = 0, n_vi = 0;
    while (n_ii < 300 || n_iv < 300 || n_vi < 300) {
        ProjectParams p;
        const int which = (n_vi < 300) ? 2 : (n_iv < 300 ? 1 : 0);
        if (which == 2)
            p = fz.regime_neg_sum();
        else if (which == 1)
            p = fz.regime_iv();
        else
            p = fz.regime_ii();

        const Solved s = full_solve(p);
        const double gate_in =
            std::exp(-p.mu * p.delta) * (p.C + p.r * p.K_I);
        const double gate_out =
            std::exp(-p.mu * p.delta) * (p.C - p.r * p.K_O);

        switch (s.en.regime) {
            case Regime::II_SingleEntry_NeverExit: {
                ++n_ii;
                const double pI = *s.en.p_I;
                CHECK(pI > gate_in * (1.0 - 1e-12));
                CHECK(*s.en.B > 0.0);
                const double v0 = *s.en.B * std::pow(pI, s.l.lambda2);
                const double v1 = s.en.q * pI - s.en.w;
                CHECK(pasting_gap(v0, v1) < 1e-10);
                const double d0 =
                    s.l.lambda2 * *s.en.B * std::pow(pI, s.l.lambda2 - 1.0);
                CHECK(pasting_gap(d0, s.en.q) < 1e-8);
                // H nondecreasing below the trigger
                double prev = s.en.value(pI * 0.01);
                for (double f : {0.1, 0.3, 0.6, 0.9, 0.999}) {
                    const double cur = s.en.value(pI * f);
                    CHECK(cur >= prev - 1e-12);
                    prev = cur;
                }
                break;
            }
            case Regime::IV_SingleEntry_Exit: {
                ++n_iv;
                const double pI = *s.en.p_I;
                CHECK(pI > gate_in * (1.0 - 1e-12));
                CHECK(*s.en.B > 0.0);
                const double v0 = *s.en.B * std::pow(pI, s.l.lambda2);
                const double v1 = s.en.A * std::pow(pI, s.l.lambda1) +
                                  s.en.q * pI - s.en.w;
                CHECK(pasting_gap(v0, v1) < 1e-10);
                const double d0 =
                    s.l.lambda2 * *s.en.B * std::pow(pI, s.l.lambda2 - 1.0);
                const double d1 =
                    s.l.lambda1 * s.en.A * std::pow(pI, s.l.lambda1 - 1.0) +
                    s.en.q;
                CHECK(pasting_gap(d0, d1) < 1e-8);
                break;
            }
            case Regime::VI_DoubleEntry_Exit: {
                ++n_vi;
                CHECK(band_system_residual(s) < 1e-8);
                CHECK(*s.en.B1 > 0.0);
                CHECK(*s.en.B2 > 0.0);
                CHECK(*s.en.p_I1 <= s.ex.p_O * (1.0 + 1e-12));
                CHECK(*s.en.p_I1 < gate_out);
                CHECK(*s.en.p_I2 > gate_in * (1.0 - 1e-12));
                // waiting strictly beats enter-and-immediately-exit inside
                // the band
                const double arb = s.en.pay_low;
                for (double f : {0.25, 0.5, 0.75}) {
                    const double x =
                        *s.en.p_I1 + f * (*s.en.p_I2 - *s.en.p_I1);
                    CHECK(s.en.value(x) > arb);
                }
                break;
            }
            default:
                break;  // V or others from the neg-sum sampler
        }
    }
}
