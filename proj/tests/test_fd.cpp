#include <doctest.h>

#include <cmath>

#include "entryexit/errors.hpp"
#include "entryexit/fd.hpp"
#include "entryexit/policy.hpp"
#include "testutil.hpp"

using namespace entryexit;
using namespace testutil;

namespace {

FdConfig grid(int n, double lo = 0.2, double hi = 20.0) {
    FdConfig cfg;
    cfg.n_nodes = n;
    cfg.p_min = lo;
    cfg.p_max = hi;
    return cfg;
}

// sup-norm error relative to the sup of the exact values
template <typename Exact>
double rel_sup_error(const FdResult& res, Exact&& exact) {
    double emax = 0.0, vmax = 0.0;
    for (size_t i = 0; i < res.prices.size(); ++i) {
        const double ex = exact(res.prices[i]);
        emax = std::max(emax, std::abs(res.values[i] - ex));
        vmax = std::max(vmax, std::abs(ex));
    }
    return emax / vmax;
}

}  // namespace

TEST_CASE("exit stage reproduces the closed form on the running example") {
    const Solution s = std::get<Solution>(solve(golden()));
    const FdResult res =
        fd_value_function(golden(), FdStage::ExitValue, &s.exit, grid(4000));
    const double err = rel_sup_error(res, [&](double p) { return s.exit.value(p); });
    CHECK(err < 0.01);
    CHECK(err < 1e-3);  // comfortably inside the gate on this example
}

TEST_CASE("entry stage reproduces the closed form on the running example") {
    const Solution s = std::get<Solution>(solve(golden()));
    const FdResult res =
        fd_value_function(golden(), FdStage::EntryValue, &s.exit, grid(4000));
    const double err =
        rel_sup_error(res, [&](double p) { return s.entry.value(p); });
    CHECK(err < 0.01);
}

TEST_CASE("error at least halves when the node count doubles") {
    const Solution s = std::get<Solution>(solve(golden()));
    for (const FdStage stage : {FdStage::ExitValue, FdStage::EntryValue}) {
        double prev = 0.0;
        for (int level = 0; level < 3; ++level) {
            const FdResult res =
                fd_value_function(golden(), stage, &s.exit, grid(1000 << level));
            const double err = rel_sup_error(res, [&](double p) {
                return stage == FdStage::ExitValue ? s.exit.value(p)
                                                   : s.entry.value(p);
            });
            if (level > 0) {
                INFO("stage ", int(stage), " level ", level, " err ", err,
                     " prev ", prev);
                CHECK(err <= 0.5 * prev);
            }
            prev = err;
        }
    }
}

TEST_CASE("discrete exercise band edges sit within two cells of the triggers") {
    const Solution s = std::get<Solution>(solve(golden()));
    const FdConfig cfg = grid(4000);
    const FdResult res =
        fd_value_function(golden(), FdStage::EntryValue, &s.exit, cfg);
    const double h =
        (std::log(cfg.p_max) - std::log(cfg.p_min)) / (cfg.n_nodes - 1);

    const auto in_contact = [&](size_t i) {
        return res.values[i] - res.obstacle[i] <=
               1e-6 * std::max(1.0, std::abs(res.obstacle[i]));
    };
    size_t low_edge = 0;
    for (size_t i = 0; i + 1 < res.prices.size(); ++i) {
        if (in_contact(i) && !in_contact(i + 1)) {
            low_edge = i;
            break;
        }
    }
    size_t high_edge = res.prices.size() - 1;
    for (size_t i = res.prices.size() - 1; i > 0; --i) {
        if (in_contact(i) && !in_contact(i - 1)) {
            high_edge = i;
            break;
        }
    }
    CHECK(std::abs(std::log(res.prices[low_edge] / *s.entry.p_I1)) <=
          2.0 * h + 1e-12);
    CHECK(std::abs(std::log(res.prices[high_edge] / *s.entry.p_I2)) <=
          2.0 * h + 1e-12);
}

TEST_CASE("projection lands exactly on the obstacle where it binds") {
    const Solution s = std::get<Solution>(solve(golden()));
    const FdResult res =
        fd_value_function(golden(), FdStage::ExitValue, &s.exit, grid(500));
    bool saw_contact = false;
    for (size_t i = 0; i < res.prices.size(); ++i) {
        if (res.prices[i] < 0.8 * s.exit.p_O) {
            CHECK(res.values[i] == res.obstacle[i]);
            saw_contact = true;
        }
        CHECK(res.values[i] >= res.obstacle[i]);
    }
    CHECK(saw_contact);
}

TEST_CASE("no-trigger exit stage matches the linear value") {
    ProjectParams p = golden();
    p.K_O = 80.0;  // C <= r K_O: never exit
    const Solution s = std::get<Solution>(solve(p));
    const FdResult res =
        fd_value_function(p, FdStage::ExitValue, &s.exit, grid(1000));
    const double err = rel_sup_error(res, [&](double x) { return s.exit.value(x); });
    CHECK(err < 0.01);
}

TEST_CASE("single-trigger entry stage with the power closure") {
    const ProjectParams p = case_iv();
    const Solution s = std::get<Solution>(solve(p));
    const FdResult res = fd_value_function(p, FdStage::EntryValue, &s.exit,
                                           grid(2000, 0.3, 60.0));
    const double err =
        rel_sup_error(res, [&](double x) { return s.entry.value(x); });
    CHECK(err < 0.01);
}

TEST_CASE("configuration guards") {
    const Solution s = std::get<Solution>(solve(golden()));
    CHECK_THROWS_AS(
        fd_value_function(golden(), FdStage::ExitValue, &s.exit, grid(20)),
        ConfigError);
    FdConfig bad = grid(200);
    bad.psor_omega = 2.5;
    CHECK_THROWS_AS(fd_value_function(golden(), FdStage::ExitValue, &s.exit, bad),
                    ConfigError);
    // grid that misses the exit trigger entirely
    CHECK_THROWS_AS(fd_value_function(golden(), FdStage::ExitValue, &s.exit,
                                      grid(200, 5.0, 20.0)),
                    ConfigError);
    CHECK_THROWS_AS(
        fd_value_function(golden(), FdStage::EntryValue, nullptr, grid(200)),
        ConfigError);
}

TEST_CASE("sweep cap raises a convergence error") {
    const Solution s = std::get<Solution>(solve(golden()));
    FdConfig cfg = grid(800);
    cfg.max_sweeps = 3;
    cfg.tol = 1e-12;
    CHECK_THROWS_AS(fd_value_function(golden(), FdStage::ExitValue, &s.exit, cfg),
                    ConvergenceError);
}
