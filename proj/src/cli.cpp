#include "entryexit/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>
#include <variant>

#include <json.hpp>

#include "entryexit/errors.hpp"

namespace entryexit::cli {

using nlohmann::json;

std::string fmt9(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", x);
    return buf;
}

double round9(double x) { return std::strtod(fmt9(x).c_str(), nullptr); }

ProjectParams params_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    const std::set<std::string> known = {"r",  "mu",  "sigma", "delta",
                                         "C", "K_I", "K_O",   "p0"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key))
            throw ConfigError("unknown config key: " + key);
    const auto need = [&](const char* key) -> double {
        if (!j.contains(key))
            throw ConfigError(std::string("missing config key: ") + key);
        if (!j.at(key).is_number())
            throw ConfigError(std::string("config key is not a number: ") + key);
        return j.at(key).get<double>();
    };
    ProjectParams p;
    p.r = need("r");
    p.mu = need("mu");
    p.sigma = need("sigma");
    p.delta = need("delta");
    p.C = need("C");
    p.K_I = need("K_I");
    p.K_O = need("K_O");
    p.p0 = need("p0");
    return validate(p);
}

namespace {

void jput(json& j, const char* key, const std::optional<double>& v) {
    if (v) j[key] = round9(*v);
}

json report_json(const DecisionReport& rep) {
    json j;
    j["regime"] = rep.regime;
    jput(j, "p_O", rep.p_O);
    jput(j, "p_I", rep.p_I);
    jput(j, "p_I1", rep.p_I1);
    jput(j, "p_I2", rep.p_I2);
    jput(j, "A", rep.A);
    jput(j, "B", rep.B);
    jput(j, "B1", rep.B1);
    jput(j, "B2", rep.B2);
    jput(j, "lambda1", rep.lambda1);
    jput(j, "lambda2", rep.lambda2);
    jput(j, "k1", rep.k1);
    jput(j, "k0", rep.k0);
    jput(j, "l1", rep.l1);
    jput(j, "l0", rep.l0);
    jput(j, "J_at_p0", rep.J_at_p0);
    return j;
}

const char* kReportFields[] = {"regime", "p_O", "p_I",     "p_I1",    "p_I2",
                               "A",      "B",   "B1",      "B2",      "lambda1",
                               "lambda2", "k1", "k0",      "l1",      "l0",
                               "J_at_p0"};

std::string report_csv(const DecisionReport& rep) {
    const json j = report_json(rep);
    std::ostringstream head, row;
    bool first = true;
    for (const char* f : kReportFields) {
        if (!first) {
            head << ",";
            row << ",";
        }
        first = false;
        head << f;
        if (!j.contains(f)) continue;
        if (j.at(f).is_string())
            row << j.at(f).get<std::string>();
        else
            row << fmt9(j.at(f).get<double>());
    }
    return head.str() + "\n" + row.str() + "\n";
}

json outcome_json(const PolicyOutcome& o) {
    json j;
    j["mean"] = round9(o.mean);
    j["std_error"] = round9(o.std_error);
    j["n_effective"] = o.n_effective;
    j["truncation_bound"] = round9(o.truncation_bound);
    j["n_overflow"] = o.n_overflow;
    return j;
}

json rules_json(const EntryRule& er, const ExitRule& xr) {
    json j;
    switch (er.kind) {
        case EntryRule::Kind::Never: j["entry"] = "never"; break;
        case EntryRule::Kind::Immediately: j["entry"] = "immediately"; break;
        case EntryRule::Kind::HitAbove:
            j["entry"] = "hit_above";
            j["p_I"] = round9(er.upper);
            break;
        case EntryRule::Kind::HitOutsideBand:
            j["entry"] = "hit_outside_band";
            j["p_I1"] = round9(er.lower);
            j["p_I2"] = round9(er.upper);
            break;
    }
    if (xr.kind == ExitRule::Kind::Never) {
        j["exit"] = "never";
    } else {
        j["exit"] = "first_below_after_entry";
        j["p_O"] = round9(xr.threshold);
    }
    return j;
}

// Applies --override-pI2 to the upper entry trigger.
EntryRule apply_override(const EntryRule& rule, std::optional<double> ov) {
    if (!ov) return rule;
    EntryRule out = rule;
    switch (rule.kind) {
        case EntryRule::Kind::HitAbove:
        case EntryRule::Kind::HitOutsideBand:
            out.upper = *ov;
            if (out.kind == EntryRule::Kind::HitOutsideBand &&
                !(out.upper > out.lower))
                throw ConfigError("--override-pI2 must stay above the lower trigger");
            if (!(out.upper > 0.0))
                throw ConfigError("--override-pI2 must be positive");
            return out;
        default:
            throw ConfigError("no upper entry trigger to override in this regime");
    }
}

}  // namespace

std::string render_solve(const SolveResult& result, const std::string& format) {
    const DecisionReport rep = describe(result);
    if (format == "csv") return report_csv(rep);
    if (format == "json") return report_json(rep).dump(2) + "\n";
    throw ConfigError("unknown format: " + format);
}

std::string render_table(const Solution& sol, const TableOptions& opts,
                         const std::string& format) {
    if (!(opts.p_min > 0.0)) throw ConfigError("table needs p_min > 0");
    if (!(opts.p_max >= opts.p_min))
        throw ConfigError("table needs p_max >= p_min");
    if (opts.n_steps < 1) throw ConfigError("table needs steps >= 1");

    const int n_rows = opts.p_min == opts.p_max ? 1 : opts.n_steps + 1;
    const double step =
        n_rows == 1 ? 0.0 : (opts.p_max - opts.p_min) / opts.n_steps;

    json rows = json::array();
    for (int i = 0; i < n_rows; ++i) {
        const double p = opts.p_min + step * i;
        json row;
        row["p"] = round9(p);
        row["G"] = round9(sol.exit.value(p));
        row["H"] = round9(sol.entry.value(p));
        row["exit_obstacle"] = round9(sol.exit.stop_payoff(p));
        row["entry_obstacle"] =
            round9(sol.exit.value(p) - sol.coeffs.k1 * p - sol.coeffs.k0);
        rows.push_back(row);
    }
    if (format == "json") return rows.dump(2) + "\n";
    if (format != "csv") throw ConfigError("unknown format: " + format);
    std::ostringstream os;
    os << "p,G,H,exit_obstacle,entry_obstacle\n";
    for (const auto& row : rows)
        os << fmt9(row["p"].get<double>()) << ","
           << fmt9(row["G"].get<double>()) << ","
           << fmt9(row["H"].get<double>()) << ","
           << fmt9(row["exit_obstacle"].get<double>()) << ","
           << fmt9(row["entry_obstacle"].get<double>()) << "\n";
    return os.str();
}

std::string render_simulate(const ProjectParams& params, const Solution& sol,
                            const McConfig& mc,
                            std::optional<double> override_pI2) {
    McConfig cfg = mc;
    if (cfg.t_max <= 0.0)
        cfg.t_max = choose_t_max(params, sol.value(params.p0));
    const EntryRule entry = apply_override(sol.entry_rule, override_pI2);
    const PolicyOutcome out = simulate_policy(params, entry, sol.exit_rule, cfg);
    json j;
    j["rules"] = rules_json(entry, sol.exit_rule);
    j["outcome"] = outcome_json(out);
    j["J_at_p0"] = round9(sol.value(params.p0));
    j["t_max"] = round9(cfg.t_max);
    j["dt"] = round9(cfg.dt);
    j["n_paths"] = cfg.n_paths;
    j["seed"] = cfg.seed;
    return j.dump(2) + "\n";
}

namespace {

// Composite verification: MC vs closed form, FD error table + convergence,
// dominance, transform equivalence, martingale sanity, and (regime VI) the
// double-trigger solver cross-check.
json verify_checks(const ProjectParams& params, const Solution& sol,
                   const VerifyOptions& opts, bool& all_pass) {
    json checks = json::array();
    const auto push = [&](const std::string& name, bool pass, json detail) {
        detail["name"] = name;
        detail["pass"] = pass;
        checks.push_back(detail);
        all_pass = all_pass && pass;
    };

    McConfig mc = opts.mc;
    const double H0 = sol.value(params.p0);
    if (mc.t_max <= 0.0) mc.t_max = choose_t_max(params, H0);

    const EntryRule entry = apply_override(sol.entry_rule, opts.override_pI2);

    // 1. martingale sanity at t = 1
    {
        McConfig m = mc;
        m.n_paths = std::min<long>(mc.n_paths, 20000);
        m.t_max = 1.0;
        const PolicyOutcome o = martingale_check(params, 1.0, m);
        const bool pass = std::abs(o.mean - 1.0) <= 3.0 * o.std_error;
        json d;
        d["mean"] = round9(o.mean);
        d["std_error"] = round9(o.std_error);
        push("martingale", pass, d);
    }

    // 2. MC payoff under the (possibly overridden) rules vs closed form
    {
        const PolicyOutcome o = simulate_policy(params, entry, sol.exit_rule, mc);
        const double tol = std::max(3.0 * o.std_error, 0.02 * std::abs(H0));
        const bool pass = std::abs(o.mean - H0) <= tol;
        json d;
        d["mean"] = round9(o.mean);
        d["std_error"] = round9(o.std_error);
        d["closed_form"] = round9(H0);
        d["tolerance"] = round9(tol);
        d["truncation_bound"] = round9(o.truncation_bound);
        push("mc_vs_closed_form", pass, d);
    }

    // 3. FD error table + first-order convergence, both stages
    {
        double lo = sol.exit.has_trigger ? sol.exit.p_O : params.p0;
        double hi = sol.exit.has_trigger ? sol.exit.p_O : params.p0;
        if (sol.entry.p_I) {
            lo = std::min(lo, *sol.entry.p_I);
            hi = std::max(hi, *sol.entry.p_I);
        }
        if (sol.entry.p_I1) lo = std::min(lo, *sol.entry.p_I1);
        if (sol.entry.p_I2) hi = std::max(hi, *sol.entry.p_I2);
        FdConfig fd;
        fd.p_min = std::min(lo, params.p0) / 8.0;
        fd.p_max = 4.0 * std::max(hi, params.p0);

        for (const FdStage stage : {FdStage::ExitValue, FdStage::EntryValue}) {
            const char* label =
                stage == FdStage::ExitValue ? "fd_exit_value" : "fd_entry_value";
            json d;
            json errs = json::array();
            double prev_err = 0.0;
            bool pass = true;
            for (int level = 0; level < 3; ++level) {
                fd.n_nodes = opts.fd_nodes >> (2 - level);
                const FdResult res =
                    fd_value_function(params, stage, &sol.exit, fd);
                double emax = 0.0, vmax = 0.0;
                for (size_t i = 0; i < res.prices.size(); ++i) {
                    const double ex = stage == FdStage::ExitValue
                                          ? sol.exit.value(res.prices[i])
                                          : sol.entry.value(res.prices[i]);
                    emax = std::max(emax, std::abs(res.values[i] - ex));
                    vmax = std::max(vmax, std::abs(ex));
                }
                const double rel = emax / vmax;
                errs.push_back(round9(rel));
                if (level > 0 && !(rel <= 0.5 * prev_err)) pass = false;
                prev_err = rel;
            }
            const double finest = errs.back().get<double>();
            pass = pass && finest < 0.01;
            d["rel_errors"] = errs;
            push(label, pass, d);
        }
    }

    // 4. dominance against perturbed rules
    {
        const DominanceReport rep =
            policy_dominance_check(params, entry, sol.exit_rule, mc);
        json d;
        d["optimal_mean"] = round9(rep.optimal.mean);
        json comp = json::array();
        for (const auto& c : rep.competitors) {
            json e;
            e["label"] = c.label;
            e["mean"] = round9(c.outcome.mean);
            e["diff"] = round9(c.diff_mean);
            e["diff_se"] = round9(c.diff_se);
            e["pass"] = c.pass;
            comp.push_back(e);
        }
        d["competitors"] = comp;
        push("dominance", rep.all_pass, d);
    }

    // 5. transform equivalence on five threshold policies (plus the exact
    //    delta = 0 coupling)
    {
        std::vector<std::pair<EntryRule, ExitRule>> policies;
        policies.emplace_back(sol.entry_rule, sol.exit_rule);
        if (sol.entry_rule.kind == EntryRule::Kind::HitOutsideBand)
            policies.emplace_back(
                EntryRule::hit_outside_band(sol.entry_rule.lower * 0.9,
                                            sol.entry_rule.upper * 1.1),
                sol.exit_rule);
        else if (sol.entry_rule.kind == EntryRule::Kind::HitAbove)
            policies.emplace_back(EntryRule::hit_above(sol.entry_rule.upper * 1.1),
                                  sol.exit_rule);
        else
            policies.emplace_back(EntryRule::hit_above(1.3 * params.p0),
                                  sol.exit_rule);
        policies.emplace_back(EntryRule::hit_above(1.2 * params.p0),
                              sol.exit_rule);
        policies.emplace_back(EntryRule::immediately(), sol.exit_rule);
        policies.emplace_back(EntryRule::immediately(), ExitRule::never());

        McConfig eq = mc;
        eq.n_paths = std::max<long>(2, mc.n_paths / 2);
        bool pass = true;
        json rows = json::array();
        for (const auto& [er, xr] : policies) {
            const EquivalenceOutcome o =
                delayed_payoff_equivalence_residual(params, er, xr, eq);
            const double tol = 3.0 * o.residual_se +
                               1e-12 * (1.0 + std::abs(o.mean_delayed));
            const bool ok = std::abs(o.residual_mean) <= tol;
            pass = pass && ok;
            json e;
            e["rules"] = rules_json(er, xr);
            e["residual"] = round9(o.residual_mean);
            e["residual_se"] = round9(o.residual_se);
            e["pass"] = ok;
            rows.push_back(e);
        }
        // delta = 0 collapses the transform: payoffs match path by path
        {
            ProjectParams inst = params;
            inst.delta = 0.0;
            McConfig eq0 = eq;
            eq0.t_max = std::min(eq.t_max, 20.0);
            const EquivalenceOutcome o = delayed_payoff_equivalence_residual(
                inst, policies[0].first, policies[0].second, eq0);
            const bool ok = o.max_abs_path_residual == 0.0;
            pass = pass && ok;
            json e;
            e["rules"] = "delta_zero_identity";
            e["max_abs_path_residual"] = o.max_abs_path_residual;
            e["pass"] = ok;
            rows.push_back(e);
        }
        json d;
        d["policies"] = rows;
        push("transform_equivalence", pass, d);
    }

    // 6. double-trigger solver cross-check (regime VI only)
    if (sol.regime == Regime::VI_DoubleEntry_Exit) {
        bool pass = true;
        json d;
        try {
            const DoubleTrigger dt = solve_double_trigger_checked(
                params, sol.lambdas, sol.exit.A, sol.exit.p_O);
            d["p_I1"] = round9(dt.p_I1);
            d["p_I2"] = round9(dt.p_I2);
        } catch (const ConvergenceError& e) {
            pass = false;
            d["error"] = e.what();
        }
        push("double_trigger_cross_check", pass, d);
    }

    return checks;
}

}  // namespace

VerifyResult run_verification(const ProjectParams& params,
                              const VerifyOptions& opts) {
    const SolveResult solved = solve(params);
    if (std::holds_alternative<InfiniteValue>(solved))
        throw PreconditionError(
            "verification requires a finite-value problem (r > mu)");
    const Solution& sol = std::get<Solution>(solved);

    bool all_pass = true;
    json j;
    j["checks"] = verify_checks(params, sol, opts, all_pass);
    j["all_pass"] = all_pass;
    j["regime"] = std::string(regime_name(sol.regime));
    VerifyResult out;
    out.report = j.dump(2) + "\n";
    out.all_pass = all_pass;
    return out;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConvergenceError*>(&e)) return 3;
    if (dynamic_cast<const DomainError*>(&e)) return 2;
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const MissingTriggerError*>(&e)) return 2;
    if (dynamic_cast<const PreconditionError*>(&e)) return 2;
    return 1;
}

}  // namespace entryexit::cli
